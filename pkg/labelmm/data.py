#!/usr/bin/env python
"""
Datasets for LabelMM

A Dataset is an immutable collection of samples with 64-bit feature
vectors, observed (possibly noisy) labels and, when known, ground-truth
labels kept for auditing only. Sample ids are dense, 0..N-1, in row order.

The only interchange format is CSV:

    f0,f1,...,f{d-1},label[,truth_label]

UTF-8, LF line endings, '.' decimal separator. Features are written with
the shortest representation that reads back to the identical float.
"""
import csv
import logging
import math

from collections import namedtuple

import numpy as np

from .errors import ConfigError, DataError
from .report import atomic_writer
from .rng import generator

__author__ = "LabelMM developers"

LABEL_COLUMN = 'label'
TRUTH_COLUMN = 'truth_label'
FEATURE_PREFIX = 'f'

Sample = namedtuple('Sample',
                    ['id', 'features', 'observed_label', 'truth_label'])


class LabelSpace(object):
    """
    M classes, indexed 0..M-1, optionally named
    """

    def __init__(self, num_classes, class_names=None):
        num_classes = int(num_classes)
        if num_classes < 2:
            raise ConfigError("A label space needs at least 2 classes, got %d"
                              % num_classes)
        if class_names is not None:
            class_names = list(class_names)
            if len(class_names) != num_classes:
                raise ConfigError("Expected %d class names, got %d"
                                  % (num_classes, len(class_names)))
        self.num_classes = num_classes
        self.class_names = class_names

    def __eq__(self, other):
        return (isinstance(other, LabelSpace) and
                self.num_classes == other.num_classes and
                self.class_names == other.class_names)

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return "LabelSpace(%d)" % self.num_classes


def _frozen(array):
    array.setflags(write=False)
    return array


class Dataset(object):
    """
    An ordered, immutable set of samples sharing one feature dimensionality
    """

    def __init__(self, features, labels, label_space, truth=None,
                 source_ids=None):
        features = np.array(features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise DataError("Features must be a 2-d array")
        labels = np.array(labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != features.shape[0]:
            raise DataError("%d labels for %d feature rows"
                            % (labels.shape[0], features.shape[0]))
        self.label_space = label_space
        m = label_space.num_classes
        bad = np.flatnonzero((labels < 0) | (labels >= m))
        if bad.size:
            raise DataError("Sample %d has label %d outside [0, %d)"
                            % (bad[0], labels[bad[0]], m))
        if truth is not None:
            truth = np.array(truth, dtype=np.int64).reshape(-1)
            if truth.shape != labels.shape:
                raise DataError("Truth labels do not match the sample count")
            bad = np.flatnonzero((truth < 0) | (truth >= m))
            if bad.size:
                raise DataError("Sample %d has truth label %d outside [0, %d)"
                                % (bad[0], truth[bad[0]], m))
            truth = _frozen(truth)
        if source_ids is None:
            source_ids = np.arange(labels.shape[0], dtype=np.int64)
        else:
            source_ids = np.array(source_ids, dtype=np.int64).reshape(-1)

        self.features = _frozen(features)
        self.labels = _frozen(labels)
        self.truth = truth
        self.source_ids = _frozen(source_ids)

    def __len__(self):
        return self.labels.shape[0]

    def __getitem__(self, sample_id):
        truth = None if self.truth is None else int(self.truth[sample_id])
        return Sample(int(sample_id), self.features[sample_id],
                      int(self.labels[sample_id]), truth)

    def __iter__(self):
        for sample_id in range(len(self)):
            yield self[sample_id]

    @property
    def samples(self):
        return list(self)

    @property
    def ids(self):
        return np.arange(len(self), dtype=np.int64)

    @property
    def feature_dim(self):
        return self.features.shape[1]

    @property
    def num_classes(self):
        return self.label_space.num_classes

    @property
    def has_truth(self):
        return self.truth is not None

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, ids):
        """ a new Dataset of the given ids, re-indexed densely """
        ids = np.asarray(ids, dtype=np.int64)
        truth = None if self.truth is None else self.truth[ids]
        return Dataset(self.features[ids], self.labels[ids], self.label_space,
                       truth=truth, source_ids=self.source_ids[ids])

    def with_labels(self, labels, truth=None):
        """ the same samples with replaced observed (and truth) labels """
        if truth is None:
            truth = self.truth
        return Dataset(self.features, labels, self.label_space, truth=truth,
                       source_ids=self.source_ids)

    def equals(self, other):
        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(a, b)
        return (self.label_space == other.label_space and
                same(self.features, other.features) and
                same(self.labels, other.labels) and
                same(self.truth, other.truth))

    def __repr__(self):
        return "<Dataset N=%d d=%d M=%d>" % (
            len(self), self.feature_dim, self.num_classes)


def concat(datasets):
    """ stack datasets sharing a label space; ids are reassigned densely """
    first = datasets[0]
    for other in datasets[1:]:
        if other.label_space != first.label_space or \
                other.feature_dim != first.feature_dim:
            raise DataError("Cannot concatenate datasets of different shape")
    with_truth = all(d.has_truth for d in datasets)
    truth = np.concatenate([d.truth for d in datasets]) if with_truth else None
    return Dataset(np.concatenate([d.features for d in datasets]),
                   np.concatenate([d.labels for d in datasets]),
                   first.label_space, truth=truth,
                   source_ids=np.concatenate([d.source_ids for d in datasets]))


class CsvSchema(object):
    """
    Column mapping for load_csv.

    feature_columns defaults to every header column named f<k>, in header
    order. num_classes defaults to one more than the largest label seen.
    """

    def __init__(self, feature_columns=None, label_column=LABEL_COLUMN,
                 truth_column=TRUTH_COLUMN, num_classes=None,
                 class_names=None):
        self.feature_columns = feature_columns
        self.label_column = label_column
        self.truth_column = truth_column
        self.num_classes = num_classes
        self.class_names = class_names


def _parse_int(text, row_number, column):
    try:
        return int(text)
    except ValueError:
        raise DataError("Row %d: column '%s' is not an integer label: %r"
                        % (row_number, column, text))


def load_csv(path, schema=None):
    """
    Read a Dataset from CSV. Row numbers in errors count the header as row 1.
    """
    schema = schema or CsvSchema()
    try:
        handle = open(path, 'r', encoding='utf-8', newline='')
    except (IOError, OSError) as e:
        raise DataError("Cannot open %s: %s" % (path, e))

    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("%s is empty" % path)
        header = [name.strip() for name in header]

        if schema.label_column not in header:
            raise DataError("%s has no '%s' column"
                            % (path, schema.label_column))
        feature_columns = schema.feature_columns
        if feature_columns is None:
            feature_columns = [name for name in header
                               if name.startswith(FEATURE_PREFIX) and
                               name[len(FEATURE_PREFIX):].isdigit()]
        missing = [name for name in feature_columns if name not in header]
        if missing or not feature_columns:
            raise DataError("%s is missing feature columns %s"
                            % (path, missing or ['f0']))
        feature_idx = [header.index(name) for name in feature_columns]
        label_idx = header.index(schema.label_column)
        truth_idx = None
        if schema.truth_column and schema.truth_column in header:
            truth_idx = header.index(schema.truth_column)

        features, labels, truth = [], [], []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError("Row %d: expected %d columns, found %d"
                                % (row_number, len(header), len(row)))
            try:
                features.append([float(row[i]) for i in feature_idx])
            except ValueError:
                raise DataError("Row %d: non-numeric feature value"
                                % row_number)
            labels.append(_parse_int(row[label_idx], row_number,
                                     schema.label_column))
            if truth_idx is not None:
                truth.append(_parse_int(row[truth_idx], row_number,
                                        schema.truth_column))

    if not labels:
        raise DataError("%s has no data rows" % path)

    num_classes = schema.num_classes
    if num_classes is None:
        num_classes = max(2, max(labels + truth) + 1)
    for column, values in ((schema.label_column, labels),
                           (schema.truth_column, truth)):
        for offset, value in enumerate(values):
            if not 0 <= value < num_classes:
                raise DataError("Row %d: %s %d outside [0, %d)"
                                % (offset + 2, column, value, num_classes))

    label_space = LabelSpace(num_classes, schema.class_names)
    logging.debug("Loaded %d rows with %d features from %s",
                  len(labels), len(feature_idx), path)
    return Dataset(np.array(features, dtype=np.float64), labels, label_space,
                   truth=truth if truth_idx is not None else None)


def write_csv(dataset, path):
    """
    Write a Dataset so that load_csv reproduces it exactly
    """
    header = ['%s%d' % (FEATURE_PREFIX, k) for k in range(dataset.feature_dim)]
    header.append(LABEL_COLUMN)
    if dataset.has_truth:
        header.append(TRUTH_COLUMN)

    with atomic_writer(path) as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for sample in dataset:
            row = [repr(float(x)) for x in sample.features]
            row.append(sample.observed_label)
            if dataset.has_truth:
                row.append(sample.truth_label)
            writer.writerow(row)


class GaussianSpec(object):
    """
    Isotropic Gaussian classes: one mean vector per class, shared sigma
    """

    def __init__(self, means, sigma):
        self.means = np.array(means, dtype=np.float64)
        self.sigma = float(sigma)
        if self.means.ndim != 2 or self.means.shape[0] < 2:
            raise ConfigError("Need at least 2 class mean vectors")
        if not self.sigma > 0:
            raise ConfigError("Standard deviation must be positive, got %r"
                              % sigma)

    @property
    def num_classes(self):
        return self.means.shape[0]


def pentagon_means(num_classes=5, radius=4.0):
    """ class means evenly spaced on a circle, the 5-class grading analogue """
    angles = 2.0 * np.pi * np.arange(num_classes) / num_classes
    return np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=1)


BENCHMARKS = {
    'synth:2': lambda: GaussianSpec([[-2.0, 0.0], [2.0, 0.0]], 1.0),
    'synth:5': lambda: GaussianSpec(pentagon_means(5, 4.0), 1.0),
}


def benchmark_spec(name, sigma=None):
    try:
        spec = BENCHMARKS[name]()
    except KeyError:
        raise ConfigError("Unknown synthetic benchmark %r (known: %s)"
                          % (name, ', '.join(sorted(BENCHMARKS))))
    if sigma is not None:
        spec = GaussianSpec(spec.means, sigma)
    return spec


def synth_gaussians(spec, n_per_class, seed):
    """
    Draw a balanced, clean dataset. Equal seeds give bitwise-equal data.
    """
    n_per_class = int(n_per_class)
    if n_per_class < 1:
        raise ConfigError("n_per_class must be at least 1")
    rng = generator(seed, 'synth')
    num_classes, dim = spec.means.shape
    truth = np.repeat(np.arange(num_classes, dtype=np.int64), n_per_class)
    noise = rng.standard_normal((truth.shape[0], dim))
    features = spec.means[truth] + spec.sigma * noise
    order = rng.permutation(truth.shape[0])
    return Dataset(features[order], truth[order], LabelSpace(num_classes),
                   truth=truth[order])


class SplitSpec(object):
    """
    Train/validation/test fractions and the split seed
    """

    def __init__(self, train_fraction, val_fraction, test_fraction, seed=0):
        fractions = (float(train_fraction), float(val_fraction),
                     float(test_fraction))
        for value in fractions:
            if not 0.0 < value < 1.0:
                raise ConfigError("Split fractions must lie in (0, 1), got %r"
                                  % (fractions,))
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ConfigError("Split fractions must sum to 1, got %r"
                              % (fractions,))
        self.train_fraction, self.val_fraction, self.test_fraction = fractions
        self.seed = int(seed)


def _round(x):
    return int(math.floor(x + 0.5))


def _allocate(count, spec):
    n_val = _round(spec.val_fraction * count)
    n_test = _round(spec.test_fraction * count)
    return count - n_val - n_test, n_val, n_test


def _apportion(total, sizes, capacity):
    """
    Spread total over groups in proportion to sizes by largest remainder,
    never exceeding capacity. Ties go to the lower group index.
    """
    quotas = total * sizes / float(sizes.sum())
    shares = np.minimum(np.floor(quotas).astype(np.int64), capacity)
    order = np.argsort(-(quotas - np.floor(quotas)), kind='stable')
    left = total - int(shares.sum())
    while left > 0:
        for g in order:
            if left and shares[g] < capacity[g]:
                shares[g] += 1
                left -= 1
    return shares


def split(dataset, spec, stratify=None):
    """
    Partition a Dataset into (train, val, test).

    Split sizes follow the fractions over the whole dataset. Stratifies by
    observed label when every class has at least 3 samples, unless
    stratify is given explicitly; each split's share is then spread over
    the classes by largest remainder.
    """
    n = len(dataset)
    if n < 3:
        raise DataError("Cannot split %d samples three ways" % n)
    counts = dataset.class_counts()
    can_stratify = bool(np.all(counts >= 3))
    if stratify is None:
        stratify = can_stratify
    elif stratify and not can_stratify:
        raise DataError("Class %d has fewer samples than splits"
                        % int(np.argmin(counts)))

    n_train, n_val, n_test = _allocate(n, spec)
    if n_train < 1:
        raise DataError("The train split is empty")
    if stratify:
        groups = [np.flatnonzero(dataset.labels == c)
                  for c in range(dataset.num_classes)]
    else:
        groups = [dataset.ids]
    sizes = np.array([g.size for g in groups], dtype=np.int64)
    test_shares = _apportion(n_test, sizes, sizes)
    val_shares = _apportion(n_val, sizes, sizes - test_shares)

    rng = generator(spec.seed, 'split')
    parts = ([], [], [])
    for group, g_val, g_test in zip(groups, val_shares, test_shares):
        if group.size == 0:
            continue
        shuffled = group[rng.permutation(group.size)]
        n_train = group.size - g_val - g_test
        parts[0].append(shuffled[:n_train])
        parts[1].append(shuffled[n_train:n_train + g_val])
        parts[2].append(shuffled[n_train + g_val:])

    result = []
    for name, pieces in zip(('train', 'val', 'test'), parts):
        ids = np.sort(np.concatenate(pieces))
        if ids.size == 0:
            raise DataError("The %s split is empty" % name)
        result.append(dataset.subset(ids))
    return tuple(result)
