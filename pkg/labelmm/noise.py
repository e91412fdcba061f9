#!/usr/bin/env python
"""
Label noise: transition matrices and injection.

Entry (i, j) of a NoiseTransitionMatrix is the probability that a sample
whose label is i is observed with label j. Injection redraws every label
from its full row, so a label is left unchanged with the diagonal
probability and the flip log holds only real changes.
"""
import csv
import logging

import numpy as np

from .errors import ConfigError, DataError
from .report import atomic_writer
from .rng import generator

__author__ = "LabelMM developers"

ROW_TOLERANCE = 1e-12


class NoiseTransitionMatrix(object):
    """
    A row-stochastic M x M matrix
    """

    def __init__(self, entries, noise_rate=None):
        entries = np.array(entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ConfigError("Transition matrix must be square")
        if entries.shape[0] < 2:
            raise ConfigError("Transition matrix needs at least 2 classes")
        if np.any(entries < 0.0) or np.any(entries > 1.0):
            raise ConfigError("Transition probabilities must lie in [0, 1]")
        if np.any(np.abs(entries.sum(axis=1) - 1.0) > ROW_TOLERANCE):
            raise ConfigError("Transition matrix rows must sum to 1")
        entries.setflags(write=False)
        self.entries = entries
        if noise_rate is None:
            noise_rate = 1.0 - float(np.mean(np.diag(entries)))
        self.noise_rate = noise_rate

    @property
    def num_classes(self):
        return self.entries.shape[0]

    def as_table(self, precision=4):
        width = precision + 3
        header = ' ' * 4 + ''.join('%*d' % (width, j)
                                   for j in range(self.num_classes))
        lines = [header]
        for i, row in enumerate(self.entries):
            lines.append('%3d ' % i + ''.join('%*.*f' % (width, precision, p)
                                              for p in row))
        return '\n'.join(lines)


def symmetric_matrix(num_classes, gamma):
    """
    1 - gamma on the diagonal, gamma / (M - 1) everywhere else
    """
    num_classes = int(num_classes)
    gamma = float(gamma)
    if num_classes < 2:
        raise ConfigError("Need at least 2 classes, got %d" % num_classes)
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError("Noise rate must lie in [0, 1], got %r" % gamma)
    off = gamma / (num_classes - 1)
    entries = np.full((num_classes, num_classes), off)
    np.fill_diagonal(entries, 1.0 - gamma)
    return NoiseTransitionMatrix(entries, noise_rate=gamma)


def inject(dataset, matrix, seed):
    """
    Redraw every observed label from its transition row.

    Returns (noisy, flip_log) with flip_log a list of
    (id, old_label, new_label) for the samples that changed, in id order.
    Samples without a truth label get their pre-injection label as truth.
    """
    if matrix.num_classes != dataset.num_classes:
        raise DataError("Transition matrix is %dx%d but the dataset has %d "
                        "classes" % (matrix.num_classes, matrix.num_classes,
                                     dataset.num_classes))
    rng = generator(seed, 'noise')
    old = dataset.labels
    draws = rng.random(len(dataset))
    cumulative = np.cumsum(matrix.entries, axis=1)
    cumulative[:, -1] = 1.0
    rows = cumulative[old]
    new = np.sum(rows <= draws[:, None], axis=1).astype(np.int64)

    changed = np.flatnonzero(new != old)
    flip_log = [(int(i), int(old[i]), int(new[i])) for i in changed]
    truth = dataset.truth if dataset.has_truth else old.copy()
    logging.debug("Injected noise: %d of %d labels flipped",
                  len(flip_log), len(dataset))
    return dataset.with_labels(new, truth=truth), flip_log


def write_flip_log(flip_log, path):
    with atomic_writer(path) as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['id', 'old_label', 'new_label'])
        writer.writerows(flip_log)
