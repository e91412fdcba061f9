#!/usr/bin/env python
"""
Optimal label selection.

For a sample at epoch k the refurbished label is the maximum a posteriori
class under

    posterior_j = prior_j * lik_j / Z,    Z = sum_j prior_j * lik_j

where the prior is the current model's softmax output and the likelihood is
a time-weighted mean over the last T recorded predictions,

    lik_j = sum_i w_i * p_j^(i),    w_i = exp(i / eta) / sum_l exp(l / eta)

with i = 1 the oldest and i = T the newest window entry, so recent epochs
weigh more. Ties go to the lowest class index.
"""
import csv
import logging

import numpy as np

from .errors import ConfigError, DataError, NumericError, WindowNotReady
from .report import atomic_writer

__author__ = "LabelMM developers"

PRIOR_TOLERANCE = 1e-6


class EvidenceType(object):
    SOFT = 'soft'
    HARD = 'hard'
    ALL = (SOFT, HARD)


class WeightVector(object):
    """
    Normalised exponential time weights over a window of width T
    """

    def __init__(self, weights, eta):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.weights.setflags(write=False)
        self.eta = eta

    def __len__(self):
        return self.weights.shape[0]

    def __getitem__(self, i):
        return self.weights[i]


def exp_weights(window, eta):
    window = int(window)
    eta = float(eta)
    if window < 1:
        raise ConfigError("Window width must be at least 1, got %d" % window)
    if not eta > 0.0:
        raise ConfigError("eta must be positive, got %r" % eta)
    exponents = np.arange(1, window + 1, dtype=np.float64) / eta
    # shifting by the largest exponent cancels in the normalisation
    unnormalised = np.exp(exponents - exponents[-1])
    return WeightVector(unnormalised / unnormalised.sum(), eta)


def uniform_weights(window):
    """ the eta -> infinity limit: every epoch counts the same """
    window = int(window)
    if window < 1:
        raise ConfigError("Window width must be at least 1, got %d" % window)
    return WeightVector(np.full(window, 1.0 / window), float('inf'))


def likelihood(window, weights, evidence=EvidenceType.SOFT):
    """
    Weighted mean of the window's stored probabilities (soft evidence) or
    of its one-hot argmax labels (hard evidence)
    """
    if not window.full:
        raise WindowNotReady("Sample %d: window holds %d of %d predictions"
                             % (window.sample_id, len(window),
                                window.capacity))
    if len(weights) != window.capacity:
        raise DataError("%d weights for a window of width %d"
                        % (len(weights), window.capacity))
    probs = window.probs
    if evidence == EvidenceType.HARD:
        probs = np.eye(window.num_classes)[np.argmax(probs, axis=1)]
    elif evidence != EvidenceType.SOFT:
        raise ConfigError("Unknown evidence type %r" % evidence)
    lik = np.dot(weights.weights, probs)
    return np.clip(lik, 0.0, 1.0)


def posterior(prior, lik):
    prior = np.asarray(prior, dtype=np.float64)
    lik = np.asarray(lik, dtype=np.float64)
    if prior.shape != lik.shape:
        raise DataError("Prior has %d classes, likelihood %d"
                        % (prior.shape[0], lik.shape[0]))
    if abs(prior.sum() - 1.0) > PRIOR_TOLERANCE or np.any(prior < 0.0):
        raise DataError("Prior is not a probability vector")
    if np.any(lik < 0.0):
        raise DataError("Likelihood must be non-negative")
    joint = prior * lik
    z = joint.sum()
    if not z > 0.0:
        raise NumericError("Posterior normalisation constant vanished")
    return joint / z


class RefurbishedSet(object):
    """
    psi: sample id -> (refurbished label, posterior, epoch assigned)
    """

    class Entry(object):
        __slots__ = ('label', 'posterior', 'epoch')

        def __init__(self, label, posterior, epoch):
            self.label = label
            self.posterior = posterior
            self.epoch = epoch

        def __repr__(self):
            return "<refurb %d @%d>" % (self.label, self.epoch)

    def __init__(self):
        self._entries = {}

    def __contains__(self, sample_id):
        return sample_id in self._entries

    def __len__(self):
        return len(self._entries)

    def __getitem__(self, sample_id):
        return self._entries[sample_id]

    def __iter__(self):
        return iter(sorted(self._entries))

    def assign(self, sample_id, label, posterior, epoch):
        self._entries[sample_id] = RefurbishedSet.Entry(
            int(label), posterior, int(epoch))

    def label(self, sample_id, default=None):
        entry = self._entries.get(sample_id)
        return default if entry is None else entry.label

    def apply(self, labels):
        """ observed labels with refurbished ones substituted """
        current = np.array(labels, dtype=np.int64)
        for sample_id, entry in self._entries.items():
            current[sample_id] = entry.label
        return current

    def write_csv(self, path, num_classes):
        header = ['sample_id', 'refurb_label', 'epoch_assigned'] + [
            'p_%d' % j for j in range(num_classes)]
        with atomic_writer(path) as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            for sample_id in self:
                entry = self._entries[sample_id]
                writer.writerow([sample_id, entry.label, entry.epoch] +
                                [repr(float(p)) for p in entry.posterior])


def read_refurbished_csv(path):
    """ load a psi CSV written by RefurbishedSet.write_csv """
    psi = RefurbishedSet()
    try:
        with open(path, 'r', encoding='utf-8', newline='') as handle:
            reader = csv.reader(handle)
            next(reader)
            for row_number, row in enumerate(reader, start=2):
                try:
                    probs = np.array([float(p) for p in row[3:]])
                    psi.assign(int(row[0]), int(row[1]), probs, int(row[2]))
                except (ValueError, IndexError):
                    raise DataError("Row %d of %s is malformed"
                                    % (row_number, path))
    except (IOError, OSError) as e:
        raise DataError("Cannot read %s: %s" % (path, e))
    except StopIteration:
        raise DataError("%s is empty" % path)
    return psi


class Refurbisher(object):
    """
    Computes refurbished labels and records them in psi
    """

    def __init__(self, weights, evidence=EvidenceType.SOFT):
        self.weights = weights
        self.evidence = evidence

    def refurbish(self, sample_id, window, prior, epoch, psi):
        """
        Returns (label, posterior) and stores them in psi. A vanishing
        normalisation constant raises NumericError and leaves psi untouched.
        """
        lik = likelihood(window, self.weights, self.evidence)
        post = posterior(prior, lik)
        # np.argmax returns the first maximum: lowest index wins ties
        label = int(np.argmax(post))
        psi.assign(sample_id, label, post, epoch)
        return label, post


def refurbish(sample_id, window, prior, window_width, eta, psi, epoch,
              evidence=EvidenceType.SOFT):
    if window.capacity != window_width:
        raise DataError("Window width %d does not match T=%d"
                        % (window.capacity, window_width))
    try:
        return Refurbisher(exp_weights(window_width, eta), evidence).refurbish(
            sample_id, window, prior, epoch, psi)
    except NumericError:
        logging.debug("Sample %d: no refurbishment possible at epoch %d",
                      sample_id, epoch)
        raise
