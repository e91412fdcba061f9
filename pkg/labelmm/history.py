#!/usr/bin/env python
"""
Label record: per-sample windows of the last T predicted probability
vectors, and the entropy gate on predictive uncertainty.
"""
import csv

import numpy as np

from .errors import ConfigError, DataError, WindowNotReady
from .report import atomic_writer

__author__ = "LabelMM developers"

RECORD_TOLERANCE = 1e-6


class PredictionWindow(object):
    """
    Ring buffer of (epoch, probs) for one sample, capacity T
    """

    def __init__(self, sample_id, capacity, num_classes):
        if capacity < 1:
            raise ConfigError("Window capacity must be at least 1")
        self.sample_id = sample_id
        self.capacity = capacity
        self.num_classes = num_classes
        self._probs = np.zeros((capacity, num_classes))
        self._epochs = np.zeros(capacity, dtype=np.int64)
        # next slot to overwrite
        self._idx = 0
        self.count = 0

    def push(self, epoch, probs):
        if self.count and epoch <= self.last_epoch:
            raise DataError("Sample %d: epoch %d recorded after epoch %d"
                            % (self.sample_id, epoch, self.last_epoch))
        self._probs[self._idx] = probs
        self._epochs[self._idx] = epoch
        self._idx = (self._idx + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)

    @property
    def last_epoch(self):
        if not self.count:
            return None
        return int(self._epochs[(self._idx - 1) % self.capacity])

    @property
    def full(self):
        return self.count == self.capacity

    def _order(self):
        if self.full:
            return np.roll(np.arange(self.capacity), -self._idx)
        return np.arange(self.count)

    @property
    def epochs(self):
        """ recorded epochs, oldest first """
        return self._epochs[self._order()]

    @property
    def probs(self):
        """ recorded probability vectors, oldest first, shape (count, M) """
        return self._probs[self._order()]

    @property
    def predicted_labels(self):
        return np.argmax(self.probs, axis=1)

    def entries(self):
        return list(zip(self.epochs.tolist(), self.probs))

    def __len__(self):
        return self.count


def _checked_probs(probs, num_classes):
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    if probs.shape[0] != num_classes:
        raise DataError("Expected %d probabilities, got %d"
                        % (num_classes, probs.shape[0]))
    if not np.all(np.isfinite(probs)) or np.any(probs < 0.0):
        raise DataError("Probabilities must be finite and non-negative")
    total = probs.sum()
    if abs(total - 1.0) > RECORD_TOLERANCE:
        raise DataError("Probabilities sum to %r, not 1" % total)
    return probs / total


class HistoryStore(object):
    """
    Prediction windows for every sample, all with capacity T over M classes
    """

    def __init__(self, capacity, label_space):
        if capacity < 1:
            raise ConfigError("Window width T must be at least 1")
        self.capacity = int(capacity)
        self.label_space = label_space
        self.windows = {}

    @property
    def num_classes(self):
        return self.label_space.num_classes

    def window(self, sample_id):
        window = self.windows.get(sample_id)
        if window is None:
            window = PredictionWindow(sample_id, self.capacity,
                                      self.num_classes)
            self.windows[sample_id] = window
        return window

    def record(self, sample_id, epoch, probs):
        """
        Append a prediction, evicting the oldest one when the window is full
        """
        probs = _checked_probs(probs, self.num_classes)
        self.window(sample_id).push(int(epoch), probs)
        return self

    def record_batch(self, sample_ids, epoch, probs):
        order = np.argsort(sample_ids, kind='stable')
        for k in order:
            self.record(int(sample_ids[k]), epoch, probs[k])
        return self

    def is_full(self, sample_id):
        window = self.windows.get(sample_id)
        return window is not None and window.full

    def predictive_uncertainty(self, sample_id):
        """
        Normalised entropy, in [0, 1], of the argmax labels in a full window
        """
        window = self.windows.get(sample_id)
        if window is None or not window.full:
            raise WindowNotReady("Sample %d has %d of %d predictions"
                                 % (sample_id, len(window or ()),
                                    self.capacity))
        counts = np.bincount(window.predicted_labels,
                             minlength=self.num_classes)
        p = counts[counts > 0] / float(self.capacity)
        entropy = -np.sum(p * np.log(p)) / np.log(self.num_classes)
        return float(min(max(entropy, 0.0), 1.0))

    def is_refurbishable(self, sample_id, epsilon, psi):
        if sample_id in psi:
            return True
        if not self.is_full(sample_id):
            return False
        return self.predictive_uncertainty(sample_id) <= epsilon

    def dump_csv(self, path):
        """ debug dump: sample_id, epoch, p_0..p_{M-1} per window entry """
        header = ['sample_id', 'epoch'] + ['p_%d' % j
                                           for j in range(self.num_classes)]
        with atomic_writer(path) as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            for sample_id in sorted(self.windows):
                for epoch, probs in self.windows[sample_id].entries():
                    writer.writerow([sample_id, epoch] +
                                    [repr(float(p)) for p in probs])
