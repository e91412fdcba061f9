#!/usr/bin/env python
"""
Evaluation and audit metrics: data purity, Cohen's kappa, accuracy, AUC,
ROC points and confusion matrices.
"""
import numpy as np

from sklearn.metrics import (
    accuracy_score, cohen_kappa_score, confusion_matrix, roc_auc_score,
    roc_curve
)

from .errors import DataError

__author__ = "LabelMM developers"


def _pair(a, b):
    a = np.asarray(a, dtype=np.int64).reshape(-1)
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    if a.shape != b.shape:
        raise DataError("Length mismatch: %d vs %d" % (a.shape[0], b.shape[0]))
    return a, b


def _current_labels(dataset, current_labels):
    if isinstance(current_labels, dict):
        labels = dataset.labels.copy()
        missing = set(range(len(dataset))) - set(current_labels)
        if missing:
            raise DataError("No current label for sample %d" % min(missing))
        unknown = set(current_labels) - set(range(len(dataset)))
        if unknown:
            raise DataError("Unknown sample id %r" % min(unknown))
        for sample_id, label in current_labels.items():
            labels[sample_id] = label
        return labels
    labels = np.asarray(current_labels, dtype=np.int64)
    if labels.shape[0] != len(dataset):
        raise DataError("%d current labels for %d samples"
                        % (labels.shape[0], len(dataset)))
    return labels


def data_purity(dataset, current_labels=None):
    """
    Fraction of samples whose current label equals the truth label.
    current_labels is an id -> label map or a length-N array; it defaults to
    the observed labels.
    """
    if not dataset.has_truth:
        raise DataError("Data purity needs truth labels")
    if len(dataset) == 0:
        raise DataError("Data purity of an empty dataset")
    if current_labels is None:
        labels = dataset.labels
    else:
        labels = _current_labels(dataset, current_labels)
    return float(accuracy_score(dataset.truth, labels))


def accuracy(predictions, labels):
    predictions, labels = _pair(predictions, labels)
    if predictions.shape[0] == 0:
        raise DataError("Accuracy of an empty sequence")
    return float(accuracy_score(labels, predictions))


class ConfusionMatrix(object):
    """
    counts[i, j]: samples with reference label i and compared label j
    """

    def __init__(self, counts):
        self.counts = np.asarray(counts, dtype=np.int64)

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def num_classes(self):
        return self.counts.shape[0]

    def normalized(self):
        """ row-normalised view; empty rows stay zero """
        rows = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        return np.divide(self.counts, rows, out=np.zeros(self.counts.shape),
                         where=rows > 0)

    def as_table(self, normalized=False):
        values = self.normalized() if normalized else self.counts
        cell = '%8.4f' if normalized else '%8d'
        lines = ['ref\\cmp' + ''.join('%8d' % j
                                      for j in range(self.num_classes))]
        for i, row in enumerate(values):
            lines.append('%7d' % i + ''.join(cell % v for v in row))
        return '\n'.join(lines)


def confusion(reference, compared, num_classes=None):
    reference, compared = _pair(reference, compared)
    if num_classes is None:
        num_classes = int(max(reference.max(initial=0),
                              compared.max(initial=0))) + 1
    both = np.concatenate([reference, compared])
    if np.any(both < 0) or np.any(both >= num_classes):
        raise DataError("Labels outside [0, %d)" % num_classes)
    return ConfusionMatrix(confusion_matrix(reference, compared,
                                            labels=range(num_classes)))


def cohen_kappa(labels_a, labels_b, num_classes=None):
    """
    Chance-corrected agreement. When chance agreement is 1 (both sequences
    are the same single class) the result is 1.0.
    """
    labels_a, labels_b = _pair(labels_a, labels_b)
    if labels_a.shape[0] == 0:
        raise DataError("Kappa of empty sequences")
    both = np.concatenate([labels_a, labels_b])
    if num_classes is not None and (np.any(both < 0) or
                                    np.any(both >= num_classes)):
        raise DataError("Labels outside [0, %d)" % num_classes)
    if np.unique(both).size == 1:
        return 1.0
    return float(cohen_kappa_score(labels_a, labels_b))


def _binary_auc(scores, positives):
    if positives.all() or not positives.any():
        raise DataError("AUC needs both positive and negative samples")
    return float(roc_auc_score(positives, scores))


def auc(scores, labels):
    """
    ROC AUC, ties counted half. For (n, M) scores, the macro average of
    one-vs-rest AUCs over the classes present in labels.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if scores.shape[0] != labels.shape[0]:
        raise DataError("Length mismatch: %d vs %d"
                        % (scores.shape[0], labels.shape[0]))
    if scores.ndim == 1:
        return _binary_auc(scores, labels == 1)
    if scores.shape[1] == 2:
        return _binary_auc(scores[:, 1], labels == 1)
    present = np.unique(labels)
    if present.size < 2:
        raise DataError("AUC needs at least two classes")
    if present.size == scores.shape[1]:
        return float(roc_auc_score(labels, scores, multi_class='ovr',
                                   average='macro', labels=present))
    return float(np.mean([_binary_auc(scores[:, c], labels == c)
                          for c in present]))


def roc_points(scores, labels):
    """
    (fpr, tpr, thresholds) of a binary score, one point per distinct score,
    starting at (0, 0) with an infinite threshold
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    positives = np.asarray(labels, dtype=np.int64).reshape(-1) == 1
    if scores.shape != positives.shape:
        raise DataError("Length mismatch")
    if positives.all() or not positives.any():
        raise DataError("ROC needs both positive and negative samples")
    fpr, tpr, thresholds = roc_curve(positives, scores,
                                     drop_intermediate=False)
    thresholds[0] = np.inf
    return fpr, tpr, thresholds
