#!/usr/bin/env python
"""
Report artifacts.

Every file is written to a temporary name in its target directory and
renamed into place. File names carry the cell and seed.
"""
import contextlib
import csv
import os
import tempfile

import numpy as np

__author__ = "LabelMM developers"


def _file_mode():
    """ the mode open() would give a new file under the current umask """
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


@contextlib.contextmanager
def atomic_writer(path):
    """
    Open a text handle whose content replaces path only on success
    """
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    fd, temp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            yield handle
        os.chmod(temp_path, _file_mode())
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def format_value(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(path, header, rows):
    """ rows are dicts keyed by header names """
    with atomic_writer(path) as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(row.get(name)) for name in header])


EPOCH_HEADER = ['epoch', 'train_loss', 'val_loss', 'val_acc', 'test_acc',
                'purity', 'kappa', 'psi_size', 'lmm_active']


def write_epochs(report, path):
    write_rows(path, EPOCH_HEADER, report.rows())


def write_summary(path, values):
    """ flat 'key = value' text, keys sorted """
    with atomic_writer(path) as handle:
        for key in sorted(values):
            handle.write('%s = %s\n' % (key, format_value(values[key])))


def report_summary(report, extra=None):
    values = {'mode': report.mode, 'seed': report.seed,
              'epochs': report.epochs}
    values.update(report.final)
    values.update(('audit_%s' % k, v) for k, v in report.audit.items())
    if extra:
        values.update(extra)
    return values


def aggregate(values):
    """ (mean, std) of a list of numbers, ignoring missing ones """
    numbers = np.array([v for v in values if v is not None], dtype=np.float64)
    numbers = numbers[np.isfinite(numbers)]
    if numbers.size == 0:
        return float('nan'), float('nan')
    return float(np.mean(numbers)), float(np.std(numbers))


def aggregate_rows(group, reports, metrics):
    """
    One row per metric: the group's key columns plus mean, std and the
    number of seeds that contributed
    """
    rows = []
    for metric in metrics:
        mean, std = aggregate([r.final.get(metric) for r in reports])
        row = dict(group)
        row.update(metric=metric, mean=mean, std=std, seeds=len(reports))
        rows.append(row)
    return rows


def write_confusion(matrix, path):
    """ one row per truth class, one column per compared label """
    header = ['truth'] + ['label_%d' % j for j in range(matrix.num_classes)]
    rows = []
    for i, counts in enumerate(matrix.counts):
        row = {'truth': i}
        row.update(('label_%d' % j, int(c)) for j, c in enumerate(counts))
        rows.append(row)
    write_rows(path, header, rows)
