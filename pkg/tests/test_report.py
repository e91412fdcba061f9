#!/usr/bin/env python
import math
import os
import stat

import numpy as np
import pytest

from labelmm.report import (
    aggregate, atomic_writer, format_value, write_rows, write_summary
)
from labelmm.rng import SeedStream, generator

__author__ = "LabelMM developers"


def test_atomic_writer_replaces_on_success(tmpdir):
    path = str(tmpdir.join('sub', 'out.txt'))
    with atomic_writer(path) as handle:
        handle.write('done\n')
    with open(path) as handle:
        assert handle.read() == 'done\n'
    assert os.listdir(str(tmpdir.join('sub'))) == ['out.txt']


def test_atomic_writer_keeps_old_file_on_failure(tmpdir):
    path = tmpdir.join('out.txt')
    path.write('old\n')
    with pytest.raises(RuntimeError):
        with atomic_writer(str(path)) as handle:
            handle.write('half')
            raise RuntimeError('interrupted')
    assert path.read() == 'old\n'
    assert os.listdir(str(tmpdir)) == ['out.txt']


def test_format_value():
    assert format_value(None) == ''
    assert format_value(True) == '1'
    assert format_value(np.int64(3)) == '3'
    assert format_value(0.1) == '0.1'
    assert format_value(np.float64(1) / 3) == repr(1.0 / 3)
    assert format_value('lmm') == 'lmm'


def test_write_rows(tmpdir):
    path = str(tmpdir.join('rows.csv'))
    write_rows(path, ['a', 'b'], [{'a': 1, 'b': 0.5}, {'a': 2}])
    with open(path) as handle:
        assert handle.read() == 'a,b\n1,0.5\n2,\n'


def test_write_summary_is_sorted(tmpdir):
    path = str(tmpdir.join('summary.txt'))
    write_summary(path, {'zeta': 1, 'alpha': 0.25})
    with open(path) as handle:
        assert handle.read() == 'alpha = 0.25\nzeta = 1\n'


def test_aggregate_skips_missing():
    mean, std = aggregate([1.0, None, 3.0, float('nan')])
    assert mean == 2.0
    assert std == 1.0
    assert all(math.isnan(v) for v in aggregate([None]))


def test_named_streams_are_reproducible_and_distinct():
    a = generator(7, 'shuffle').random(4)
    assert np.array_equal(a, generator(7, 'shuffle').random(4))
    assert not np.array_equal(a, generator(7, 'noise').random(4))
    assert not np.array_equal(a, generator(8, 'shuffle').random(4))


def test_keyed_and_child_streams():
    streams = SeedStream(3)
    assert not np.array_equal(streams.generator('init', 0).random(3),
                              streams.generator('init', 1).random(3))
    assert streams.child('validation').seed == \
        SeedStream(3).child('validation').seed
    assert streams.child('validation').seed != streams.seed


def test_atomic_writer_honours_umask(tmpdir):
    old = os.umask(0o027)
    try:
        path = str(tmpdir.join('summary.txt'))
        write_summary(path, {'a': 1})
    finally:
        os.umask(old)
    assert stat.S_IMODE(os.stat(path).st_mode) == 0o640
