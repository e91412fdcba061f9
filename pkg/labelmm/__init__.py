#!/usr/bin/env python
"""
LabelMM
"""

__version__ = '0.1.0'

__all__ = ['Dataset', 'HistoryStore', 'RefurbishedSet', 'StartupMonitor',
           'TrainConfig', 'train', 'self_train']

from .data import Dataset, LabelSpace, load_csv, write_csv  # noqa
from .history import HistoryStore  # noqa
from .refurbish import RefurbishedSet, refurbish  # noqa
from .startup import StartupMonitor  # noqa
from .trainer import TrainConfig, TrainMode, self_train, train  # noqa
