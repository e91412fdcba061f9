#!/usr/bin/env python
"""
Experiment configuration.

Config files are flat 'key = value' text. '#' starts a comment, lists are
comma separated and every key is typed (see KEYS). Command-line flags
override the file; LABELMM_OUTPUT_DIR overrides output_dir only.

    # 30% symmetric noise on the 2-class benchmark
    dataset = synth:2
    noise_rate = 0.3
    modes = default, lmm
    seeds = 0, 1, 2, 3, 4
"""
import logging
import os
import re

from .data import BENCHMARKS, SplitSpec
from .errors import ConfigError
from .model import Architecture, OptimizerKind
from .refurbish import EvidenceType
from .startup import StartupConfig
from .trainer import TrainConfig, TrainMode

__author__ = "LabelMM developers"

OUTPUT_DIR_ENV = 'LABELMM_OUTPUT_DIR'

LINE_REGEX = re.compile(
    r"^\s*(?P<key>[a-z_][a-z0-9_]*)\s*=\s*(?P<value>[^#]*?)\s*(#.*)?$"
)


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(text)


def _optional_float(text):
    return None if text.strip() in ('', 'none') else float(text)


def _list_of(convert):
    def parse(text):
        return [convert(item) for item in text.split(',') if item.strip()]
    parse.__name__ = 'list of %s' % convert.__name__
    return parse


def _choice(*allowed):
    def parse(text):
        text = text.strip()
        if text not in allowed:
            raise ValueError(text)
        return text
    parse.__name__ = 'one of %s' % '|'.join(allowed)
    return parse


def _choices(*allowed):
    return _list_of(_choice(*allowed))


def _str(text):
    return text.strip()


# key: (parser, default)
KEYS = {
    'dataset': (_str, 'synth:2'),
    'n_per_class': (int, 1450),
    'synth_sigma': (_optional_float, None),
    'synth_seed': (int, 0),
    'train_fraction': (float, 0.72),
    'val_fraction': (float, 0.08),
    'test_fraction': (float, 0.2),
    'split_seed': (int, 0),
    'noise_rate': (float, 0.0),
    'noise_rates': (_list_of(float), []),
    'noisy_val': (_bool, False),
    'gamma': (_optional_float, None),
    'epochs': (int, 60),
    'batch_size': (int, 32),
    'window': (int, 5),
    'epsilon': (float, 0.4),
    'eta': (float, 2.0),
    'evidence': (_choice(*EvidenceType.ALL), EvidenceType.SOFT),
    'warmup_epochs': (int, 10),
    'relaxation_factor': (float, 0.0),
    'loss_lower': (float, 0.0),
    'architecture': (_choice(*Architecture.ALL), Architecture.SOFTMAX_LINEAR),
    'hidden_units': (int, 16),
    'optimizer': (_choice(*OptimizerKind.ALL), OptimizerKind.ADAM),
    'learning_rate': (float, 1e-4),
    'beta1': (float, 0.9),
    'beta2': (float, 0.999),
    'adam_epsilon': (float, 1e-8),
    'modes': (_choices(*TrainMode.ALL), [TrainMode.DEFAULT, TrainMode.LMM]),
    'seeds': (_list_of(int), [0, 1, 2, 3, 4]),
    'output_dir': (_str, 'results'),
    'window_grid': (_list_of(int), [5, 10, 15]),
    'epsilon_grid': (_list_of(float),
                     [0.3, 0.325, 0.35, 0.375, 0.4, 0.425, 0.45]),
    'eta_grid': (_list_of(float), []),
    'labeled_fractions': (_list_of(float), [0.1, 0.15, 0.2, 0.25, 0.3]),
}


def parse_value(key, text):
    try:
        parser, _ = KEYS[key]
    except KeyError:
        raise ConfigError("Unknown config key %r" % key)
    try:
        return parser(text)
    except ValueError:
        raise ConfigError("Bad value %r for %s (expected %s)"
                          % (text, key, parser.__name__))


def parse_lines(lines, source='<config>'):
    values = {}
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        match = LINE_REGEX.match(line)
        if not match:
            raise ConfigError("%s line %d: expected 'key = value'"
                              % (source, number))
        values[match.group('key')] = parse_value(match.group('key'),
                                                 match.group('value'))
    return values


def read_config(path):
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return parse_lines(handle, source=path)
    except (IOError, OSError) as e:
        raise ConfigError("Cannot read config %s: %s" % (path, e))


class ExperimentConfig(object):
    """
    Defaults, then the config file, then overrides, then the environment
    """

    def __init__(self, values=None, overrides=None, environ=None):
        self.values = dict((key, default) for key, (_, default)
                           in KEYS.items())
        self.values.update(values or {})
        for key, value in (overrides or {}).items():
            if isinstance(value, str):
                value = parse_value(key, value)
            elif key not in KEYS:
                raise ConfigError("Unknown config key %r" % key)
            self.values[key] = value
        environ = os.environ if environ is None else environ
        if environ.get(OUTPUT_DIR_ENV):
            self.values['output_dir'] = environ[OUTPUT_DIR_ENV]
        self.validate()

    @classmethod
    def from_file(cls, path=None, overrides=None, environ=None):
        values = read_config(path) if path else {}
        return cls(values, overrides, environ)

    def __getattr__(self, key):
        try:
            return self.__dict__['values'][key]
        except KeyError:
            raise AttributeError(key)

    def validate(self):
        if not self.seeds:
            raise ConfigError("The seed list is empty")
        if not self.modes:
            raise ConfigError("The mode list is empty")
        dataset = self.dataset
        if dataset not in BENCHMARKS and not os.path.exists(dataset):
            raise ConfigError("Dataset %r is neither a benchmark nor an "
                              "existing file" % dataset)
        self.split_spec()
        self.train_config()

    @property
    def is_synthetic(self):
        return self.dataset in BENCHMARKS

    def noise_rate_list(self):
        return self.noise_rates or [self.noise_rate]

    def eta_list(self):
        return self.eta_grid or [self.eta]

    def split_spec(self):
        return SplitSpec(self.train_fraction, self.val_fraction,
                         self.test_fraction, self.split_seed)

    def train_config(self, mode=None, seed=0, noise_rate=None, **changes):
        """
        The TrainConfig for one run. gamma defaults to the injected noise
        rate.
        """
        if noise_rate is None:
            noise_rate = self.noise_rate
        gamma = self.gamma if self.gamma is not None else noise_rate
        if gamma >= 1.0:
            raise ConfigError("gamma must be below 1, got %r" % gamma)
        startup = StartupConfig(self.warmup_epochs, self.relaxation_factor,
                                self.loss_lower, noise_rate=gamma)
        values = dict(
            epochs=self.epochs, batch_size=self.batch_size, gamma=gamma,
            window=self.window, epsilon=self.epsilon, eta=self.eta,
            evidence=self.evidence, startup=startup,
            mode=mode or self.modes[0], seed=seed,
            architecture=self.architecture, hidden_units=self.hidden_units,
            optimizer=self.optimizer, learning_rate=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2,
            adam_epsilon=self.adam_epsilon)
        values.update(changes)
        if 'gamma' in changes:
            values['startup'] = StartupConfig(
                self.warmup_epochs, self.relaxation_factor, self.loss_lower,
                noise_rate=changes['gamma'])
        return TrainConfig(**values)

    def dump(self):
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, list):
                value = ', '.join(str(v) for v in value)
            elif value is None:
                value = 'none'
            elif isinstance(value, bool):
                value = 'true' if value else 'false'
            lines.append('%s = %s' % (key, value))
        logging.debug("Effective configuration:\n%s", '\n'.join(lines))
        return '\n'.join(lines) + '\n'
