#!/usr/bin/env python
"""
Start-up condition for label management.

Label management switches on at the first epoch, after warm-up, where the
validation loss lies in [L_a, ln M] and the validation accuracy exceeds
1 - gamma - phi. Once switched on it stays on.
"""
import logging
import math

from .errors import ConfigError, DataError

__author__ = "LabelMM developers"

RELAXATION_RANGE = (-0.1, 0.1)


def l_upper(num_classes):
    """
    The cross-entropy of a sample whose true class gets probability 1/M
    """
    if num_classes < 2:
        raise ConfigError("Need at least 2 classes, got %d" % num_classes)
    return -math.log(1.0 / num_classes)


class StartupConfig(object):

    def __init__(self, warmup_epochs=10, relaxation_factor=0.0,
                 loss_lower=0.0, noise_rate=0.0):
        self.warmup_epochs = int(warmup_epochs)
        self.relaxation_factor = float(relaxation_factor)
        self.loss_lower = float(loss_lower)
        self.noise_rate = float(noise_rate)
        if self.warmup_epochs < 0:
            raise ConfigError("warmup_epochs must be non-negative")
        low, high = RELAXATION_RANGE
        if not low <= self.relaxation_factor <= high:
            raise ConfigError("Relaxation factor %r outside [%r, %r]"
                              % (self.relaxation_factor, low, high))
        if self.loss_lower < 0.0:
            raise ConfigError("Lower loss bound must be non-negative")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ConfigError("Noise rate must lie in [0, 1), got %r"
                              % self.noise_rate)

    @property
    def accuracy_threshold(self):
        return 1.0 - self.noise_rate - self.relaxation_factor


class StartupMonitor(object):
    """
    Latching start-up check, called once per epoch
    """

    def __init__(self, config, num_classes):
        self.config = config
        self.loss_upper = l_upper(num_classes)
        if not config.loss_lower < self.loss_upper:
            raise ConfigError("Lower loss bound %r is not below ln M = %r"
                              % (config.loss_lower, self.loss_upper))
        if config.accuracy_threshold <= 0.0:
            logging.warning("gamma + phi >= 1: the validation accuracy "
                            "condition is always satisfied")
        self.triggered = False
        self.trigger_epoch = None
        self._last_epoch = None

    def check(self, epoch, val_loss, val_acc):
        if self._last_epoch is not None and epoch <= self._last_epoch:
            raise DataError("Epoch %d checked after epoch %d"
                            % (epoch, self._last_epoch))
        if val_loss < 0.0 or not 0.0 <= val_acc <= 1.0:
            raise DataError("Invalid validation metrics loss=%r acc=%r"
                            % (val_loss, val_acc))
        self._last_epoch = epoch
        if self.triggered:
            return True

        config = self.config
        if (epoch > config.warmup_epochs and
                config.loss_lower <= val_loss <= self.loss_upper and
                val_acc > config.accuracy_threshold):
            self.triggered = True
            self.trigger_epoch = epoch
            logging.info("Label management started at epoch %d "
                         "(val loss %.4f, val acc %.4f)",
                         epoch, val_loss, val_acc)
        return self.triggered
