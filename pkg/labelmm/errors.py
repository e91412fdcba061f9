#!/usr/bin/env python
"""
Exceptions raised by LabelMM
"""

__author__ = "LabelMM developers"


class LabelMMError(Exception):
    """
    Base exception type for LabelMM errors
    """
    exit_code = 1

    def __init__(self, value):
        self.value = value

    def __str__(self):
        return repr(self.value)


class ConfigError(LabelMMError):
    """
    Invalid configuration or hyperparameter value
    """
    exit_code = 1


class DataError(LabelMMError):
    """
    Malformed or inconsistent dataset content
    """
    exit_code = 2


class NumericError(LabelMMError):
    """
    Non-finite values, divergence or a vanishing normalisation constant
    """
    exit_code = 3


class WindowNotReady(LabelMMError):
    """
    A prediction window holds fewer than T entries and cannot be gated
    """
    exit_code = 3
