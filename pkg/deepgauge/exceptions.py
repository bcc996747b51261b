# -*- coding: utf-8 -*-
"""
Exception hierarchy shared by the numerical modules and the command layer.
"""


class DeepGaugeError(Exception):
    pass


class DomainError(DeepGaugeError, ValueError):
    """An argument lies outside the domain of the operation."""


class ExtrapolationError(DomainError):
    """
    The requested radius does not exceed the fitted exceedance threshold,
    so the exponential tail extrapolation does not apply.
    """


class ConfigurationError(DeepGaugeError, ValueError):
    pass


class TwoStageError(DeepGaugeError, RuntimeError):
    """The gauge stage was started without a fitted quantile stage."""


class NumericalFailure(DeepGaugeError, ArithmeticError):
    """
    Training produced a non-finite loss.

    :param message: human readable description
    :param state: diagnostic dump (stage, epoch, batch, last finite loss,
        serialized parameters)
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}
