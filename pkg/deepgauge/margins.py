# -*- coding: utf-8 -*-
"""
Data container and marginal transformations.

All gauge estimation happens on standard Laplace margins, with distribution
function F(x) = exp(x)/2 for x < 0 and 1 - exp(-x)/2 for x >= 0.
"""
import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from deepgauge.exceptions import DomainError

log = logging.getLogger(__name__)

LOG2 = np.log(2.0)


class MarginTag(str, enum.Enum):
    RAW = "raw"
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    LAPLACE = "laplace"


@dataclass(frozen=True)
class DataMatrix:
    """
    n x d matrix of observations tagged with the scale of its margins.
    """
    values: np.ndarray
    margin: MarginTag = MarginTag.LAPLACE
    columns: tuple = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DomainError(f"DataMatrix needs a 2-D array, got shape {values.shape}")
        if values.shape[1] < 2:
            raise DomainError("DataMatrix needs at least two columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "margin", MarginTag(self.margin))
        columns = tuple(self.columns) or tuple(f"x{i + 1}" for i in range(values.shape[1]))
        if len(columns) != values.shape[1]:
            raise DomainError(f"{len(columns)} column names for {values.shape[1]} columns")
        object.__setattr__(self, "columns", columns)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    def with_values(self, values, margin=None):
        return DataMatrix(values, margin if margin is not None else self.margin, self.columns)


def laplace_cdf(x):
    x = np.asarray(x, dtype=float)
    tail = 0.5 * np.exp(-np.abs(x))
    return np.where(x < 0, tail, 1.0 - tail)


def laplace_survival(x):
    x = np.asarray(x, dtype=float)
    tail = 0.5 * np.exp(-np.abs(x))
    return np.where(x < 0, 1.0 - tail, tail)


def laplace_logpdf(x):
    return -LOG2 - np.abs(np.asarray(x, dtype=float))


def laplace_pdf(x):
    return np.exp(laplace_logpdf(x))


def laplace_quantile(q):
    """
    Inverse of the standard Laplace distribution function.

    :param q: probability, or array of probabilities, in (0, 1)
    :return: Laplace quantile(s)
    """
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)):
        raise DomainError("laplace_quantile requires q in (0, 1)")
    lower = q < 0.5
    with np.errstate(divide="ignore"):
        out = np.where(lower, np.log(2.0 * q), -np.log(2.0 * (1.0 - q)))
    return out


def exp_to_laplace(x):
    """
    Map unit exponential margins to Laplace margins, x >= 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("exp_to_laplace requires non-negative input")
    with np.errstate(divide="ignore"):
        lower = np.log(-np.expm1(-x)) + LOG2
    return np.where(x <= LOG2, lower, x - LOG2)


def laplace_to_exp(x):
    """
    Inverse of :func:`exp_to_laplace`.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        lower = -np.log1p(-0.5 * np.exp(np.minimum(x, 0.0)))
    return np.where(x < 0, lower, x + LOG2)


def rank_transform_to_laplace(data):
    """
    Probability-integral transform each column by its empirical ranks
    (average ranks for ties, scaled by n + 1) and map to Laplace margins.

    :param data: DataMatrix on any scale
    :return: DataMatrix tagged laplace
    """
    values = data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise DomainError("rank transform needs at least two observations")
    if np.any(np.isnan(values)):
        raise DomainError("rank transform does not accept missing values")
    constant = np.ptp(values, axis=0) == 0
    if np.any(constant):
        raise DomainError(f"constant column(s) {np.flatnonzero(constant).tolist()} cannot be rank transformed")
    ranks = stats.rankdata(values, method="average", axis=0)
    transformed = laplace_quantile(ranks / (n + 1.0))
    columns = data.columns if isinstance(data, DataMatrix) else ()
    return DataMatrix(transformed, MarginTag.LAPLACE, columns)


def to_uniform(data):
    """
    Map a tagged DataMatrix to uniform margins. Raw data are rank transformed.
    """
    if data.margin is MarginTag.UNIFORM:
        return data
    if data.margin is MarginTag.LAPLACE:
        return data.with_values(laplace_cdf(data.values), MarginTag.UNIFORM)
    if data.margin is MarginTag.EXPONENTIAL:
        return data.with_values(-np.expm1(-data.values), MarginTag.UNIFORM)
    return to_uniform(rank_transform_to_laplace(data))


def to_laplace(data):
    if data.margin is MarginTag.LAPLACE:
        return data
    if data.margin is MarginTag.RAW:
        return rank_transform_to_laplace(data)
    if data.margin is MarginTag.EXPONENTIAL:
        return data.with_values(exp_to_laplace(data.values), MarginTag.LAPLACE)
    return data.with_values(laplace_quantile(data.values), MarginTag.LAPLACE)


def convert(data, target):
    """
    Convert a DataMatrix to the margins named by ``target``.

    :param data: DataMatrix
    :param target: MarginTag (or its value); raw is not a valid target
    :return: DataMatrix
    """
    target = MarginTag(target)
    if target is MarginTag.RAW:
        raise DomainError("cannot convert back to raw margins")
    if data.margin is target:
        return data
    laplace = to_laplace(data)
    if target is MarginTag.LAPLACE:
        return laplace
    if target is MarginTag.EXPONENTIAL:
        return laplace.with_values(laplace_to_exp(laplace.values), MarginTag.EXPONENTIAL)
    return to_uniform(laplace)
