# -*- coding: utf-8 -*-
"""
Thin, domain-checked wrappers around :mod:`scipy.special`.

Every function accepts scalars or arrays and broadcasts like numpy. Domain
violations raise :class:`deepgauge.exceptions.DomainError` instead of
silently returning NaN.
"""
import logging

import numpy as np
from scipy import special

from deepgauge.exceptions import DomainError

log = logging.getLogger(__name__)

# Number of terms of the asymptotic expansion used once Q underflows.
_ASYMPTOTIC_TERMS = 8


def _check(condition, message):
    if not np.all(condition):
        raise DomainError(message)


def _as_result(value):
    value = np.asarray(value, dtype=float)
    return value.item() if value.ndim == 0 else value


def log_gamma(x):
    x = np.asarray(x, dtype=float)
    _check(x > 0, "log_gamma requires x > 0")
    return _as_result(special.gammaln(x))


def reg_gamma_lower(alpha, z):
    """
    Regularised lower incomplete gamma P(alpha, z).

    :param alpha: shape, > 0
    :param z: argument, >= 0
    :return: P(alpha, z) in [0, 1]
    """
    alpha, z = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(z, dtype=float))
    _check(alpha > 0, "reg_gamma_lower requires alpha > 0")
    _check(z >= 0, "reg_gamma_lower requires z >= 0")
    return _as_result(special.gammainc(alpha, z))


def reg_gamma_upper(alpha, z):
    """
    Regularised upper incomplete gamma Q(alpha, z) = 1 - P(alpha, z),
    computed directly so that the upper tail keeps full relative precision.
    """
    alpha, z = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(z, dtype=float))
    _check(alpha > 0, "reg_gamma_upper requires alpha > 0")
    _check(z >= 0, "reg_gamma_upper requires z >= 0")
    return _as_result(special.gammaincc(alpha, z))


def log_reg_gamma_upper(alpha, z):
    """
    log Q(alpha, z), finite even where Q itself underflows.

    Falls back to the large-z asymptotic series of the upper incomplete gamma
    function wherever ``gammaincc`` returns zero.
    """
    alpha, z = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(z, dtype=float))
    _check(alpha > 0, "log_reg_gamma_upper requires alpha > 0")
    _check(z >= 0, "log_reg_gamma_upper requires z >= 0")
    q = special.gammaincc(alpha, z)
    with np.errstate(divide="ignore"):
        out = np.log(q)
    underflow = q <= 0
    if np.any(underflow):
        a, x = alpha[underflow], z[underflow]
        series = np.ones_like(x)
        term = np.ones_like(x)
        for k in range(1, _ASYMPTOTIC_TERMS):
            term = term * (a - k) / x
            series = series + term
        out = np.array(out, dtype=float)
        out[underflow] = (a - 1.0) * np.log(x) - x - special.gammaln(a) + np.log(np.abs(series))
    return _as_result(out)


def inv_reg_gamma_lower(alpha, p):
    """
    z such that P(alpha, z) = p.

    Starts from :func:`scipy.special.gammaincinv` and refines with one Newton
    step on P.

    :param alpha: shape, > 0
    :param p: probability in [0, 1)
    :return: z >= 0
    """
    alpha, p = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(p, dtype=float))
    _check(alpha > 0, "inv_reg_gamma_lower requires alpha > 0")
    _check((p >= 0) & (p < 1), "inv_reg_gamma_lower requires p in [0, 1)")
    z = special.gammaincinv(alpha, p)
    z = _newton_polish(alpha, z, special.gammainc(alpha, z) - p, sign=1.0)
    return _as_result(np.where(p == 0, 0.0, z))


def inv_reg_gamma_upper(alpha, q):
    """
    z such that Q(alpha, z) = q, for q in (0, 1].
    """
    alpha, q = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(q, dtype=float))
    _check(alpha > 0, "inv_reg_gamma_upper requires alpha > 0")
    _check((q > 0) & (q <= 1), "inv_reg_gamma_upper requires q in (0, 1]")
    z = special.gammainccinv(alpha, q)
    z = _newton_polish(alpha, z, special.gammaincc(alpha, z) - q, sign=-1.0)
    return _as_result(np.where(q == 1, 0.0, z))


def _newton_polish(alpha, z, residual, sign):
    # dP/dz is the gamma density; dQ/dz is its negative.
    positive = z > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_density = (alpha - 1.0) * np.log(z) - z - special.gammaln(alpha)
        step = residual / (sign * np.exp(log_density))
    ok = positive & np.isfinite(step)
    polished = np.where(ok, z - np.where(ok, step, 0.0), z)
    return np.where(polished > 0, polished, z)


def normal_cdf(x):
    return _as_result(special.ndtr(np.asarray(x, dtype=float)))


def log_normal_cdf(x):
    return _as_result(special.log_ndtr(np.asarray(x, dtype=float)))


def student_t_cdf(x, nu):
    """
    Student-t distribution function with ``nu`` degrees of freedom.
    """
    x, nu = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(nu, dtype=float))
    _check(nu > 0, "student_t_cdf requires nu > 0")
    return _as_result(special.stdtr(nu, x))
