# -*- coding: utf-8 -*-
"""
Simulators, joint densities and theoretical gauge functions for the
Gaussian, Student-t and logistic copulas on standard Laplace margins.
"""
import enum
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special, stats

from deepgauge.exceptions import ConfigurationError, DomainError
from deepgauge.margins import LOG2, DataMatrix, MarginTag, exp_to_laplace, laplace_cdf, laplace_logpdf, laplace_quantile

log = logging.getLogger(__name__)

ORACLE_GRID = np.array([25.0, 50.0, 100.0, 200.0])


class CopulaKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class CopulaSpec:
    """
    :param kind: copula family
    :param d: dimension
    :param corr: d x d correlation matrix (gaussian, student_t)
    :param nu: degrees of freedom (student_t)
    :param theta: dependence parameter in (0, 1] (logistic); 1 is independence
    """
    kind: CopulaKind
    d: int
    corr: np.ndarray = field(default=None, repr=False)
    nu: float = None
    theta: float = None

    def __post_init__(self):
        object.__setattr__(self, "kind", CopulaKind(self.kind))
        if self.d < 2:
            raise ConfigurationError("copulas need d >= 2")
        if self.kind is CopulaKind.LOGISTIC:
            if self.theta is None or not 0 < self.theta <= 1:
                raise ConfigurationError("logistic copula needs theta in (0, 1]")
            return
        if self.corr is None:
            raise ConfigurationError(f"{self.kind.value} copula needs a correlation matrix")
        corr = np.asarray(self.corr, dtype=float)
        if corr.shape != (self.d, self.d):
            raise ConfigurationError(f"correlation matrix must be {self.d}x{self.d}")
        if not np.allclose(corr, corr.T) or not np.allclose(np.diag(corr), 1.0):
            raise ConfigurationError("correlation matrix must be symmetric with unit diagonal")
        try:
            linalg.cholesky(corr, lower=True)
        except linalg.LinAlgError:
            raise ConfigurationError("correlation matrix is not positive definite")
        object.__setattr__(self, "corr", corr)
        if self.kind is CopulaKind.STUDENT_T and (self.nu is None or self.nu <= 0):
            raise ConfigurationError("student_t copula needs nu > 0")

    @property
    def precision(self):
        return linalg.inv(self.corr)

    @property
    def cholesky(self):
        return linalg.cholesky(self.corr, lower=True)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "d": self.d,
            "corr": None if self.corr is None else self.corr.tolist(),
            "nu": self.nu,
            "theta": self.theta,
        }

    @classmethod
    def from_dict(cls, payload):
        corr = payload.get("corr")
        return cls(
            kind=payload["kind"], d=int(payload["d"]),
            corr=None if corr is None else np.asarray(corr, dtype=float),
            nu=payload.get("nu"), theta=payload.get("theta"),
        )


def equicorrelation(d, rho):
    return np.full((d, d), float(rho)) + (1.0 - rho) * np.eye(d)


def nested_correlation(d_max, seed, d=None):
    """
    Random correlation matrix from a normalised Gram matrix. Requests for a
    smaller dimension return the leading principal submatrix, so the
    correlation structure is nested across dimensions for a fixed seed.

    :param d_max: size of the full matrix, >= 2
    :param seed: integer seed
    :param d: requested dimension, defaults to d_max
    :return: d x d correlation matrix
    """
    if d_max < 2:
        raise DomainError("nested_correlation needs d_max >= 2")
    d = d_max if d is None else d
    if not 1 <= d <= d_max:
        raise DomainError(f"requested dimension {d} exceeds d_max={d_max}")
    rng = np.random.default_rng(seed)
    factor = rng.standard_normal((d_max, d_max + 1))
    gram = factor @ factor.T
    scale = 1.0 / np.sqrt(np.diag(gram))
    corr = gram * np.outer(scale, scale)
    np.fill_diagonal(corr, 1.0)
    return corr[:d, :d]


def _laplace_from_logs(log_cdf, log_sf):
    # Use whichever tail keeps full relative precision.
    return np.where(log_cdf < -LOG2, LOG2 + log_cdf, -(LOG2 + log_sf))


def _positive_stable(theta, size, rng):
    """Positive stable variates with Laplace transform exp(-s**theta)."""
    angle = rng.uniform(0.0, np.pi, size)
    expo = rng.exponential(1.0, size)
    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.sin(theta * angle) / np.sin(angle) ** (1.0 / theta)
        tail = (np.sin((1.0 - theta) * angle) / expo) ** ((1.0 - theta) / theta)
    return head * tail


def sample(spec, n, seed):
    """
    Draw ``n`` rows from the copula on exact standard Laplace margins.

    :param spec: CopulaSpec
    :param n: number of rows, >= 1
    :param seed: integer seed or numpy Generator
    :return: DataMatrix tagged laplace
    """
    if n < 1:
        raise DomainError("sample needs n >= 1")
    rng = np.random.default_rng(seed)
    d = spec.d
    if spec.kind is CopulaKind.GAUSSIAN:
        z = rng.standard_normal((n, d)) @ spec.cholesky.T
        values = _laplace_from_logs(special.log_ndtr(z), special.log_ndtr(-z))
    elif spec.kind is CopulaKind.STUDENT_T:
        z = rng.standard_normal((n, d)) @ spec.cholesky.T
        mixing = np.sqrt(rng.chisquare(spec.nu, n) / spec.nu)
        t = z / mixing[:, None]
        values = _laplace_from_logs(stats.t.logcdf(t, spec.nu), stats.t.logsf(t, spec.nu))
    else:
        frailty = _positive_stable(spec.theta, n, rng)
        expo = rng.exponential(1.0, (n, d))
        # -log U, with U uniform on (0, 1)
        neg_log_u = (expo / frailty[:, None]) ** spec.theta
        with np.errstate(divide="ignore"):
            log_sf = np.log(-np.expm1(-neg_log_u))
        values = _laplace_from_logs(-neg_log_u, log_sf)
    return DataMatrix(values, MarginTag.LAPLACE)


def _check_nonzero(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.all(x == 0, axis=-1)):
        raise DomainError("gauge functions are undefined at the origin")
    return x


def gauge_gaussian(x, Q):
    """
    Gauge of the Gaussian copula on Laplace margins, the quadratic form of
    the precision matrix in signed square roots of ``x``.
    """
    x = _check_nonzero(x)
    root = np.sign(x) * np.sqrt(np.abs(x))
    return np.einsum("...i,ij,...j->...", root, np.asarray(Q, dtype=float), root)


def gauge_student_t(x, nu, d=None):
    x = _check_nonzero(x)
    if nu <= 0:
        raise DomainError("gauge_student_t needs nu > 0")
    d = x.shape[-1] if d is None else d
    absx = np.abs(x)
    return -absx.sum(axis=-1) / nu + (1.0 + d / nu) * absx.max(axis=-1)


def _normal_scores(x):
    return -np.sign(x) * special.ndtri_exp(-LOG2 - np.abs(x))


def _student_scores(x, nu):
    return np.sign(x) * stats.t.isf(0.5 * np.exp(-np.abs(x)), nu)


def _stable_derivative_coefficients(d, theta):
    """
    Coefficients a_k with (-1)^d d^d/ds^d exp(-s**theta)
    = exp(-s**theta) * sum_k a_k s**(k*theta - d).
    """
    coef = np.zeros(d + 1)
    coef[0] = 1.0
    for order in range(d):
        nxt = np.zeros(d + 1)
        for k in range(order + 1):
            nxt[k] += (order - k * theta) * coef[k]
            nxt[k + 1] += theta * coef[k]
        coef = nxt
    return coef


def _logistic_logpdf(x, theta):
    d = x.shape[-1]
    beta = 1.0 / theta
    neg_log_u = np.where(x < 0, LOG2 - x, -np.log1p(-0.5 * np.exp(-np.abs(x))))
    log_y = np.log(neg_log_u)
    log_a = special.logsumexp(beta * log_y, axis=-1)
    coef = _stable_derivative_coefficients(d, theta)
    k = np.arange(d + 1)
    keep = coef > 0
    exponents = (k[keep] * theta - d)[None, :] * log_a[:, None]
    log_series = special.logsumexp(exponents, b=coef[keep][None, :], axis=-1)
    log_fy = d * np.log(beta) + (beta - 1.0) * log_y.sum(axis=-1) - np.exp(theta * log_a) + log_series
    return log_fy + (laplace_logpdf(x) + neg_log_u).sum(axis=-1)


def log_density(spec, x, margin=MarginTag.LAPLACE):
    """
    Joint log-density of the copula model at ``x`` on Laplace or unit
    exponential margins, evaluated in log space throughout.

    :param spec: CopulaSpec
    :param x: (d,) or (m, d) points
    :param margin: MarginTag.LAPLACE or MarginTag.EXPONENTIAL
    :return: log-density, scalar or (m,)
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    margin = MarginTag(margin)
    jacobian = np.zeros(x.shape[0])
    if margin is MarginTag.EXPONENTIAL:
        if np.any(x <= 0):
            raise DomainError("exponential-margin density needs positive arguments")
        with np.errstate(over="ignore"):
            log_slope = np.where(x <= LOG2, -np.log(np.expm1(np.minimum(x, LOG2))), 0.0)
        jacobian = log_slope.sum(axis=-1)
        x = exp_to_laplace(x)
    elif margin is not MarginTag.LAPLACE:
        raise DomainError(f"no joint density on {margin.value} margins")

    if spec.kind is CopulaKind.GAUSSIAN:
        z = _normal_scores(x)
        joint = stats.multivariate_normal(mean=np.zeros(spec.d), cov=spec.corr).logpdf(z)
        out = joint - stats.norm.logpdf(z).sum(axis=-1) + laplace_logpdf(x).sum(axis=-1)
    elif spec.kind is CopulaKind.STUDENT_T:
        z = _student_scores(x, spec.nu)
        joint = stats.multivariate_t(loc=np.zeros(spec.d), shape=spec.corr, df=spec.nu).logpdf(z)
        out = joint - stats.t.logpdf(z, spec.nu).sum(axis=-1) + laplace_logpdf(x).sum(axis=-1)
    else:
        out = _logistic_logpdf(x, spec.theta)
    out = np.atleast_1d(out) + jacobian
    return out[0] if single else out


def gauge_numerical_oracle(spec, w, t_max=200.0, margin=MarginTag.LAPLACE):
    """
    Numerical gauge -log f(t w)/t, extrapolated to t -> infinity.

    The values on the grid t_max * (1/8, 1/4, 1/2, 1) are regressed on
    (1, log t / t, 1 / t); the intercept is returned.

    :param spec: CopulaSpec
    :param w: (d,) unit vector or (m, d) unit vectors
    :param t_max: largest radius on the grid
    :param margin: margins the density is evaluated on
    :return: gauge value(s)
    """
    w = _check_nonzero(w)
    single = w.ndim == 1
    w = np.atleast_2d(w)
    grid = ORACLE_GRID * (t_max / ORACLE_GRID[-1])
    values = np.stack([-log_density(spec, t * w, margin) / t for t in grid])
    design = np.column_stack([np.ones_like(grid), np.log(grid) / grid, 1.0 / grid])
    coefficients, *_ = np.linalg.lstsq(design, values, rcond=None)
    out = coefficients[0]
    return out[0] if single else out


def theoretical_gauge(spec, W):
    """
    Closed-form gauge where one exists, numerical oracle otherwise.
    """
    if spec.kind is CopulaKind.GAUSSIAN:
        return gauge_gaussian(W, spec.precision)
    if spec.kind is CopulaKind.STUDENT_T:
        return gauge_student_t(W, spec.nu, spec.d)
    return gauge_numerical_oracle(spec, W)


def _gumbel_cdf(u, theta):
    with np.errstate(divide="ignore"):
        neg_log = -np.log(u)
    return np.exp(-np.sum(neg_log ** (1.0 / theta)) ** theta)


def region_probability(spec, corner):
    """
    Pr(sgn(x_i) X_i > sgn(x_i) x_i for all i) under the copula model.

    :param spec: CopulaSpec
    :param corner: (d,) point x with no zero component
    :return: probability
    """
    corner = np.asarray(corner, dtype=float)
    if np.any(corner == 0):
        raise DomainError("region corner needs non-zero components")
    signs = np.sign(corner)
    if spec.kind is CopulaKind.LOGISTIC:
        u = laplace_cdf(corner)
        upper = np.flatnonzero(signs > 0)
        total = 0.0
        for size in range(len(upper) + 1):
            for subset in itertools.combinations(upper, size):
                v = np.where(signs > 0, 1.0, u)
                v[list(subset)] = u[list(subset)]
                total += (-1) ** size * _gumbel_cdf(v, spec.theta)
        return float(total)
    flipped = spec.corr * np.outer(signs, signs)
    if spec.kind is CopulaKind.GAUSSIAN:
        limit = -signs * _normal_scores(corner)
        return float(stats.multivariate_normal.cdf(
            limit, mean=np.zeros(spec.d), cov=flipped, maxpts=200_000 * spec.d, abseps=1e-13, releps=1e-6,
        ))
    limit = -signs * _student_scores(corner, spec.nu)
    dist = stats.multivariate_t(loc=np.zeros(spec.d), shape=flipped, df=spec.nu)
    return float(dist.cdf(limit, maxpts=1_000_000, random_state=0))


def probability_targets(kind, d):
    """
    Joint-tail regions used in the simulation study, as named corners.

    :return: list of (name, corner) pairs
    """
    kind = CopulaKind(kind)
    ones = np.ones(d)
    targets = [
        ("upper_0.99", laplace_quantile(0.99) * ones),
        ("upper_0.999", laplace_quantile(0.999) * ones),
        ("lower_0.01", laplace_quantile(0.01) * ones),
        ("lower_0.001", laplace_quantile(0.001) * ones),
    ]
    if kind is not CopulaKind.LOGISTIC:
        odd = np.arange(d) % 2 == 0
        for level in (0.2, 0.4):
            corner = np.where(odd, laplace_quantile(0.999), laplace_quantile(level))
            targets.append((f"mixed_0.999_{level}", corner))
    return targets
