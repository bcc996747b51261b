# -*- coding: utf-8 -*-
"""
Quantities derived from a fitted unit-level set: the extended angular
dependence function, joint tail probabilities and return-level sets.
"""
import logging
from dataclasses import dataclass

import numpy as np

from deepgauge.exceptions import DomainError, ExtrapolationError
from deepgauge.specialfns import inv_reg_gamma_lower, inv_reg_gamma_upper, reg_gamma_lower, reg_gamma_upper

log = logging.getLogger(__name__)

ADF_QUANTILE = 0.9995


@dataclass(frozen=True)
class AdfEstimate:
    angle: np.ndarray
    lambda_hat: float
    r_tilde: float


@dataclass(frozen=True)
class TailProbability:
    point: np.ndarray
    angle: np.ndarray
    lambda_hat: float
    u: float
    probability: float
    empirical: bool = False


def _gauge_of(model):
    return model.gauge if hasattr(model, "gauge") else model


def _check_angle(w):
    w = np.asarray(w, dtype=float)
    if np.any(w == 0):
        raise DomainError("the extended ADF is not defined for angles with zero components")
    return w


def boundary_points(gauge, candidates):
    """Points w / g(w) of the unit-level set for candidate angles."""
    candidates = np.asarray(candidates, dtype=float)
    return candidates / np.asarray(gauge(candidates), dtype=float)[:, None]


def _adf_from_points(points, angles, w, own_point):
    same_orthant = np.all(np.sign(angles) == np.sign(w), axis=1)
    pool = np.vstack([points[same_orthant], own_point[None, :]])
    sup = np.abs(w).max()
    r_tilde = float(np.max(sup * np.min(pool / w, axis=1)))
    return AdfEstimate(w, sup / r_tilde, r_tilde)


def estimate_adf(model, candidates, w):
    """
    Extended ADF at ``w`` from the fitted unit-level set.

    Candidate boundary points come from the candidate angles in the orthant
    of ``w``; the boundary point of ``w`` itself is always a candidate.

    :param model: GaugeModel or a callable gauge on unit vectors
    :param candidates: (m, d) candidate angles, e.g. the model's reference set
    :param w: (d,) query angle without zero components
    :return: AdfEstimate
    """
    w = _check_angle(w)
    gauge = _gauge_of(model)
    candidates = np.asarray(candidates, dtype=float)
    points = boundary_points(gauge, candidates)
    own = w / float(np.atleast_1d(gauge(w[None, :]))[0])
    return _adf_from_points(points, candidates, w, own)


def estimate_adf_many(model, candidates, W):
    """Extended ADF at each row of ``W``, sharing one boundary evaluation."""
    W = _check_angle(np.atleast_2d(W))
    gauge = _gauge_of(model)
    candidates = np.asarray(candidates, dtype=float)
    points = boundary_points(gauge, candidates)
    own = boundary_points(gauge, W)
    return [_adf_from_points(points, candidates, w, p) for w, p in zip(W, own)]


def adf_set_points(model, candidates, W):
    """Points w / Lambda(w) of the extended ADF set."""
    estimates = estimate_adf_many(model, candidates, W)
    return np.array([e.angle / e.lambda_hat for e in estimates])


def coefficient_of_tail_dependence(model, candidates):
    """
    Residual tail dependence coefficient from the extended ADF at the
    positive diagonal: 1 / (sqrt(d) Lambda(1_d / sqrt(d))).
    """
    d = candidates.shape[1]
    diagonal = np.full(d, 1.0 / np.sqrt(d))
    return 1.0 / (np.sqrt(d) * estimate_adf(model, candidates, diagonal).lambda_hat)


def min_projection(values, w):
    """T_w = min_i X_i / w_i for every row."""
    return np.min(np.asarray(values, dtype=float) / np.asarray(w, dtype=float), axis=1)


def tail_probability(x, data, model, candidates=None, q=ADF_QUANTILE, lambda_hat=None, fallback="error"):
    """
    Pr(sgn(x_i) X_i > sgn(x_i) x_i for all i) by exponential extrapolation of
    the min-projection T_w above its empirical q-quantile.

    :param x: (d,) target point without zero components
    :param data: DataMatrix on Laplace margins (or (n, d) array)
    :param model: GaugeModel or callable gauge
    :param candidates: candidate angles for the ADF, the model's reference set if omitted
    :param q: level of the empirical threshold u
    :param lambda_hat: precomputed extended ADF at x / |x|
    :param fallback: "error" raises when |x| < u, "empirical" returns the
        empirical exceedance frequency instead
    :return: TailProbability
    """
    x = _check_angle(x)
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    values = getattr(data, "values", data)
    r = float(np.linalg.norm(x))
    w = x / r
    t = min_projection(values, w)
    u = float(np.quantile(t, q))
    if lambda_hat is None:
        candidates = model.reference_angles if candidates is None else candidates
        lambda_hat = estimate_adf(model, candidates, w).lambda_hat
    if r < u:
        if fallback == "empirical":
            probability = float(np.mean(t > r))
            log.info(f"|x|={r:.4g} lies below u={u:.4g}; using the empirical frequency {probability:.4g}")
            return TailProbability(x, w, lambda_hat, u, probability, empirical=True)
        raise ExtrapolationError(
            f"|x|={r:.4g} lies below the empirical {q}-quantile u={u:.4g} of the min-projection; "
            f"estimate the probability empirically instead"
        )
    return TailProbability(x, w, lambda_hat, u, float(np.exp(-lambda_hat * (r - u)) * (1.0 - q)))


def return_level_radius(model, w, p):
    """
    p-quantile of the radius given the angle, for tau < p < 1.

    The conditional distribution is the fitted model: tau below the
    threshold surface and a truncated gamma above it.
    """
    if not model.tau < p < 1:
        raise DomainError(f"return level needs tau={model.tau} < p < 1, got {p}")
    W = np.atleast_2d(np.asarray(w, dtype=float))
    rate = model.gauge(W)
    z0 = rate * model.threshold(W)
    share = (p - model.tau) / (1.0 - model.tau)
    survival = reg_gamma_upper(model.alpha, z0)
    inner = share * survival + reg_gamma_lower(model.alpha, z0)
    # Invert on whichever side of the median keeps precision.
    lower = inner < 0.5
    z = np.where(
        lower,
        inv_reg_gamma_lower(model.alpha, np.where(lower, inner, 0.0)),
        inv_reg_gamma_upper(model.alpha, np.where(lower, 1.0, np.maximum((1.0 - share) * survival, np.finfo(float).tiny))),
    )
    radius = z / rate
    return float(radius[0]) if np.ndim(w) == 1 else radius


def return_level_membership(model, p, x, rtol=1e-9):
    """
    Whether ``x`` lies in the closed return-level set B_p. The origin always does.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0:
        return True
    radius = return_level_radius(model, x / r, p)
    return bool(r <= radius * (1.0 + rtol))


def return_level_set(model, p, W):
    """Boundary points r_p(w) w of the return-level set."""
    W = np.asarray(W, dtype=float)
    return W * return_level_radius(model, W, p)[:, None]
