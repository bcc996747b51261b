# -*- coding: utf-8 -*-
"""
Goodness-of-fit diagnostics and performance metrics. Every diagnostic
returns plain arrays or a pandas DataFrame ready to be written as CSV.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import special, stats

from deepgauge.exceptions import DomainError
from deepgauge.geometry import sample_sphere, validity_report
from deepgauge.inference import min_projection, return_level_radius
from deepgauge.specialfns import log_reg_gamma_upper

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
MIN_QQ_EXCEEDANCES = 20
MIN_ADF_EXCEEDANCES = 10
ENVELOPE_LEVELS = (2.5, 97.5)


@dataclass
class QqSeries:
    theoretical: np.ndarray
    observed: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None
    warning: str = ""

    def to_frame(self):
        frame = pd.DataFrame({"theoretical": self.theoretical, "observed": self.observed})
        if self.lower is not None:
            frame["lower"] = self.lower
            frame["upper"] = self.upper
        return frame

    def ks_statistic(self):
        """Kolmogorov-Smirnov distance of the observed values from Exp(1)."""
        return float(stats.kstest(self.observed, "expon").statistic)


def exponential_plotting_positions(m):
    k = np.arange(1, m + 1)
    return -np.log1p(-k / (m + 1.0))


def _envelope(simulate, m, simulations, rng):
    draws = np.sort(np.stack([simulate(rng) for _ in range(simulations)]), axis=1)
    lower, upper = np.percentile(draws, ENVELOPE_LEVELS, axis=0)
    return lower, upper


def truncgamma_transform(model, radii, angles):
    """
    -log of the fitted conditional survival probability above the threshold,
    which is unit exponential under the model.
    """
    rate = model.gauge(angles)
    thresholds = model.threshold(angles)
    return -(log_reg_gamma_upper(model.alpha, rate * radii) - log_reg_gamma_upper(model.alpha, rate * thresholds))


def truncgamma_qq(polar, model, simulations=200, seed=0):
    """
    QQ series of the transformed exceedances against Exp(1), with pointwise
    envelopes from simulations of the fitted truncated gamma at the observed
    exceedance angles.
    """
    thresholds = model.threshold(polar.angles)
    exceed = polar.radii > thresholds
    m = int(np.count_nonzero(exceed))
    if m < MIN_QQ_EXCEEDANCES:
        raise DomainError(f"QQ diagnostic needs at least {MIN_QQ_EXCEEDANCES} exceedances, got {m}")
    angles = polar.angles[exceed]
    observed = np.sort(truncgamma_transform(model, polar.radii[exceed], angles))
    lower = upper = None
    if simulations:
        def simulate(rng):
            radii = model.sample_tail_radii(angles, rng)
            return truncgamma_transform(model, radii, angles)
        lower, upper = _envelope(simulate, m, simulations, np.random.default_rng(seed))
    return QqSeries(exponential_plotting_positions(m), observed, lower, upper)


def standardized_exceedances(t, u, lambda_hat):
    return lambda_hat * (np.asarray(t, dtype=float) - u)


def adf_diagnostic(data, w, lambda_hat, q=0.9995, simulations=200, seed=0):
    """
    Exceedances of the min-projection T_w above its empirical q-quantile,
    scaled by the extended ADF; unit exponential if the estimate is right.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w == 0):
        raise DomainError("the ADF diagnostic needs an angle without zero components")
    values = getattr(data, "values", data)
    t = min_projection(values, w)
    u = float(np.quantile(t, q))
    observed = np.sort(standardized_exceedances(t[t > u], u, lambda_hat))
    m = observed.size
    warning = ""
    if m < MIN_ADF_EXCEEDANCES:
        warning = f"only {m} exceedances of the min-projection above u={u:.4g}"
        log.warning(f"ADF diagnostic: {warning}")
    lower = upper = None
    if simulations and m:
        lower, upper = _envelope(lambda rng: rng.exponential(1.0, m), m, simulations, np.random.default_rng(seed))
    return QqSeries(exponential_plotting_positions(m), observed, lower, upper, warning)


def return_level_coverage(data, model, p_grid):
    """
    Empirical coverage of the return-level sets.

    :return: DataFrame with columns p, p_hat, x = -log(1-p), y = -log(1-p_hat)
        and a 95% binomial band for y
    """
    values = getattr(data, "values", data)
    values = np.asarray(values, dtype=float)
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any(p_grid <= model.tau) or np.any(p_grid >= 1):
        raise DomainError(f"return-level grid must lie in (tau={model.tau}, 1)")
    norms = np.linalg.norm(values, axis=1)
    nonzero = norms > 0
    angles = values[nonzero] / norms[nonzero, None]
    n = values.shape[0]
    rows = []
    for p in p_grid:
        inside = np.count_nonzero(norms[nonzero] <= return_level_radius(model, angles, p)) + np.count_nonzero(~nonzero)
        p_hat = inside / n
        low, high = stats.binom.ppf([0.025, 0.975], n, p) / n
        with np.errstate(divide="ignore"):
            rows.append({
                "p": p, "p_hat": p_hat, "x": -np.log1p(-p), "y": -np.log1p(-p_hat),
                "y_lower": -np.log1p(-low), "y_upper": -np.log1p(-high),
            })
    return pd.DataFrame(rows)


def sphere_area(d):
    return float(np.exp(np.log(2.0) + 0.5 * d * np.log(np.pi) - special.gammaln(0.5 * d)))


def ise(g_true, model, W):
    """
    Monte Carlo integrated squared error between the inverse gauges over the
    sphere.

    :param g_true: callable true gauge, or its values on ``W``
    :param model: GaugeModel, callable estimated gauge, or its values on ``W``
    """
    W = np.asarray(W, dtype=float)
    truth = g_true(W) if callable(g_true) else np.asarray(g_true, dtype=float)
    gauge = getattr(model, "gauge", model)
    estimate = gauge(W) if callable(gauge) else np.asarray(gauge, dtype=float)
    return sphere_area(W.shape[1]) * float(np.mean(np.square(1.0 / truth - 1.0 / estimate)))


def male(true_probs, est_probs):
    true_probs = np.asarray(true_probs, dtype=float)
    est_probs = np.asarray(est_probs, dtype=float)
    if true_probs.shape != est_probs.shape:
        raise DomainError("MALE needs paired probability lists of equal length")
    if np.any(true_probs <= 0) or np.any(est_probs <= 0) or np.any(true_probs >= 1) or np.any(est_probs >= 1):
        raise DomainError("MALE needs probabilities in (0, 1)")
    return float(np.mean(np.abs(np.log(est_probs) - np.log(true_probs))))


def scaled_cloud(data):
    values = np.asarray(getattr(data, "values", data), dtype=float)
    return values / np.log(values.shape[0] / 2.0)


def slice_validation_points(data, i, j, epsilon, n=None):
    """
    Scaled observations near the (i, j) coordinate plane, for overlaying on a
    bivariate slice of the unit-level set.

    :param epsilon: bound on the scaled norm of the remaining coordinates
    :param n: sample size used in the log(n/2) scaling, the number of rows by default
    :return: (k, 2) array of scaled (x_i, x_j) pairs
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    values = np.asarray(getattr(data, "values", data), dtype=float)
    if i == j:
        raise DomainError("slice coordinates must differ")
    n = values.shape[0] if n is None else n
    scaled = values / np.log(n / 2.0)
    rest = np.delete(scaled, [i, j], axis=1)
    keep = np.linalg.norm(rest, axis=1) <= epsilon if rest.shape[1] else np.ones(values.shape[0], dtype=bool)
    points = scaled[keep][:, [i, j]]
    if points.shape[0] == 0:
        log.warning(f"No observations within epsilon={epsilon} of the ({i}, {j}) plane; try a larger epsilon")
    return points


def validity_summary(model, tolerance=1e-3, angles=None, check_size=100_000, seed=0):
    """
    Validity checks of a fitted model.

    The face-touch and containment checks use the evaluated boundary
    w / g(w) on ``angles`` (the model's reference angles by default). The
    lower bound g(w) >= |w|_inf is checked for the unclamped rescaled gauge
    on ``check_size`` fresh angles, since the evaluated gauge is floored at
    |w|_inf and cannot fail it.

    :return: dict with the per-coordinate extremes, the flags of
        :func:`validity_report`, and the count and worst gap of lower-bound
        violations
    """
    W = model.reference_angles if angles is None else np.asarray(angles, dtype=float)
    report = validity_report(model.boundary_points(W), tolerance)
    V = sample_sphere(check_size, model.d, seed)
    gap = model.unclamped_gauge(V) - np.abs(V).max(axis=1)
    violations = int(np.count_nonzero(gap < -BOUND_SLACK))
    if violations:
        log.warning(f"Unclamped gauge falls below the sup-norm at {violations} of {check_size} angles "
                    f"(worst gap {gap.min():.3g})")
    report.update({
        "bound_violations": violations,
        "min_bound_gap": float(gap.min()),
        "bound_holds": violations == 0,
    })
    return report
