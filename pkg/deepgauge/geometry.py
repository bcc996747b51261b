# -*- coding: utf-8 -*-
"""
Angular-radial decomposition, reference angles on the sphere and the
rescaling that turns any positive radial function into a valid gauge.

A radial function ``h`` maps an (m, d) array of unit vectors to m positive
radii. The scaling factors stretch its level set so that it touches every
face of [-1, 1]^d, which is what makes the rescaled gauge valid.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from deepgauge.exceptions import DomainError

log = logging.getLogger(__name__)

INNER_RADIUS = 0.05
CHUNK = 100_000


@dataclass(frozen=True)
class PolarSample:
    radii: np.ndarray
    angles: np.ndarray
    dropped: int = 0

    @property
    def n(self):
        return self.radii.shape[0]

    @property
    def d(self):
        return self.angles.shape[1]

    def subset(self, index):
        return PolarSample(self.radii[index], self.angles[index])


@dataclass(frozen=True)
class ScalingFactors:
    """
    Per-coordinate extremes of w_i h(w) over the reference angles.

    ``divisors(w)`` gives b_i(w_i) = b_upper_i if w_i >= 0 else -b_lower_i,
    always positive.
    """
    b_upper: np.ndarray
    b_lower: np.ndarray
    argmax_angles: np.ndarray = field(default=None, repr=False, compare=False)
    argmin_angles: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        upper = np.asarray(self.b_upper, dtype=float)
        lower = np.asarray(self.b_lower, dtype=float)
        if np.any(upper <= 0) or np.any(lower >= 0):
            raise DomainError("scaling factors need b_upper > 0 and b_lower < 0")
        object.__setattr__(self, "b_upper", upper)
        object.__setattr__(self, "b_lower", lower)

    @property
    def d(self):
        return self.b_upper.shape[0]

    def divisors(self, w):
        return np.where(np.asarray(w) >= 0, self.b_upper, -self.b_lower)

    def scaled(self, factor):
        return ScalingFactors(self.b_upper * factor, self.b_lower * factor, self.argmax_angles, self.argmin_angles)

    def to_dict(self):
        return {"b_upper": self.b_upper.tolist(), "b_lower": self.b_lower.tolist()}

    @classmethod
    def from_dict(cls, payload):
        return cls(np.asarray(payload["b_upper"], dtype=float), np.asarray(payload["b_lower"], dtype=float))


def decompose(data):
    """
    Split observations into radii (Euclidean norms) and angles.

    Exactly-zero rows have no angle; they are dropped and counted.

    :param data: DataMatrix or (n, d) array
    :return: PolarSample
    """
    values = getattr(data, "values", data)
    values = np.asarray(values, dtype=float)
    radii = np.linalg.norm(values, axis=1)
    keep = radii > 0
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        log.warning(f"Dropped {dropped} all-zero observation(s) before the polar decomposition")
    return PolarSample(radii[keep], values[keep] / radii[keep, None], dropped)


def normalize(x):
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def sample_sphere(m, d, seed):
    """
    Approximately uniform points on the unit sphere by rejection from the cube.

    :param m: number of points
    :param d: dimension
    :param seed: integer seed
    :return: (m, d) array of unit vectors
    """
    if m < 1:
        raise DomainError("sample_sphere needs m >= 1")
    if d < 2:
        raise DomainError("sample_sphere needs d >= 2")
    rng = np.random.default_rng(seed)
    batches = []
    found = 0
    while found < m:
        draws = rng.uniform(-1.0, 1.0, size=(min(CHUNK, 4 * (m - found) + 64), d))
        norms = np.linalg.norm(draws, axis=1)
        accepted = draws[(norms <= 1.0) & (norms >= INNER_RADIUS)]
        batches.append(accepted / np.linalg.norm(accepted, axis=1, keepdims=True))
        found += accepted.shape[0]
    return np.concatenate(batches)[:m]


def evaluate_in_chunks(h, W, chunk=CHUNK):
    W = np.asarray(W, dtype=float)
    if W.shape[0] <= chunk:
        return np.asarray(h(W), dtype=float)
    return np.concatenate([np.asarray(h(W[start:start + chunk]), dtype=float)
                           for start in range(0, W.shape[0], chunk)])


def scaling_factors(h, W, values=None):
    """
    Compute b_i^U = max_w w_i h(w) and b_i^L = min_w w_i h(w) over ``W``.

    :param h: radial function on unit vectors
    :param W: (m, d) reference angles
    :param values: precomputed h(W), skips the evaluation
    :return: ScalingFactors
    """
    W = np.asarray(W, dtype=float)
    radii = evaluate_in_chunks(h, W) if values is None else np.asarray(values, dtype=float)
    if np.any(~(radii > 0)):
        raise DomainError("radial function must be strictly positive on the reference angles")
    points = W * radii[:, None]
    upper = points.argmax(axis=0)
    lower = points.argmin(axis=0)
    columns = np.arange(W.shape[1])
    b_upper = points[upper, columns]
    b_lower = points[lower, columns]
    if np.any(b_upper <= 0) or np.any(b_lower >= 0):
        raise DomainError("reference angles do not cover every orthant direction")
    return ScalingFactors(b_upper, b_lower, W[upper], W[lower])


def kappa(w, b):
    w = np.asarray(w, dtype=float)
    return normalize(w / b.divisors(w))


def kappa_inverse(w, b):
    """
    Inverse of :func:`kappa`: scale each component by its divisor and
    renormalise. Signs are preserved, so the divisors chosen from ``w`` are
    the divisors of the pre-image.
    """
    w = np.asarray(w, dtype=float)
    return normalize(w * b.divisors(w))


def rescaled_gauge(h, b, w, clamp=True):
    """
    Gauge of the rescaled level set at unit vectors ``w``.

    With v the pre-image of w under kappa, the rescaled boundary point in
    direction w is h(v) v / b(v) and the gauge is the inverse of its norm.
    With ``clamp`` the result is floored at the sup-norm of ``w``; the floor
    only binds for directions whose extremes fall between reference angles.

    :param h: radial function on unit vectors
    :param b: ScalingFactors computed for h
    :param w: (d,) or (m, d) unit vectors
    :return: gauge value(s)
    """
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w = np.atleast_2d(w)
    v = kappa_inverse(w, b)
    radii = evaluate_in_chunks(h, v)
    gauge = 1.0 / np.linalg.norm(radii[:, None] * v / b.divisors(v), axis=1)
    if clamp:
        gauge = np.maximum(gauge, np.abs(w).max(axis=1))
    return gauge[0] if single else gauge


def face_touch_error(h, b, W):
    """
    Largest relative miss of the faces of [-1, 1]^d by the rescaled boundary
    {w / g(w) : w in W}, before any clamping.
    """
    candidate = scaling_factors(h, kappa_inverse(W, b))
    return max(float(np.max(np.abs(candidate.b_upper / b.b_upper - 1.0))),
               float(np.max(np.abs(candidate.b_lower / b.b_lower - 1.0)))), candidate


def align_scaling_factors(h, W, b=None, max_iter=50, rtol=1e-10):
    """
    Scaling factors whose rescaled boundary touches every face at the
    reference angles themselves.

    The extremes in :func:`scaling_factors` are taken over the pre-images, so
    the touching directions are kappa(W) and generally miss W. Taking the
    extremes over kappa^{-1}(W) instead and repeating until the factors
    settle moves the touching directions onto W. The miss of each iterate is
    its relative change, and the iterate with the smallest miss is kept.

    :param h: radial function on unit vectors
    :param W: (m, d) reference angles
    :param b: starting ScalingFactors, computed over W if omitted
    :return: ScalingFactors
    """
    W = np.asarray(W, dtype=float)
    b = scaling_factors(h, W) if b is None else b
    best, best_error = b, np.inf
    for iteration in range(max_iter):
        error, candidate = face_touch_error(h, b, W)
        if error < best_error:
            best, best_error = b, error
        if error <= rtol:
            log.debug(f"Scaling factors aligned after {iteration} iteration(s)")
            return b
        b = candidate
    log.warning(f"Scaling factors did not settle in {max_iter} iterations; face miss {best_error:.3g}")
    return best


def validity_report(points, tolerance=1e-3):
    """
    Check a set of boundary points w / g(w) against the conditions of a
    valid limit set: contained in [-1, 1]^d and touching every face.

    :param points: (m, d) boundary points
    :return: dict with the per-coordinate extremes and a ``valid`` flag
    """
    upper = points.max(axis=0)
    lower = points.min(axis=0)
    contained = bool(np.all(np.abs(points) <= 1.0 + 1e-12))
    touches = bool(np.all(upper >= 1.0 - tolerance) and np.all(lower <= -1.0 + tolerance))
    return {
        "upper": upper,
        "lower": lower,
        "contained": contained,
        "touches": touches,
        "valid": contained and touches,
    }


def bivariate_slice(gauge, i, j, grid, d):
    """
    Trace the unit-level set on the great circle spanned by coordinates
    ``i`` and ``j`` (0-based).

    :param gauge: callable mapping (m, d) unit vectors to gauge values
    :param grid: number of equally spaced polar angles
    :return: (grid, 2) array of points (w_i, w_j) / g(w)
    """
    if i == j:
        raise DomainError("bivariate_slice needs two distinct coordinates")
    if not (0 <= i < d and 0 <= j < d):
        raise DomainError(f"slice coordinates must lie in [0, {d})")
    if grid < 1:
        raise DomainError("bivariate_slice needs grid >= 1")
    phi = 2.0 * np.pi * np.arange(grid) / grid
    W = np.zeros((grid, d))
    W[:, i] = np.cos(phi)
    W[:, j] = np.sin(phi)
    values = np.asarray(gauge(W), dtype=float)
    return W[:, [i, j]] / values[:, None]
