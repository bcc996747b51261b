# -*- coding: utf-8 -*-
"""
Two-stage gauge estimation.

Stage one fits a radial quantile surface r_tau(w) = exp(m(w)) with the
tilted loss. Stage two pre-trains a gauge network on the rescaled quantile
surface and then fits a truncated gamma model to the exceedances
{r > r_tau(w)}, whose rate is the rescaled gauge of the network.
"""
import functools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from deepgauge import geometry
from deepgauge.exceptions import DomainError, TwoStageError
from deepgauge.neuralnet import (
    MlpParams, Objective, TrainConfig, forward, init_params, tilted_loss, tilted_loss_grad, train,
    train_validation_split, truncgamma_nll,
)
from deepgauge.specialfns import inv_reg_gamma_upper, log_gamma, log_reg_gamma_upper

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
SOFT_MIN_SAMPLE = 100
ALPHA_BOUNDS = (0.1, 10.0)


@functools.lru_cache(maxsize=4)
def reference_angles(size, d, seed):
    """
    Reference angle set used for the scaling factors, regenerated
    deterministically from its size and seed.
    """
    angles = geometry.sample_sphere(size, d, seed)
    angles.setflags(write=False)
    return angles


def sup_norm(W):
    return np.abs(W).max(axis=-1)


def _raw_gauge(params, W):
    return np.maximum(forward(params, W), 0.0) + sup_norm(W)


@dataclass(frozen=True)
class Evaluation:
    gauge: float
    threshold: float
    point: np.ndarray


@dataclass(frozen=True)
class GaugeModel:
    quantile_net: MlpParams
    gauge_net: MlpParams
    alpha: float
    tau: float
    scaling: geometry.ScalingFactors
    reference_size: int
    reference_seed: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("gauge model needs alpha > 0")
        if not 0 < self.tau < 1:
            raise DomainError("gauge model needs tau in (0, 1)")

    @property
    def d(self):
        return self.gauge_net.input_dim

    @property
    def reference_angles(self):
        return reference_angles(self.reference_size, self.d, self.reference_seed)

    def threshold(self, W):
        return np.exp(forward(self.quantile_net, W))

    def raw_gauge(self, W):
        W = np.asarray(W, dtype=float)
        return _raw_gauge(self.gauge_net, W)

    def radial(self, W):
        return 1.0 / self.raw_gauge(W)

    def gauge(self, W):
        """Rescaled gauge at unit vectors, floored at their sup-norm."""
        return geometry.rescaled_gauge(self.radial, self.scaling, W)

    def evaluate(self, w):
        w = np.asarray(w, dtype=float)
        value = float(self.gauge(w))
        return Evaluation(value, float(self.threshold(w)), w / value)

    def boundary_points(self, W=None):
        """Points w / g(w) of the unit-level boundary, on the reference angles by default."""
        W = self.reference_angles if W is None else np.asarray(W, dtype=float)
        return W / self.gauge(W)[:, None]

    def unclamped_gauge(self, W):
        return geometry.rescaled_gauge(self.radial, self.scaling, W, clamp=False)

    def sample_tail_radii(self, angles, rng):
        """One draw per angle from the fitted gamma truncated at r_tau(w)."""
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        thresholds = self.threshold(angles)
        rate = self.gauge(angles)
        survival = np.exp(log_reg_gamma_upper(self.alpha, rate * thresholds))
        uniform = 1.0 - rng.random(angles.shape[0])
        tail = inv_reg_gamma_upper(self.alpha, np.maximum(uniform * survival, np.finfo(float).tiny)) / rate
        return np.maximum(tail, thresholds)

    def sample_radii(self, angles, rng):
        """
        Draw one radius per angle: uniform on (0, r_tau(w)) with probability
        tau, otherwise from the fitted truncated gamma tail.
        """
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        body = rng.random(angles.shape[0]) < self.tau
        tail = self.sample_tail_radii(angles, rng)
        return np.where(body, rng.random(angles.shape[0]) * self.threshold(angles), tail)

    def to_dict(self):
        return {
            "version": FORMAT_VERSION,
            "d": self.d,
            "tau": self.tau,
            "alpha": self.alpha,
            "quantile_net": self.quantile_net.to_dict(),
            "gauge_net": self.gauge_net.to_dict(),
            "scaling": self.scaling.to_dict(),
            "reference": {"size": self.reference_size, "seed": self.reference_seed},
        }

    @classmethod
    def from_dict(cls, payload):
        if payload.get("version") != FORMAT_VERSION:
            raise DomainError(f"unsupported model format version {payload.get('version')}")
        return cls(
            quantile_net=MlpParams.from_dict(payload["quantile_net"]),
            gauge_net=MlpParams.from_dict(payload["gauge_net"]),
            alpha=float(payload["alpha"]),
            tau=float(payload["tau"]),
            scaling=geometry.ScalingFactors.from_dict(payload["scaling"]),
            reference_size=int(payload["reference"]["size"]),
            reference_seed=int(payload["reference"]["seed"]),
        )


def evaluate(model, w):
    return model.evaluate(w)


class QuantileObjective(Objective):
    name = "threshold"

    def __init__(self, angles, radii, tau):
        self.inputs = np.asarray(angles, dtype=float)
        self.radii = np.asarray(radii, dtype=float)
        self.tau = tau

    def losses(self, output, index, extra):
        return tilted_loss(self.radii[index], np.exp(output), self.tau)

    def loss_and_grad(self, output, index, extra):
        fitted = np.exp(output)
        value = tilted_loss(self.radii[index], fitted, self.tau).mean()
        delta = tilted_loss_grad(self.radii[index], fitted, self.tau) * fitted / output.size
        return value, delta, {}


class PretrainObjective(Objective):
    """Squared error between ReLU(m(w)) + |w|_inf and a target gauge."""
    name = "pretrain"

    def __init__(self, angles, target):
        self.inputs = np.asarray(angles, dtype=float)
        self.target = np.asarray(target, dtype=float)
        self.floor = sup_norm(self.inputs)

    def losses(self, output, index, extra):
        return np.square(np.maximum(output, 0.0) + self.floor[index] - self.target[index])

    def loss_and_grad(self, output, index, extra):
        residual = np.maximum(output, 0.0) + self.floor[index] - self.target[index]
        delta = 2.0 * residual * (output > 0) / output.size
        return np.square(residual).mean(), delta, {}


class TruncatedGammaObjective(Objective):
    """
    Truncated gamma likelihood of the exceedances with rate equal to the
    rescaled gauge.

    The network is evaluated at the pre-images v = kappa^{-1}(w) of the data
    angles, so that the rescaled gauge is g(w) = raw(v) / |v / b(v)|. The
    scaling factors b are recomputed from the current network on a subset of
    the reference angles every ``refresh_every`` epochs and held fixed in
    between.
    """
    name = "gauge"

    def __init__(self, angles, radii, thresholds, reference, init, refresh_every=1):
        self.angles = np.asarray(angles, dtype=float)
        self.radii = np.asarray(radii, dtype=float)
        self.thresholds = np.asarray(thresholds, dtype=float)
        self.reference = np.asarray(reference, dtype=float)
        self.refresh_every = refresh_every
        d = self.angles.shape[1]
        self.extra_init = {"log_alpha": float(np.log(d))}
        self.extra_bounds = {"log_alpha": (np.log(ALPHA_BOUNDS[0]), np.log(ALPHA_BOUNDS[1] * d))}
        self.floor = sup_norm(self.angles)
        self.refresh(init)

    def refresh(self, params):
        raw = _raw_gauge(params, self.reference)
        self.scaling = geometry.scaling_factors(None, self.reference, values=1.0 / raw)
        self.inputs = geometry.kappa_inverse(self.angles, self.scaling)
        self.pre_floor = sup_norm(self.inputs)
        self.stretch = np.linalg.norm(self.inputs / self.scaling.divisors(self.inputs), axis=1)

    def begin_epoch(self, epoch, params, extra):
        if epoch > 1 and (epoch - 1) % self.refresh_every == 0:
            self.refresh(params)

    def _rate(self, output, index):
        unclamped = (np.maximum(output, 0.0) + self.pre_floor[index]) / self.stretch[index]
        return np.maximum(unclamped, self.floor[index]), unclamped >= self.floor[index]

    def losses(self, output, index, extra):
        rate, _ = self._rate(output, index)
        return truncgamma_nll(self.radii[index], rate, np.exp(extra["log_alpha"]), self.thresholds[index])

    def loss_and_grad(self, output, index, extra):
        alpha = float(np.exp(extra["log_alpha"]))
        rate, free = self._rate(output, index)
        radii, thresholds = self.radii[index], self.thresholds[index]
        z = rate * thresholds
        log_q = log_reg_gamma_upper(alpha, z)
        with np.errstate(divide="ignore"):
            dlogq_dz = -np.exp((alpha - 1.0) * np.log(z) - z - log_gamma(alpha) - log_q)
        dloss_drate = -alpha / rate + radii + thresholds * dlogq_dz
        delta = dloss_drate * free * (output > 0) / self.stretch[index] / output.size

        step = 1e-5 * alpha
        dlogq_dalpha = (log_reg_gamma_upper(alpha + step, z) - log_reg_gamma_upper(alpha - step, z)) / (2.0 * step)
        dloss_dalpha = -(np.log(rate) + np.log(radii) - special.digamma(alpha) - dlogq_dalpha)
        value = truncgamma_nll(radii, rate, alpha, thresholds)
        return float(np.mean(value)), delta, {"log_alpha": float(alpha * np.mean(dloss_dalpha))}


@dataclass
class QuantileFit:
    params: MlpParams
    tau: float
    split: tuple
    log: object
    exceedance_fraction: float

    def threshold(self, W):
        return np.exp(forward(self.params, W))


class InitialGaugeTarget:
    """
    Valid gauge obtained by rescaling the fitted quantile surface.
    """

    def __init__(self, quantile_fit, W):
        self.quantile_fit = quantile_fit
        self.scaling = geometry.scaling_factors(quantile_fit.threshold, W)

    def __call__(self, W):
        return geometry.rescaled_gauge(self.quantile_fit.threshold, self.scaling, W)


@dataclass
class FitResult:
    model: GaugeModel
    quantile_fit: QuantileFit
    logs: list = field(default_factory=list)
    exceedances: int = 0


def _default_split(polar, config):
    return train_validation_split(polar.n, config.validation_fraction, config.seed)


def fit_threshold(polar, tau, arch, config, split=None):
    """
    Fit the radial quantile surface r_tau(w) with the tilted loss.

    The network starts from the constant unconditional tau-quantile of the
    training radii (zero output weights) with He-initialised hidden layers.

    :param polar: PolarSample
    :param tau: quantile level in (0, 1)
    :param arch: hidden-layer widths
    :param config: TrainConfig
    :param split: (train, validation) indices; drawn from config.seed if omitted
    :return: QuantileFit
    """
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1)")
    if polar.n < SOFT_MIN_SAMPLE:
        log.warning(f"Fitting a quantile surface to only {polar.n} observations")
    if np.ptp(polar.radii) == 0:
        raise DomainError("all radii are equal; the quantile surface is degenerate")
    split = _default_split(polar, config) if split is None else split
    rng = np.random.default_rng(config.seed)
    start = np.quantile(polar.radii[split[0]], tau)
    init = init_params(polar.d, tuple(arch), rng, output_bias=float(np.log(start)), output_scale=0.0)
    params, _, training_log = train(QuantileObjective(polar.angles, polar.radii, tau), config, init, split)
    fitted = np.exp(forward(params, polar.angles))
    fraction = float(np.mean(polar.radii > fitted))
    log.info(f"Quantile stage done: tau={tau}, realised exceedance fraction {fraction:.4f}")
    return QuantileFit(params, tau, split, training_log, fraction)


def initial_gauge_target(quantile_fit, W):
    return InitialGaugeTarget(quantile_fit, W)


def pretrain_gauge(gauge_net, target, angles, config, split):
    """
    Fit ReLU(m(w)) + |w|_inf to ``target`` in mean square.

    :return: (MlpParams, initial alpha = d, TrainingLog)
    """
    values = target(angles) if callable(target) else np.asarray(target, dtype=float)
    params, _, training_log = train(PretrainObjective(angles, values), config, gauge_net, split)
    return params, float(angles.shape[1]), training_log


def fit_gauge(polar, quantile_fit, arch, config, reference_size=1_000_000, reference_seed=0):
    """
    Fit the gauge stage on the exceedances of an already fitted quantile
    surface and freeze the result into a GaugeModel.

    :param polar: PolarSample, the same sample the quantile stage was fitted to
    :param quantile_fit: QuantileFit from :func:`fit_threshold`
    :param arch: hidden-layer widths of the gauge network
    :param config: TrainConfig
    :return: (GaugeModel, [pretrain log, gauge log], exceedance count)
    """
    if quantile_fit is None:
        raise TwoStageError("the gauge stage needs a fitted quantile stage")
    train_index, validation_index = quantile_fit.split
    if max(np.max(train_index), np.max(validation_index)) >= polar.n:
        raise TwoStageError("quantile stage was fitted on a different sample")
    d = polar.d
    W = reference_angles(reference_size, d, reference_seed)

    thresholds = quantile_fit.threshold(polar.angles)
    exceedance = np.flatnonzero(polar.radii > thresholds)
    if exceedance.size == 0:
        raise DomainError("no radius exceeds the fitted quantile surface")
    log.info(f"Gauge stage on {exceedance.size} exceedances of {polar.n} observations")

    target = initial_gauge_target(quantile_fit, W)
    rng = np.random.default_rng(config.seed + 1)
    init = init_params(d, tuple(arch), rng)
    pretrained, alpha0, pretrain_log = pretrain_gauge(init, target, polar.angles, config, quantile_fit.split)

    exc_train = np.flatnonzero(np.isin(exceedance, train_index))
    exc_validation = np.flatnonzero(np.isin(exceedance, validation_index))
    if exc_train.size == 0 or exc_validation.size == 0:
        raise DomainError("exceedances fall entirely in one side of the train/validation split")
    objective = TruncatedGammaObjective(
        polar.angles[exceedance], polar.radii[exceedance], thresholds[exceedance],
        W[:config.refresh_size], pretrained, config.refresh_every,
    )
    params, extra, gauge_log = train(objective, config, pretrained, (exc_train, exc_validation),
                                     extra={"log_alpha": float(np.log(alpha0))})
    alpha = float(np.exp(extra["log_alpha"]))
    low, high = ALPHA_BOUNDS[0], ALPHA_BOUNDS[1] * d
    if np.isclose(alpha, low) or np.isclose(alpha, high):
        log.warning(f"Shape parameter alpha={alpha:.4g} reached its bound [{low}, {high}]")

    scaling = geometry.align_scaling_factors(lambda V: 1.0 / _raw_gauge(params, V), W)
    model = GaugeModel(quantile_fit.params, params, alpha, quantile_fit.tau, scaling, reference_size, reference_seed)
    return model, [pretrain_log, gauge_log], int(exceedance.size)


def fit(polar, tau=0.75, threshold_arch=(32, 32, 32), gauge_arch=(64, 64, 64), config=None,
        reference_size=1_000_000, reference_seed=0):
    """
    Run both stages on one sample with a shared train/validation split.

    :return: FitResult
    """
    config = config or TrainConfig()
    split = _default_split(polar, config)
    quantile_fit = fit_threshold(polar, tau, threshold_arch, config, split)
    model, logs, exceedances = fit_gauge(polar, quantile_fit, gauge_arch, config, reference_size, reference_seed)
    return FitResult(model, quantile_fit, [quantile_fit.log, *logs], exceedances)
