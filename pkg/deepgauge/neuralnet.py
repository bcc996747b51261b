# -*- coding: utf-8 -*-
"""
Small multilayer-perceptron engine: ReLU hidden layers, a linear scalar
output, exact backpropagation, Adam and early stopping.

Training is driven by an :class:`Objective`, which owns the inputs and
targets of one fitting stage and turns network outputs into a loss and its
derivative with respect to those outputs. Objectives may also carry extra
scalar parameters (a distribution shape, say) that Adam updates alongside
the network but that are not penalised.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from deepgauge.exceptions import ConfigurationError, DomainError, NumericalFailure
from deepgauge.specialfns import log_gamma, log_reg_gamma_upper

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpParams:
    weights: tuple
    biases: tuple

    def __post_init__(self):
        weights = tuple(np.asarray(w, dtype=float) for w in self.weights)
        biases = tuple(np.asarray(b, dtype=float) for b in self.biases)
        if len(weights) != len(biases) or not weights:
            raise DomainError("MlpParams needs one bias per weight matrix")
        for k, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise DomainError(f"layer {k}: weights {w.shape} and bias {b.shape} do not chain")
            if k and w.shape[1] != weights[k - 1].shape[0]:
                raise DomainError(f"layer {k} expects {w.shape[1]} inputs, previous layer has {weights[k - 1].shape[0]}")
        if weights[-1].shape[0] != 1:
            raise DomainError("the output layer must be scalar")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def input_dim(self):
        return self.weights[0].shape[1]

    @property
    def widths(self):
        return tuple(w.shape[0] for w in self.weights[:-1])

    def arrays(self):
        """Flat list [M1, b1, M2, b2, ...] of copies."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w.copy(), b.copy()])
        return out

    @classmethod
    def from_arrays(cls, arrays):
        return cls(tuple(a.copy() for a in arrays[0::2]), tuple(a.copy() for a in arrays[1::2]))

    def to_dict(self):
        return {
            "version": FORMAT_VERSION,
            "input_dim": self.input_dim,
            "widths": list(self.widths),
            "layers": [{"weights": w.tolist(), "bias": b.tolist()} for w, b in zip(self.weights, self.biases)],
        }

    @classmethod
    def from_dict(cls, payload):
        if payload.get("version") != FORMAT_VERSION:
            raise DomainError(f"unsupported network format version {payload.get('version')}")
        layers = payload["layers"]
        params = cls(tuple(layer["weights"] for layer in layers), tuple(layer["bias"] for layer in layers))
        if params.input_dim != payload["input_dim"] or list(params.widths) != list(payload["widths"]):
            raise DomainError("network architecture does not match its layers")
        return params


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 1024
    patience: int = 5
    learning_rate: float = 1e-3
    l1: float = 1e-4
    l2: float = 1e-4
    validation_fraction: float = 0.2
    seed: int = 0
    penalize_biases: bool = True
    refresh_size: int = 10_000
    refresh_every: int = 1

    def __post_init__(self):
        for name in ("epochs", "batch_size", "patience", "refresh_size", "refresh_every"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1")
        if not 0 < self.validation_fraction < 1:
            raise ConfigurationError("validation_fraction must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.l1 < 0 or self.l2 < 0:
            raise ConfigurationError("penalty weights must be non-negative")

    @classmethod
    def from_mapping(cls, mapping):
        known = cls.__dataclass_fields__
        return cls(**{key: value for key, value in mapping.items() if key in known and value is not None})


@dataclass
class Gradient:
    arrays: list
    extra: dict = field(default_factory=dict)

    @property
    def weights(self):
        return self.arrays[0::2]

    @property
    def biases(self):
        return self.arrays[1::2]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    validation_loss: float


@dataclass
class TrainingLog:
    stage: str
    records: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def best_validation_loss(self):
        return min(record.validation_loss for record in self.records) if self.records else float("nan")

    def to_frame(self):
        frame = pd.DataFrame([vars(record) for record in self.records],
                             columns=["epoch", "train_loss", "validation_loss"])
        frame.insert(0, "stage", self.stage)
        return frame


def init_params(d, widths, rng, output_bias=0.0, output_scale=1.0):
    """
    He-initialised weights and zero biases.

    :param d: input dimension
    :param widths: hidden-layer widths
    :param rng: numpy Generator
    :param output_bias: initial bias of the scalar output
    :param output_scale: multiplier on the output layer's initial weights
    :return: MlpParams
    """
    sizes = [d, *widths, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    weights[-1] = weights[-1] * output_scale
    biases[-1] = biases[-1] + output_bias
    return MlpParams(tuple(weights), tuple(biases))


def _as_batch(params, inputs):
    inputs = np.asarray(inputs, dtype=float)
    single = inputs.ndim == 1
    inputs = np.atleast_2d(inputs)
    if inputs.shape[1] != params.input_dim:
        raise DomainError(f"network expects {params.input_dim} inputs, got {inputs.shape[1]}")
    return inputs, single


def forward_with_cache(params, inputs):
    inputs, _ = _as_batch(params, inputs)
    activations = [inputs]
    hidden = inputs
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        pre = hidden @ w.T + b
        hidden = pre if k == last else np.maximum(pre, 0.0)
        activations.append(hidden)
    return hidden[:, 0], activations


def forward(params, inputs):
    """
    Network output for one input vector (scalar) or a batch (1-D array).
    """
    inputs, single = _as_batch(params, inputs)
    out, _ = forward_with_cache(params, inputs)
    return out[0] if single else out


def backward(params, activations, delta):
    """
    Reverse pass for a batch.

    :param activations: cache from :func:`forward_with_cache`
    :param delta: derivative of the (already averaged) loss w.r.t. each output
    :return: list [dM1, db1, dM2, db2, ...]
    """
    upstream = np.asarray(delta, dtype=float)[:, None]
    grads = [None] * (2 * len(params.weights))
    for k in reversed(range(len(params.weights))):
        grads[2 * k] = upstream.T @ activations[k]
        grads[2 * k + 1] = upstream.sum(axis=0)
        if k:
            # ReLU derivative is taken as 0 at the kink.
            upstream = (upstream @ params.weights[k]) * (activations[k] > 0)
    return grads


def penalty(arrays, config):
    total = 0.0
    for k, a in enumerate(arrays):
        if k % 2 and not config.penalize_biases:
            continue
        total += config.l1 * np.abs(a).sum() + config.l2 * np.square(a).sum()
    return total


def penalty_grad(arrays, config):
    out = []
    for k, a in enumerate(arrays):
        if k % 2 and not config.penalize_biases:
            out.append(np.zeros_like(a))
        else:
            out.append(config.l1 * np.sign(a) + 2.0 * config.l2 * a)
    return out


def tilted_loss(r, r_hat, tau):
    z = np.asarray(r, dtype=float) - np.asarray(r_hat, dtype=float)
    return z * (tau - (z < 0))


def tilted_loss_grad(r, r_hat, tau):
    """d/d r_hat of the tilted loss; the subgradient at z = 0 is that of z < 0."""
    z = np.asarray(r, dtype=float) - np.asarray(r_hat, dtype=float)
    return -(tau - (z <= 0))


def truncgamma_nll(r, g_val, alpha, r_thresh):
    """
    Negative log-likelihood of a gamma(alpha, rate g_val) radius truncated
    below at ``r_thresh``; zero for radii at or below the threshold.
    """
    r, g_val, alpha, r_thresh = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, g_val, alpha, r_thresh)))
    if np.any(g_val <= 0) or np.any(alpha <= 0):
        raise DomainError("truncgamma_nll needs positive rate and shape")
    exceed = r > r_thresh
    out = np.zeros(r.shape)
    if np.any(exceed):
        a, g, x, u = alpha[exceed], g_val[exceed], r[exceed], r_thresh[exceed]
        out[exceed] = -(a * np.log(g) + (a - 1.0) * np.log(x) - x * g - log_gamma(a) - log_reg_gamma_upper(a, g * u))
    return out.item() if out.ndim == 0 else out


def squared_error(prediction, target):
    return np.square(np.asarray(prediction, dtype=float) - np.asarray(target, dtype=float))


class Objective:
    """
    One fitting stage. Subclasses set ``inputs`` and implement
    :meth:`losses` and :meth:`loss_and_grad`.
    """
    name = "objective"
    inputs = None
    extra_init = {}
    extra_bounds = {}

    @property
    def n(self):
        return self.inputs.shape[0]

    def begin_epoch(self, epoch, params, extra):
        pass

    def losses(self, output, index, extra):
        raise NotImplementedError

    def loss_and_grad(self, output, index, extra):
        """
        :return: (mean loss, d mean loss / d output, {extra name: derivative})
        """
        raise NotImplementedError

    def mean_loss(self, params, index, extra):
        return float(np.mean(self.losses(forward(params, self.inputs[index]), index, extra)))


def grad(params, objective, index, extra=None, config=None):
    """
    Exact gradient of the mean loss over ``index`` (plus the penalty when a
    config is given) with respect to every network array and extra parameter.

    :return: (loss value, Gradient)
    """
    extra = dict(objective.extra_init if extra is None else extra)
    output, activations = forward_with_cache(params, objective.inputs[index])
    value, delta, extra_grads = objective.loss_and_grad(output, index, extra)
    arrays = backward(params, activations, delta)
    if config is not None:
        current = params.arrays()
        value += penalty(current, config)
        arrays = [g + p for g, p in zip(arrays, penalty_grad(current, config))]
    return float(value), Gradient(arrays, extra_grads)


class Adam:
    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        """Update the arrays in ``params`` in place."""
        if self.m is None:
            self.m = [np.zeros_like(g) for g in grads]
            self.v = [np.zeros_like(g) for g in grads]
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def train_validation_split(n, fraction, seed):
    """
    Random split of range(n), fixed by ``seed``.

    :return: (train indices, validation indices), both sorted
    """
    if n < 2:
        raise DomainError("need at least two observations to split")
    order = np.random.default_rng(seed).permutation(n)
    n_validation = min(max(1, int(round(fraction * n))), n - 1)
    return np.sort(order[n_validation:]), np.sort(order[:n_validation])


def _state(stage, epoch, batch, last_loss, arrays, extra):
    return {
        "stage": stage,
        "epoch": epoch,
        "batch": batch,
        "last_finite_loss": last_loss,
        "params": MlpParams.from_arrays(arrays).to_dict(),
        "extra": {key: float(value) for key, value in extra.items()},
    }


def train(objective, config, init, split, extra=None):
    """
    Minibatch Adam with per-epoch validation, checkpointing at the lowest
    validation loss and early stopping after ``config.patience`` epochs
    without improvement.

    :param objective: Objective for this stage
    :param config: TrainConfig
    :param init: initial MlpParams
    :param split: (train indices, validation indices) into objective.inputs
    :param extra: initial extra parameters, defaults to objective.extra_init
    :return: (best MlpParams, best extra parameters, TrainingLog)
    """
    train_index, validation_index = (np.asarray(part) for part in split)
    if train_index.size == 0 or validation_index.size == 0:
        raise DomainError(f"{objective.name}: empty training or validation split")
    rng = np.random.default_rng(config.seed)
    arrays = init.arrays()
    extra = {key: float(value) for key, value in dict(objective.extra_init if extra is None else extra).items()}
    arrays_opt = Adam(config.learning_rate)
    extra_names = sorted(extra)
    extra_opt = Adam(config.learning_rate)
    extra_values = [np.array([extra[name]]) for name in extra_names]

    training_log = TrainingLog(objective.name)
    best = (MlpParams.from_arrays(arrays), dict(extra))
    best_loss = np.inf
    stale = 0
    last_loss = None
    for epoch in range(1, config.epochs + 1):
        params = MlpParams.from_arrays(arrays)
        objective.begin_epoch(epoch, params, extra)
        order = rng.permutation(train_index)
        running, count = 0.0, 0
        for batch, start in enumerate(range(0, order.size, config.batch_size)):
            index = order[start:start + config.batch_size]
            value, gradient = grad(MlpParams(tuple(arrays[0::2]), tuple(arrays[1::2])), objective, index, extra, config)
            if not np.isfinite(value):
                state = _state(objective.name, epoch, batch, last_loss, arrays, extra)
                log.error(f"{objective.name}: non-finite loss at epoch {epoch}, batch {batch}; last finite loss {last_loss}")
                raise NumericalFailure(f"{objective.name}: non-finite loss at epoch {epoch}, batch {batch}", state)
            last_loss = value
            running += value * index.size
            count += index.size
            arrays_opt.step(arrays, gradient.arrays)
            if extra_names:
                extra_opt.step(extra_values, [np.array([gradient.extra.get(name, 0.0)]) for name in extra_names])
                for name, holder in zip(extra_names, extra_values):
                    low, high = objective.extra_bounds.get(name, (-np.inf, np.inf))
                    holder[0] = min(max(holder[0], low), high)
                    extra[name] = float(holder[0])

        params = MlpParams.from_arrays(arrays)
        validation_loss = objective.mean_loss(params, validation_index, extra)
        if not np.isfinite(validation_loss):
            state = _state(objective.name, epoch, None, last_loss, arrays, extra)
            log.error(f"{objective.name}: non-finite validation loss at epoch {epoch}")
            raise NumericalFailure(f"{objective.name}: non-finite validation loss at epoch {epoch}", state)
        training_log.records.append(EpochRecord(epoch, running / count, validation_loss))
        log.debug(f"{objective.name} epoch {epoch}: train {running / count:.6g}, validation {validation_loss:.6g}")

        if validation_loss < best_loss:
            best_loss = validation_loss
            best = (params, dict(extra))
            training_log.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                training_log.stopped_early = True
                log.info(f"{objective.name}: early stop after epoch {epoch}, best epoch {training_log.best_epoch}")
                break
    else:
        log.info(f"{objective.name}: finished {config.epochs} epochs, best epoch {training_log.best_epoch}")
    return best[0], best[1], training_log
