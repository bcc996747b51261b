# -*- coding: utf-8 -*-
"""
Circular moving-block bootstrap for serially dependent observations.
"""
import logging
import math
from dataclasses import dataclass, replace
from multiprocessing import Pool

import numpy as np
import pandas as pd

from deepgauge.exceptions import ConfigurationError, DomainError
from deepgauge.gauge import fit
from deepgauge.geometry import decompose
from deepgauge.inference import estimate_adf, tail_probability

log = logging.getLogger(__name__)


def _derived_seed(seed, k):
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


@dataclass(frozen=True)
class BlockPlan:
    block_length: int
    seed: int = 0

    def __post_init__(self):
        if self.block_length < 1:
            raise ConfigurationError("block length must be at least 1")

    def n_blocks(self, n):
        return math.ceil(n / self.block_length)

    def replicate(self, k):
        """Plan for the k-th bootstrap replicate, with its own derived seed."""
        return BlockPlan(self.block_length, _derived_seed(self.seed, k))


def block_indices(n, plan):
    if plan.block_length > n:
        raise DomainError(f"block length {plan.block_length} exceeds the {n} available rows")
    rng = np.random.default_rng(plan.seed)
    starts = rng.integers(0, n, size=plan.n_blocks(n))
    return ((starts[:, None] + np.arange(plan.block_length)[None, :]) % n).ravel()[:n]


def block_resample(data, plan):
    """
    Concatenate ceil(n/L) wrapped blocks of L consecutive rows starting at
    uniformly drawn positions, truncated to n rows.

    :param data: DataMatrix
    :param plan: BlockPlan
    :return: DataMatrix with the same margins tag
    """
    return data.with_values(data.values[block_indices(data.n, plan)])


def _run_replicate(payload):
    task, data, plan, k = payload
    return task(block_resample(data, plan.replicate(k)), k)


def bootstrap_replicates(data, plan, replicates, task, processes=None):
    """
    Apply ``task(resampled_data, k)`` to independent block resamples.

    ``task`` must return a flat dict of numbers; it must be picklable when
    ``processes`` > 1.

    :return: DataFrame with one row per replicate
    """
    payloads = [(task, data, plan, k) for k in range(replicates)]
    if processes and processes > 1:
        with Pool(processes) as pool:
            rows = pool.map(_run_replicate, payloads)
    else:
        rows = [_run_replicate(payload) for payload in payloads]
    frame = pd.DataFrame(rows)
    frame.insert(0, "replicate", range(replicates))
    log.info(f"Finished {replicates} block-bootstrap replicates with block length {plan.block_length}")
    return frame


def summarize(frame, levels=(2.5, 50.0, 97.5)):
    """Percentiles of every numeric column except the replicate index."""
    columns = [c for c in frame.columns if c != "replicate"]
    table = frame[columns].quantile([level / 100.0 for level in levels])
    table.index = [f"p{level:g}" for level in levels]
    return table


@dataclass(frozen=True)
class RefitTask:
    """
    Refit the gauge model to a resampled dataset and report the extended ADF
    at the diagonal, the residual tail dependence coefficient and the joint
    tail probability of every query point.
    """
    tau: float
    threshold_arch: tuple
    gauge_arch: tuple
    config: object
    reference_size: int = 1_000_000
    reference_seed: int = 0
    queries: tuple = ()
    q: float = 0.9995

    def __call__(self, data, k):
        config = replace(self.config, seed=_derived_seed(self.config.seed, k))
        model = fit(decompose(data), self.tau, self.threshold_arch, self.gauge_arch, config,
                    self.reference_size, self.reference_seed).model
        W = model.reference_angles
        d = data.d
        lambda_diag = estimate_adf(model, W, np.full(d, 1.0 / np.sqrt(d))).lambda_hat
        row = {"alpha": model.alpha, "lambda_diagonal": lambda_diag, "eta": 1.0 / (np.sqrt(d) * lambda_diag)}
        for index, x in enumerate(self.queries):
            row[f"probability_{index}"] = tail_probability(np.asarray(x), data, model, W, self.q,
                                                           fallback="empirical").probability
        return row
