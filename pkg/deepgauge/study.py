# -*- coding: utf-8 -*-
"""
Simulation study runner: for every cell of a (copula, d, n, tau,
architecture) grid, simulate replicate datasets, fit the gauge model and
score it by ISE against the true gauge and by MALE against exact joint-tail
probabilities. Replicates run in a process pool; only the parent process
writes to the database.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

from django.db import transaction

from deepgauge.copulas import (
    CopulaKind, CopulaSpec, nested_correlation, probability_targets, region_probability, sample,
    theoretical_gauge,
)
from deepgauge.diagnostics import ise, male
from deepgauge.exceptions import ConfigurationError, DeepGaugeError
from deepgauge.gauge import fit
from deepgauge.geometry import decompose
from deepgauge.inference import tail_probability
from deepgauge.models import StudyCell, StudyReplicate
from deepgauge.neuralnet import TrainConfig
from deepgauge.utils import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StudyGrid:
    copulas: tuple = (CopulaKind.GAUSSIAN.value,)
    dims: tuple = (3,)
    ns: tuple = (10_000,)
    taus: tuple = (0.75,)
    archs: tuple = ((64, 64, 64),)
    replicates: int = 1
    seed: int = 0
    threshold_arch: tuple = (32, 32, 32)
    train_config: TrainConfig = field(default_factory=TrainConfig)
    reference_size: int = 1_000_000
    reference_seed: int = 0
    corr_seed: int = 0
    corr_dmax: int = 8
    nu: float = 2.0
    theta: float = 0.3
    q: float = 0.9995

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigurationError("a study needs at least one replicate per cell")
        if not (self.copulas and self.dims and self.ns and self.taus and self.archs):
            raise ConfigurationError("every grid axis needs at least one value")
        unknown = set(self.copulas) - {kind.value for kind in CopulaKind}
        if unknown:
            raise ConfigurationError(f"unknown copulas {sorted(unknown)}")

    def spec(self, kind, d):
        kind = CopulaKind(kind)
        if kind is CopulaKind.LOGISTIC:
            return CopulaSpec(kind, d, theta=self.theta)
        corr = nested_correlation(max(self.corr_dmax, d), self.corr_seed, d)
        return CopulaSpec(kind, d, corr=corr, nu=self.nu if kind is CopulaKind.STUDENT_T else None)

    def cells(self):
        return list(itertools.product(self.copulas, self.dims, self.ns, self.taus, self.archs))


@dataclass(frozen=True)
class ReplicateTask:
    spec: dict
    n: int
    tau: float
    arch: tuple
    threshold_arch: tuple
    train_config: TrainConfig
    reference_size: int
    reference_seed: int
    q: float
    seed: int


def run_replicate(task):
    """
    Simulate, fit and score one replicate.

    :return: dict with ise, male, status and error
    """
    try:
        spec = CopulaSpec.from_dict(task.spec)
        data = sample(spec, task.n, task.seed)
        config = replace(task.train_config, seed=task.seed % (2 ** 31))
        result = fit(decompose(data), task.tau, task.threshold_arch, task.arch, config,
                     task.reference_size, task.reference_seed)
        model = result.model
        W = model.reference_angles
        ise_value = ise(lambda V: theoretical_gauge(spec, V), model, W)
        truths, estimates = [], []
        for _, corner in probability_targets(spec.kind, spec.d):
            truths.append(region_probability(spec, corner))
            estimate = tail_probability(corner, data, model, W, q=task.q, fallback="empirical")
            estimates.append(estimate.probability)
        return {"ise": ise_value, "male": male(truths, estimates), "status": StudyReplicate.FINISHED, "error": ""}
    except (DeepGaugeError, ArithmeticError) as exc:
        log.warning(f"Replicate with seed {task.seed} failed: {exc}")
        return _failed(str(exc))
    except Exception as exc:
        # a worker must hand back an outcome, or Pool.map aborts the whole study
        log.exception(f"Replicate with seed {task.seed} failed unexpectedly")
        return _failed(f"{type(exc).__name__}: {exc}")


def _failed(error):
    return {"ise": None, "male": None, "status": StudyReplicate.FAILED, "error": error}


def run_study(grid, label, processes=1):
    """
    Run every replicate of every cell and record the results.

    :param grid: StudyGrid
    :param label: study label stored on each cell
    :param processes: worker processes for the replicates
    :return: list of summary rows, one per cell
    """
    stale = StudyCell.objects.for_study(label)
    if stale.exists():
        log.warning(f"Replacing {stale.count()} cells of an earlier study labelled {label}")
        stale.delete()
    cells, tasks = [], []
    for index, (kind, d, n, tau, arch) in enumerate(grid.cells()):
        cell = StudyCell.objects.create(study=label, copula=kind, dimension=d, n_obs=n, tau=tau,
                                        gauge_arch=",".join(str(width) for width in arch))
        spec = grid.spec(kind, d).to_dict()
        for k in range(grid.replicates):
            cells.append((cell, k))
            tasks.append(ReplicateTask(spec, n, tau, tuple(arch), tuple(grid.threshold_arch), grid.train_config,
                                       grid.reference_size, grid.reference_seed, grid.q,
                                       derive_seed(grid.seed, index, k)))
    log.info(f"Study {label}: {len(grid.cells())} cells, {len(tasks)} replicates")
    if processes > 1:
        with Pool(processes) as pool:
            outcomes = pool.map(run_replicate, tasks)
    else:
        outcomes = [run_replicate(task) for task in tasks]
    with transaction.atomic():
        for (cell, k), task, outcome in zip(cells, tasks, outcomes):
            StudyReplicate.objects.create(cell=cell, replicate=k, seed=task.seed, **outcome)
    return StudyCell.objects.summary(label)
