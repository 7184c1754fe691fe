"""Cross-entropy optimizer over the flat candidate encoding."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelState
from .config import SystemConfig
from .encoding import segments
from .noma import EvaluationResult
from .objective import Objective, fitness, penalty_weight

__all__ = [
    "DistributionParams",
    "IterationRecord",
    "OptimizationResult",
    "initial_params",
    "sample_population",
    "fitness",
    "elite_count",
    "select_elites",
    "update_params",
    "smooth",
    "gaussian_loglik",
    "run",
]


@dataclass
class DistributionParams:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std lengths differ")
        if np.any(self.std <= 0):
            raise ValueError("std must be strictly positive")


@dataclass
class IterationRecord:
    t: int
    best: float
    iter_best: float
    mean: float
    penalty: float
    clamped: float
    elapsed: float

    FIELDS = ("t", "best", "iter_best", "mean", "penalty", "clamped")


@dataclass
class OptimizationResult:
    best: np.ndarray
    best_fitness: float
    result: EvaluationResult
    history: list[IterationRecord] = field(default_factory=list)
    params: DistributionParams | None = None

    @property
    def iterations(self) -> int:
        return len(self.history)


def initial_params(config: SystemConfig) -> DistributionParams:
    """Zero-mean unit-std start, except positions and angles which start centred in their boxes."""
    seg = segments(config)
    D = config.dimension
    mean = np.zeros(D)
    std = np.ones(D)
    lo, hi = np.asarray(config.r_min), np.asarray(config.r_max)
    mean[seg.positions] = np.tile((lo + hi) / 2, config.M)
    std[seg.positions] = np.tile((hi - lo) / 4, config.M)
    amin, amax = np.asarray(config.angle_min), np.asarray(config.angle_max)
    mean[seg.rotation] = np.clip(0.0, amin, amax)
    std[seg.rotation] = np.maximum((amax - amin) / 4, config.variance_floor)
    return DistributionParams(mean, std)


def sample_population(params: DistributionParams, count: int, rng: np.random.Generator,
                      prepare=None) -> np.ndarray:
    """Draw ``count`` candidates coordinate-wise from the Gaussian, then ``prepare`` them."""
    raw = params.mean + params.std * rng.standard_normal((count, params.mean.size))
    return raw if prepare is None else prepare(raw)


def elite_count(rho: float, population: int) -> int:
    # round first so that e.g. 0.2 * 300 = 60.000000000000007 does not become 61
    return math.ceil(round(rho * population, 9))


def select_elites(values, rho: float) -> np.ndarray:
    """Indices of the ``ceil(rho * I)`` best candidates, best first; ties keep sample order."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot select elites from an empty population")
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    order = np.argsort(-values, kind="stable")
    return order[: elite_count(rho, values.size)]


def update_params(elites, variance_floor: float = 1e-12) -> DistributionParams:
    """Maximum-likelihood Gaussian fit: elite mean and population (1/|E|) std."""
    elites = np.atleast_2d(np.asarray(elites, dtype=float))
    if elites.shape[0] < 1:
        raise ValueError("need at least one elite")
    mean = elites.mean(axis=0)
    std = np.sqrt(np.mean((elites - mean) ** 2, axis=0))
    return DistributionParams(mean, np.maximum(std, variance_floor))


def smooth(new: DistributionParams, old: DistributionParams, smoothing: float,
           variance_floor: float = 1e-12) -> DistributionParams:
    if not 0 < smoothing <= 1:
        raise ValueError(f"smoothing must lie in (0, 1], got {smoothing}")
    mean = smoothing * new.mean + (1 - smoothing) * old.mean
    std = smoothing * new.std + (1 - smoothing) * old.std
    return DistributionParams(mean, np.maximum(std, variance_floor))


def gaussian_loglik(samples, params: DistributionParams) -> float:
    """Average log-density of ``samples`` under the factorized Gaussian."""
    samples = np.atleast_2d(samples)
    z = (samples - params.mean) / params.std
    per = -0.5 * z**2 - np.log(params.std) - 0.5 * np.log(2 * np.pi)
    return float(np.mean(np.sum(per, axis=1)))


def unwrap_phases(elites, mean, config: SystemConfig) -> np.ndarray:
    """Shift elite phases by multiples of 2 pi to lie within pi of the current mean.

    Wrapped phases near 0 and 2 pi describe neighbouring settings; fitting the
    Gaussian on the raw wrapped values would tear such clusters apart.
    """
    seg = segments(config)
    out = np.array(elites, dtype=float, copy=True)
    mu = mean[seg.phases]
    out[:, seg.phases] = mu + np.mod(out[:, seg.phases] - mu + np.pi, 2 * np.pi) - np.pi
    return out


def run(config: SystemConfig, state: ChannelState, rng: np.random.Generator,
        objective: Objective | None = None) -> OptimizationResult:
    """Cross-entropy search for the best candidate under ``state``.

    Stops once the iteration best stays within ``f_th`` of the incumbent for
    ``patience`` consecutive iterations, or after ``max_iter`` iterations.
    """
    if objective is None:
        objective = Objective(config, state)
    params = initial_params(config)
    floor = config.variance_floor

    if config.max_iter == 0:
        x = objective.prepare(params.mean[None, :])[0]
        res = objective.result(x, penalty_weight(config.penalty0, 1))
        return OptimizationResult(x, res.fitness, res, [], params)
    if config.population < 1:
        raise ValueError("population must be >= 1 to iterate")

    best_x, best_f, best_w = None, -np.inf, None
    history = []
    streak = 0
    start = time.perf_counter()
    for t in range(1, config.max_iter + 1):
        weight = penalty_weight(config.penalty0, t)
        X = sample_population(params, config.population, rng, objective.prepare)
        ev = objective.evaluate(X, weight)
        f = ev["fitness"]
        idx = select_elites(f, config.elite_ratio)
        it_best = float(f[idx[0]])

        elites = unwrap_phases(X[idx], params.mean, config)
        params = smooth(update_params(elites, floor), params, config.smoothing, floor)

        previous = best_f
        if it_best >= best_f:
            best_f, best_x, best_w = it_best, X[idx[0]].copy(), weight
        streak = streak + 1 if abs(it_best - previous) <= config.f_th else 0
        history.append(IterationRecord(t, best_f, it_best, float(np.mean(f)), weight,
                                       float(np.mean(ev["clamped"])),
                                       time.perf_counter() - start))
        if streak >= config.patience:
            break

    res = objective.result(best_x, best_w)
    return OptimizationResult(best_x, best_f, res, history, params)
