"""Comparison schemes: restricted surface structures, block ablations and a GA."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .ceo import IterationRecord, OptimizationResult, initial_params, sample_population
from .channel import ChannelState
from .config import SystemConfig
from .encoding import BLOCKS, segments, wrap_phase
from .objective import Objective, penalty_weight

logger = logging.getLogger(__name__)

STRUCTURE_KINDS = ("full_6dmm", "fixed_grid", "movable_in_patch", "partial_movable")


def grid_shape(M: int) -> tuple[int, int]:
    """Near-square (rows, cols) with rows * cols >= M."""
    rows = max(1, int(math.isqrt(M)))
    cols = math.ceil(M / rows)
    return rows, cols


def grid_layout(config: SystemConfig) -> np.ndarray:
    """Planar lambda/2 grid centred in the position box, in the box mid-plane."""
    rows, cols = grid_shape(config.M)
    if rows * cols != config.M:
        logger.warning("M=%d is not a perfect square; using a %dx%d grid", config.M, rows, cols)
    step = config.wavelength / 2
    center = config.box_center
    xs = (np.arange(cols) - (cols - 1) / 2) * step + center[0]
    ys = (np.arange(rows) - (rows - 1) / 2) * step + center[1]
    pts = np.array([[x, y, center[2]] for y in ys for x in xs])[: config.M]
    return np.clip(pts, config.r_min, config.r_max)


def patch_cells(config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-element (lo, hi) boxes tiling the position box in x and y; z is free."""
    rows, cols = grid_shape(config.M)
    lo_box, hi_box = np.asarray(config.r_min), np.asarray(config.r_max)
    xe = np.linspace(lo_box[0], hi_box[0], cols + 1)
    ye = np.linspace(lo_box[1], hi_box[1], rows + 1)
    lo = np.empty((config.M, 3))
    hi = np.empty((config.M, 3))
    for m in range(config.M):
        r, c = divmod(m, cols)
        lo[m] = (xe[c], ye[r], lo_box[2])
        hi[m] = (xe[c + 1], ye[r + 1], hi_box[2])
    return lo, hi


@dataclass(frozen=True)
class SurfaceStructure:
    """How far each element may move.

    ``fraction`` applies to ``partial_movable``: ``floor(fraction * M)``
    elements keep the whole box, the others sit on their grid points. Movable
    elements are the lowest indices unless ``choice_seed`` picks them at random.
    """

    kind: str = "full_6dmm"
    fraction: float = 0.0
    choice_seed: int | None = None

    def __post_init__(self):
        if self.kind not in STRUCTURE_KINDS:
            raise ValueError(f"unknown structure {self.kind!r}; expected one of {STRUCTURE_KINDS}")
        if not 0 <= self.fraction <= 1:
            raise ValueError("fraction must lie in [0, 1]")

    def regions(self, config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
        M = config.M
        box_lo = np.tile(np.asarray(config.r_min), (M, 1))
        box_hi = np.tile(np.asarray(config.r_max), (M, 1))
        if self.kind == "full_6dmm":
            return box_lo, box_hi
        if self.kind == "movable_in_patch":
            return patch_cells(config)
        grid = grid_layout(config)
        if self.kind == "fixed_grid":
            return grid, grid.copy()
        n_move = math.floor(round(self.fraction * M, 9))
        if self.choice_seed is None:
            movable = np.arange(n_move)
        else:
            movable = np.random.default_rng(self.choice_seed).choice(M, n_move, replace=False)
        lo, hi = grid.copy(), grid.copy()
        lo[movable] = box_lo[movable]
        hi[movable] = box_hi[movable]
        return lo, hi

    def apply(self, X, config: SystemConfig) -> np.ndarray:
        return structural_repair(X, self, config)


def structural_repair(x, structure: SurfaceStructure, config: SystemConfig) -> np.ndarray:
    """Clamp every element into its structure-specific region (single vector or batch)."""
    x = np.array(x, dtype=float, copy=True)
    if structure.kind == "full_6dmm":
        return x
    seg = segments(config)
    lo, hi = structure.regions(config)
    lead = x.shape[:-1]
    pos = x[..., seg.positions].reshape(lead + (config.M, 3))
    pos = np.minimum(np.maximum(pos, lo), hi)
    x[..., seg.positions] = pos.reshape(lead + (3 * config.M,))
    return x


def random_block_values(block: str, rng: np.random.Generator, config: SystemConfig) -> np.ndarray:
    """Uniform feasible draw for one block of the encoding."""
    if block == "beamformer":
        nk = config.N * config.K
        w = rng.standard_normal(2 * nk)
        return w * np.sqrt(config.P_th / np.sum(w**2))
    if block == "phases":
        return wrap_phase(2 * np.pi * (1 - rng.random(config.M)))
    if block == "positions":
        lo, hi = np.asarray(config.r_min), np.asarray(config.r_max)
        return (lo + (hi - lo) * rng.random((config.M, 3))).ravel()
    if block == "rotation":
        lo, hi = np.asarray(config.angle_min), np.asarray(config.angle_max)
        return lo + (hi - lo) * rng.random(3)
    raise ValueError(f"unknown block {block!r}; expected one of {BLOCKS}")


def randomize_block(x, block: str, rng: np.random.Generator, config: SystemConfig) -> np.ndarray:
    """Copy of ``x`` with ``block`` replaced by a uniform random feasible draw."""
    values = random_block_values(block, rng, config)
    out = np.array(x, dtype=float, copy=True)
    out[..., segments(config).block(block)] = values
    return out


def segment_scales(config: SystemConfig) -> np.ndarray:
    """Typical magnitude per coordinate, used to size GA mutations."""
    seg = segments(config)
    scale = np.empty(config.dimension)
    scale[seg.block("beamformer")] = math.sqrt(config.P_th / (2 * config.N * config.K))
    scale[seg.phases] = 2 * np.pi
    scale[seg.positions] = np.tile(np.asarray(config.r_max) - np.asarray(config.r_min), config.M)
    scale[seg.rotation] = np.asarray(config.angle_max) - np.asarray(config.angle_min)
    return scale


def _tournament(fit, rng, count, size):
    picks = rng.integers(0, fit.size, size=(count, size))
    winners = np.argmax(fit[picks], axis=1)
    return picks[np.arange(count), winners]


def ga_optimize(config: SystemConfig, state: ChannelState, rng: np.random.Generator,
                objective: Objective | None = None) -> OptimizationResult:
    """Elitist real-coded GA sharing fitness, repair and termination with the CEO run."""
    if objective is None:
        objective = Objective(config, state)
    if config.population < 1:
        raise ValueError("population must be >= 1")
    I = config.population
    n_elite = min(I, math.ceil(round(config.elite_ratio * I, 9)))
    sigma = config.ga_mutation_scale * segment_scales(config)
    D = config.dimension

    pop = sample_population(initial_params(config), I, rng, objective.prepare)
    best_x, best_f, best_w = None, -np.inf, None
    history = []
    streak = 0
    start = time.perf_counter()
    for t in range(1, config.max_iter + 1):
        weight = penalty_weight(config.penalty0, t)
        ev = objective.evaluate(pop, weight)
        f = ev["fitness"]
        order = np.argsort(-f, kind="stable")
        it_best = float(f[order[0]])
        previous = best_f
        if it_best >= best_f:
            best_f, best_x, best_w = it_best, pop[order[0]].copy(), weight
        streak = streak + 1 if abs(it_best - previous) <= config.f_th else 0
        history.append(IterationRecord(t, best_f, it_best, float(np.mean(f)), weight,
                                       float(np.mean(ev["clamped"])),
                                       time.perf_counter() - start))
        if streak >= config.patience or t == config.max_iter:
            break

        n_child = I - n_elite
        a = pop[_tournament(f, rng, n_child, config.ga_tournament)]
        b = pop[_tournament(f, rng, n_child, config.ga_tournament)]
        swap = rng.random((n_child, D)) < config.ga_crossover
        child = np.where(swap, b, a)
        mutate = rng.random((n_child, D)) < config.ga_mutation
        child = child + mutate * sigma * rng.standard_normal((n_child, D))
        pop = np.concatenate([pop[order[:n_elite]], objective.prepare(child)])

    if best_x is None:
        best_x = pop[0]
        best_w = penalty_weight(config.penalty0, 1)
    res = objective.result(best_x, best_w)
    if not history:
        best_f = res.fitness
    return OptimizationResult(best_x, best_f, res, history)


__all__ = [
    "STRUCTURE_KINDS",
    "SurfaceStructure",
    "grid_layout",
    "patch_cells",
    "structural_repair",
    "random_block_values",
    "randomize_block",
    "segment_scales",
    "ga_optimize",
]
