"""Seeded Monte Carlo experiments, the brute-force reference and result files.

Every trial is identified by ``(sweep index, trial index)``. Its random
streams derive from ``SeedSequence(base_seed, spawn_key=(sweep, trial))`` so
all schemes of one trial see the same channel draw (paired comparison) and
results do not depend on how many worker processes run the jobs.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, noma
from .baselines import SurfaceStructure, ga_optimize, random_block_values
from .ceo import run as ceo_run
from .channel import ChannelState, assemble_batch, draw_channel_state
from .config import (
    SYSTEM_KEYS,
    ConfigError,
    SystemConfig,
    format_config,
    parse_key_values,
    read_text,
    system_config_from_pairs,
)
from .encoding import encode, segments
from .geometry import pairwise_distances
from .objective import Objective, mrt_beamformer, spacing_penalty

logger = logging.getLogger(__name__)

EXPERIMENTS = ("convergence", "element_sweep", "user_sweep", "power_sweep", "oracle_gap")
EXPERIMENT_KEYS = ("experiment", "sweep", "trials", "schemes", "out", "oracle_levels")


@dataclass(frozen=True)
class Scheme:
    name: str
    optimizer: str = "ceo"              # 'ceo', 'ga' or 'oracle'
    access: str = "noma"
    structure: SurfaceStructure = SurfaceStructure()
    randomized: tuple[str, ...] = ()    # blocks replaced by a frozen random draw
    zero_rotation: bool = False


def _schemes() -> dict[str, Scheme]:
    fixed = SurfaceStructure("fixed_grid")
    out = {}
    for access in ("noma", "sdma", "oma"):
        out[f"6dmm-{access}"] = Scheme(f"6dmm-{access}", access=access)
        out[f"ris-{access}"] = Scheme(f"ris-{access}", access=access, structure=fixed,
                                      zero_rotation=True)
    out["patch-noma"] = Scheme("patch-noma", structure=SurfaceStructure("movable_in_patch"))
    for pct in (30, 60):
        out[f"partial{pct}-noma"] = Scheme(
            f"partial{pct}-noma", structure=SurfaceStructure("partial_movable", pct / 100))
    for block in ("beamformer", "phases", "positions", "rotation"):
        out[f"wo-{block}"] = Scheme(f"wo-{block}", randomized=(block,))
    out["ga-noma"] = Scheme("ga-noma", optimizer="ga")
    out["oracle"] = Scheme("oracle", optimizer="oracle")
    return out


SCHEMES = _schemes()

DEFAULT_SCHEMES = {
    "convergence": ("6dmm-noma", "ga-noma"),
    "element_sweep": ("6dmm-noma", "wo-beamformer", "wo-phases", "wo-positions", "wo-rotation"),
    "user_sweep": ("6dmm-noma", "patch-noma", "partial60-noma", "partial30-noma", "ris-noma"),
    "power_sweep": ("6dmm-noma", "6dmm-sdma", "6dmm-oma", "ris-noma", "ris-sdma", "ris-oma"),
    "oracle_gap": ("6dmm-noma", "oracle"),
}
DEFAULT_SWEEP = {
    "convergence": ("300:0.2", "600:0.2", "1000:0.2", "300:0.4", "300:0.6"),
    "element_sweep": (4, 8, 16, 32),
    "user_sweep": (2, 3, 4, 5, 6, 7),
    "power_sweep": (1.0, 5.0, 10.0, 20.0),
    "oracle_gap": ("tiny",),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: which values, which schemes, how many trials.

    Sweep values are the element count ``M`` (element_sweep), user count
    ``K`` (user_sweep), budget in mW (power_sweep), ``"I:rho"`` pairs
    (convergence) or a single label (oracle_gap). Empty ``sweep`` or
    ``schemes`` select the experiment's defaults.
    """

    experiment: str = "power_sweep"
    sweep: tuple = ()
    trials: int = 1
    seed: int = 0
    schemes: tuple[str, ...] = ()
    out: str = "results"
    oracle_levels: tuple[int, int, int, int] = (8, 3, 3, 11)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        unknown = [s for s in self.scheme_names if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown scheme(s) {unknown}; registered: {sorted(SCHEMES)}")
        if len(self.oracle_levels) != 4 or min(self.oracle_levels) < 1:
            raise ConfigError("oracle_levels needs four positive integers")
        self.values  # validates sweep entries

    @property
    def values(self) -> tuple:
        raw = self.sweep or DEFAULT_SWEEP[self.experiment]
        return tuple(_sweep_value(self.experiment, v) for v in raw)

    @property
    def scheme_names(self) -> tuple[str, ...]:
        return tuple(self.schemes) or DEFAULT_SCHEMES[self.experiment]

    def replace(self, **changes) -> "ExperimentSpec":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentSpec(**data)


def _sweep_value(experiment: str, value):
    if experiment in ("element_sweep", "user_sweep"):
        v = int(value)
        if v < 1:
            raise ConfigError(f"{experiment} values must be >= 1")
        return v
    if experiment == "power_sweep":
        v = float(value)
        if v <= 0:
            raise ConfigError("power_sweep values (mW) must be positive")
        return v
    if experiment == "convergence":
        text = str(value)
        try:
            pop, rho = text.split(":")
            int(pop), float(rho)
        except ValueError as exc:
            raise ConfigError(f"convergence sweep values look like '300:0.2', got {text!r}") from exc
        return text
    return str(value)


def load_config(path) -> tuple[SystemConfig, ExperimentSpec]:
    """Parse a ``key = value`` file into a system config and an experiment spec."""
    return config_from_text(read_text(path))


def config_from_text(text: str) -> tuple[SystemConfig, ExperimentSpec]:
    pairs = parse_key_values(text)
    unknown = sorted(set(pairs) - set(SYSTEM_KEYS) - set(EXPERIMENT_KEYS))
    if unknown:
        valid = ", ".join(SYSTEM_KEYS + EXPERIMENT_KEYS)
        raise ConfigError(f"unknown key(s) {unknown}; valid keys: {valid}")
    config = system_config_from_pairs(pairs)

    def split(key):
        return tuple(s for s in pairs[key].replace(",", " ").split() if s) if key in pairs else ()

    try:
        spec = ExperimentSpec(
            experiment=pairs.get("experiment", "power_sweep"),
            sweep=split("sweep"),
            trials=int(pairs.get("trials", 1)),
            seed=config.seed,
            schemes=split("schemes"),
            out=pairs.get("out", "results"),
            oracle_levels=tuple(int(v) for v in split("oracle_levels")) or (8, 3, 3, 11),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return config, spec


# ----------------------------------------------------------------------------
# brute force

@dataclass
class OracleResult:
    best_fitness: float
    best_sum_rate: float
    best: np.ndarray
    evaluated: int
    beamformer_space: str = "mrt-power-split"


def simplex_grid(K: int, levels: int) -> np.ndarray:
    """All power splits with fractions in multiples of 1/(levels-1); equal split if levels == 1."""
    if levels <= 1:
        return np.full((1, K), 1.0 / K)
    units = levels - 1
    rows = [c for c in itertools.product(range(units + 1), repeat=K) if sum(c) == units]
    return np.array(rows, dtype=float) / units


def _axis_grid(lo, hi, levels, center):
    if levels <= 1:
        return np.array([center], dtype=float)
    return np.linspace(lo, hi, levels)


def oracle_grid(config: SystemConfig, levels) -> dict:
    n_phase, n_pos, n_rot, n_pow = levels
    phases = 2 * np.pi * np.arange(n_phase) / n_phase
    box_c = config.box_center
    pos_axes = [_axis_grid(config.r_min[i], config.r_max[i], n_pos, box_c[i]) for i in range(3)]
    rot_axes = [_axis_grid(config.angle_min[i], config.angle_max[i], n_rot,
                           float(np.clip(0.0, config.angle_min[i], config.angle_max[i])))
                for i in range(3)]
    return {
        "phases": phases,
        "positions": pos_axes,
        "rotation": rot_axes,
        "splits": simplex_grid(config.K, n_pow),
    }


def brute_force_oracle(config: SystemConfig, state: ChannelState, levels=(8, 3, 3, 11),
                       weight: float | None = None, feasible_only: bool = True,
                       max_points: float = 1e8, chunk: int = 256) -> OracleResult:
    """Exhaustive NOMA search over a lattice of surface settings and MRT power splits.

    ``levels`` = (phase levels, position levels per coordinate, angle levels
    per axis, power-split levels). Beamformers are restricted to per-user MRT
    directions ``w_k ~ g_k^H`` scaled by a gridded split of ``P_th``. With
    ``feasible_only`` layouts violating the minimum spacing are skipped, so
    the result is a lower bound on the constrained optimum; otherwise they
    compete with their penalized fitness at ``weight`` (default ``penalty0``).
    """
    if weight is None:
        weight = config.penalty0
    grid = oracle_grid(config, levels)
    M = config.M
    n_phase_combos = len(grid["phases"]) ** M
    pos_points = np.array(list(itertools.product(*grid["positions"])))      # per element
    n_pos_combos = len(pos_points) ** M
    rot_points = np.array(list(itertools.product(*grid["rotation"])))
    splits = grid["splits"]
    total = n_phase_combos * n_pos_combos * len(rot_points) * len(splits)
    if total > max_points:
        factor = total / max_points
        raise ValueError(f"oracle grid has {total:.3g} points > {max_points:.3g}; "
                         f"reduce levels so the product shrinks by a factor of {factor:.3g}")

    phase_combos = np.array(list(itertools.product(grid["phases"], repeat=M)))  # (P, M)
    theta = np.exp(-1j * phase_combos)
    P = config.P_th

    surf = itertools.product(itertools.product(range(len(pos_points)), repeat=M),
                             range(len(rot_points)))
    best = (-np.inf, None)
    evaluated = 0
    while True:
        block = list(itertools.islice(surf, chunk))
        if not block:
            break
        positions = np.array([pos_points[list(idx)] for idx, _ in block])         # (B, M, 3)
        angles = rot_points[[r for _, r in block]]                               # (B, 3)
        H, h, _ = assemble_batch(state, positions, angles, config)
        # G[b, p, k, n] = sum_m conj(h[b,k,m]) theta[p,m] H[b,m,n]
        G = np.einsum("bkm,pm,bmn->bpkn", np.conj(h), theta, H)
        norms = np.linalg.norm(G, axis=-1)                                      # (B, P, K)
        dirs = np.conj(G) / np.where(norms == 0, 1.0, norms)[..., None]
        Q0 = np.abs(np.einsum("bpkn,bpjn->bpkj", G, dirs)) ** 2                 # per unit power
        order = np.argsort(-norms**2, axis=-1, kind="stable")
        Q0 = np.take_along_axis(Q0, order[..., :, None], axis=-2)
        Q0 = np.take_along_axis(Q0, order[..., None, :], axis=-1)
        # power of sorted beam j is P * split[order[j]]
        amp = np.moveaxis(P * splits[:, order], 0, 2)                          # (B, P, S, K)
        Q = Q0[:, :, None, :, :] * amp[..., None, :]                            # (B,P,S,K,K)
        signal = np.diagonal(Q, axis1=-2, axis2=-1)
        interf = np.sum(np.tril(Q, k=-1), axis=-1)
        rate = noma.sum_rate(signal / (interf + config.noise_power))            # (B, P, S)
        pen = weight * spacing_penalty(positions, config.d_th, config.hinge_penalty)
        if feasible_only:
            pen = np.where(spacing_penalty(positions, config.d_th, True) > 0, np.inf, pen)
        fit = rate - pen[:, None, None]
        evaluated += fit.size
        flat = int(np.argmax(fit))
        if fit.flat[flat] > best[0]:
            b, p, s = np.unravel_index(flat, fit.shape)
            W = mrt_beamformer(G[b, p], P, splits[s])
            x = encode(W, phase_combos[p], positions[b], angles[b], config)
            best = (float(fit.flat[flat]), (x, float(rate[b, p, s])))
    if best[1] is None:
        raise ValueError("no feasible layout on the oracle grid; add position levels")
    x, rate_best = best[1]
    return OracleResult(best[0], rate_best, x, evaluated)


# ----------------------------------------------------------------------------
# experiment runner

@dataclass
class ResultRow:
    experiment: str
    scheme: str
    sweep_value: str
    trial: int
    seed: int
    sum_rate: float
    fitness: float
    penalty: float
    iterations: int
    power: float
    min_spacing: float
    clamped_eigs: int
    sic_ok: bool
    feasible: bool
    status: str
    config_hash: str
    wall_time: float = field(default=0.0, compare=False)

    # wall_time is the only field kept out of the results table (it is not reproducible)
    TABLE_FIELDS = ("experiment", "scheme", "sweep_value", "trial", "seed", "sum_rate",
                    "fitness", "penalty", "iterations", "power", "min_spacing",
                    "clamped_eigs", "sic_ok", "feasible", "status", "config_hash")


HISTORY_FIELDS = ("scheme", "sweep_value", "trial", "t", "best", "iter_best", "mean",
                  "penalty", "clamped")


def trial_seed(base_seed: int, sweep_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(sweep_index, trial))


def seed_label(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def config_for(config: SystemConfig, experiment: str, value) -> SystemConfig:
    if experiment == "element_sweep":
        return config.replace(M=int(value))
    if experiment == "user_sweep":
        return config.replace(K=int(value))
    if experiment == "power_sweep":
        return config.replace(P_th=float(value) * 1e-3)
    if experiment == "convergence":
        pop, rho = str(value).split(":")
        return config.replace(population=int(pop), elite_ratio=float(rho))
    if experiment == "oracle_gap":
        return config.replace(N=2, M=2, K=2)
    return config


def build_objective(config, state, scheme: Scheme, rng) -> Objective:
    frozen = {block: random_block_values(block, rng, config) for block in scheme.randomized}
    if scheme.zero_rotation:
        frozen["rotation"] = np.clip(0.0, config.angle_min, config.angle_max)
    return Objective(config, state, access=scheme.access, structure=scheme.structure,
                     frozen=frozen)


def run_scheme(config: SystemConfig, state: ChannelState, scheme: Scheme,
               seq: np.random.SeedSequence, oracle_levels=(8, 3, 3, 11)):
    """Run one scheme on one channel draw.

    Returns ``(best, evaluation, iterations, history)``; the evaluation uses
    the initial penalty weight ``penalty0``.
    """
    opt_seq, block_seq = seq.spawn(2)
    if scheme.optimizer == "oracle":
        res = brute_force_oracle(config, state, oracle_levels)
        obj = Objective(config, state)
        ev = obj.result(res.best, config.penalty0)
        return res.best, ev, 1, []
    objective = build_objective(config, state, scheme, np.random.default_rng(block_seq))
    rng = np.random.default_rng(opt_seq)
    if scheme.optimizer == "ga":
        out = ga_optimize(config, state, rng, objective)
    else:
        out = ceo_run(config, state, rng, objective)
    # report fitness at the undecayed weight so every scheme is scored alike
    ev = objective.result(out.best, config.penalty0)
    return out.best, ev, out.iterations, out.history


def _run_job(args):
    experiment, config, spec_seed, vi, value, scheme_name, trial, levels = args
    scheme = SCHEMES[scheme_name]
    cfg = config_for(config, experiment, value)
    seq = trial_seed(spec_seed, vi, trial)
    chan_seq, run_seq = seq.spawn(2)
    start = time.perf_counter()
    try:
        state = draw_channel_state(cfg, np.random.default_rng(chan_seq))
        x, ev, iters, history = run_scheme(cfg, state, scheme, run_seq, levels)
        positions = x[segments(cfg).positions].reshape(cfg.M, 3)
        d = pairwise_distances(positions)
        min_sp = float(np.min(d[~np.eye(cfg.M, dtype=bool)])) if cfg.M > 1 else float("inf")
        row = ResultRow(
            experiment, scheme_name, str(value), trial, seed_label(seq),
            float(ev.sum_rate), float(ev.fitness), float(ev.penalty), int(iters),
            float(ev.power), min_sp, int(ev.clamped_eigs), ev.sic_feasible,
            bool(min_sp >= cfg.d_th - 1e-12), "ok", cfg.fingerprint(),
        )
        hist = [(scheme_name, str(value), trial, r.t, r.best, r.iter_best, r.mean, r.penalty,
                 r.clamped) for r in history]
    except Exception as exc:  # a failed trial must not abort the sweep
        logger.exception("trial failed: %s %s %s", scheme_name, value, trial)
        row = ResultRow(experiment, scheme_name, str(value), trial, seed_label(seq),
                        float("nan"), float("nan"), float("nan"), 0, float("nan"),
                        float("nan"), 0, False, False, f"failed: {type(exc).__name__}",
                        cfg.fingerprint())
        hist = []
    row.wall_time = time.perf_counter() - start
    return row, hist


@dataclass
class ExperimentOutput:
    rows: list[ResultRow]
    summary: list[dict]
    history: list[tuple]

    @property
    def failed(self) -> int:
        return sum(r.status != "ok" for r in self.rows)


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Mean and standard error of the sum rate per (scheme, sweep value)."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r.status == "ok":
            groups.setdefault((r.scheme, r.sweep_value), []).append(r.sum_rate)
    out = []
    for (scheme, value), rates in groups.items():
        arr = np.asarray(rates)
        se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        out.append({"scheme": scheme, "sweep_value": value, "n": arr.size,
                    "mean_sum_rate": float(np.mean(arr)), "std_error": se})
    return out


def run_experiment(spec: ExperimentSpec, config: SystemConfig, jobs: int = 1) -> ExperimentOutput:
    jobs_list = [
        (spec.experiment, config, spec.seed, vi, value, scheme, trial, spec.oracle_levels)
        for vi, value in enumerate(spec.values)
        for scheme in spec.scheme_names
        for trial in range(spec.trials)
    ]
    if jobs <= 1:
        results = [_run_job(j) for j in jobs_list]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, jobs_list))
    rows = [r for r, _ in results]
    history = [h for _, hs in results for h in hs]
    return ExperimentOutput(rows, summarize(rows), history)


# ----------------------------------------------------------------------------
# output

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def write_table(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_table(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def metadata_text(config: SystemConfig, spec: ExperimentSpec | None = None) -> str:
    lines = [f"code_version = {__version__}", f"config_hash = {config.fingerprint()}"]
    if spec is not None:
        lines += [
            f"experiment = {spec.experiment}",
            f"seed = {spec.seed}",
            f"trials = {spec.trials}",
            f"sweep = {' '.join(map(str, spec.values))}",
            f"schemes = {' '.join(spec.scheme_names)}",
            f"oracle_levels = {' '.join(map(str, spec.oracle_levels))}",
        ]
    lines += [
        "oma_model = time division, full budget per 1/K slot, MRT beam",
        "sdma_model = no SIC, all other beams interfere",
        "oracle_beamformer_space = MRT directions with gridded power split",
        "",
        "[resolved config]",
    ]
    return "\n".join(lines) + "\n" + format_config(config)


def emit_results(rows: list[ResultRow], path, config: SystemConfig,
                 spec: ExperimentSpec | None = None) -> tuple[Path, Path]:
    """Write the results table and a metadata block next to it."""
    path = Path(path)
    write_table(path, ResultRow.TABLE_FIELDS,
                ([getattr(r, f) for f in ResultRow.TABLE_FIELDS] for r in rows))
    meta = path.with_suffix(".meta.txt")
    meta.write_text(metadata_text(config, spec))
    return path, meta


def write_experiment(output: ExperimentOutput, out_dir, config: SystemConfig,
                     spec: ExperimentSpec) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_results(output.rows, out_dir / "results.csv", config, spec)
    summary_fields = ("scheme", "sweep_value", "n", "mean_sum_rate", "std_error")
    write_table(out_dir / "summary.csv", summary_fields,
                ([s[f] for f in summary_fields] for s in output.summary))
    if spec.experiment == "convergence" or output.history:
        write_table(out_dir / "history.csv", HISTORY_FIELDS, output.history)
    # wall-clock times vary run to run, so they live in their own file
    write_table(out_dir / "timing.txt", ("scheme", "sweep_value", "trial", "wall_time_s"),
                ((r.scheme, r.sweep_value, r.trial, r.wall_time) for r in output.rows))
    return out_dir
