"""System configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values or violated config invariants."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _vec3(value) -> tuple[float, float, float]:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size != 3:
        raise ConfigError(f"expected a 3-vector, got {value!r}")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class SystemConfig:
    """Physical and algorithmic scalars of one 6DMM-NOMA scenario.

    All quantities are linear SI units (watts, meters, radians). The
    element position box ``[r_min, r_max]`` lives in the panel's local frame;
    ``mm_location`` is where the panel sits in the global frame and is only
    used for line-of-sight geometry.
    """

    N: int = 16
    M: int = 16
    K: int = 4
    wavelength: float = 0.1
    h0: float = 0.01
    alpha: float = 2.2
    kappa: float = 3.0
    noise_power: float = 10.0 ** (-12.5)
    P_th: float = 0.005
    d_th: float = 0.05
    d_bs: float | None = None
    bs_location: tuple[float, float, float] = (0.0, 0.0, 10.0)
    mm_location: tuple[float, float, float] = (50.0, 20.0, 10.0)
    user_center: tuple[float, float, float] = (100.0, 0.0, 2.0)
    user_radius: float = 10.0
    r_min: tuple[float, float, float] = (0.0, 0.0, 0.0)
    r_max: tuple[float, float, float] = (1.0, 1.0, 1.0)
    # (yaw, pitch, roll)
    angle_min: tuple[float, float, float] = (-math.pi / 3, -math.pi / 3, -math.pi)
    angle_max: tuple[float, float, float] = (math.pi / 3, math.pi / 3, math.pi)
    population: int = 300
    elite_ratio: float = 0.2
    penalty0: float = 0.2
    smoothing: float = 0.9
    f_th: float = 1e-3
    patience: int = 10
    max_iter: int = 200
    variance_floor: float = 1e-12
    hinge_penalty: bool = True
    sic_penalty: bool = False
    ga_tournament: int = 2
    ga_crossover: float = 0.5
    ga_mutation: float = 0.1
    ga_mutation_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("bs_location", "mm_location", "user_center", "r_min", "r_max",
                     "angle_min", "angle_max"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))
        if self.d_bs is None:
            object.__setattr__(self, "d_bs", self.wavelength / 2)
        self.validate()

    def validate(self):
        checks = [
            (self.N >= 1 and self.M >= 1 and self.K >= 1, "N, M, K >= 1"),
            (self.wavelength > 0, "wavelength > 0"),
            (self.h0 > 0, "h0 > 0"),
            (self.kappa >= 0, "kappa >= 0"),
            (self.noise_power > 0, "noise_power > 0"),
            (self.P_th > 0, "P_th > 0"),
            (self.d_th >= 0, "d_th >= 0"),
            (self.d_bs > 0, "d_bs > 0"),
            (self.user_radius >= 0, "user_radius >= 0"),
            (all(a < b for a, b in zip(self.r_min, self.r_max)), "r_min < r_max componentwise"),
            (all(a <= b for a, b in zip(self.angle_min, self.angle_max)),
             "angle_min <= angle_max per axis"),
            (self.population >= 0, "population >= 0"),
            (0 < self.elite_ratio <= 1, "0 < elite_ratio (rho) <= 1"),
            (self.penalty0 >= 0, "penalty0 >= 0"),
            (0 < self.smoothing <= 1, "0 < smoothing <= 1"),
            (self.f_th >= 0, "f_th >= 0"),
            (self.patience >= 1, "patience >= 1"),
            (self.max_iter >= 0, "max_iter (T_th) >= 0"),
            (self.variance_floor > 0, "variance_floor > 0"),
            (self.ga_tournament >= 1, "ga_tournament >= 1"),
            (0 <= self.ga_crossover <= 1, "0 <= ga_crossover <= 1"),
            (0 <= self.ga_mutation <= 1, "0 <= ga_mutation <= 1"),
            (self.ga_mutation_scale >= 0, "ga_mutation_scale >= 0"),
        ]
        for ok, invariant in checks:
            if not ok:
                raise ConfigError(f"config invariant violated: {invariant}")

    @property
    def dimension(self) -> int:
        return 2 * self.N * self.K + self.M + 3 * self.M + 3

    @property
    def box_center(self) -> np.ndarray:
        return (np.asarray(self.r_min) + np.asarray(self.r_max)) / 2

    @property
    def elite_count(self) -> int:
        return math.ceil(self.elite_ratio * self.population)

    def replace(self, **changes) -> "SystemConfig":
        if "wavelength" in changes and "d_bs" not in changes:
            changes["d_bs"] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# file key -> (SystemConfig field, converter)
_SCALAR_KEYS = {
    "N": ("N", int),
    "M": ("M", int),
    "K": ("K", int),
    "lambda": ("wavelength", float),
    "h0_dB": ("h0", lambda v: db_to_linear(float(v))),
    "alpha": ("alpha", float),
    "kappa": ("kappa", float),
    "sigma2_dBm": ("noise_power", lambda v: dbm_to_watts(float(v))),
    "P_th_W": ("P_th", float),
    "P_th_mW": ("P_th", lambda v: float(v) * 1e-3),
    "P_th_dBm": ("P_th", lambda v: dbm_to_watts(float(v))),
    "d_th": ("d_th", float),
    "d_BS": ("d_bs", float),
    "bs_location": ("bs_location", None),
    "mm_location": ("mm_location", None),
    "user_center": ("user_center", None),
    "user_radius": ("user_radius", float),
    "r_min": ("r_min", None),
    "r_max": ("r_max", None),
    "yaw_min": ("angle_min", 0),
    "pitch_min": ("angle_min", 1),
    "roll_min": ("angle_min", 2),
    "yaw_max": ("angle_max", 0),
    "pitch_max": ("angle_max", 1),
    "roll_max": ("angle_max", 2),
    "I": ("population", int),
    "rho": ("elite_ratio", float),
    "penalty0": ("penalty0", float),
    "smoothing": ("smoothing", float),
    "f_th": ("f_th", float),
    "patience": ("patience", int),
    "T_th": ("max_iter", int),
    "variance_floor": ("variance_floor", float),
    "hinge_penalty": ("hinge_penalty", None),
    "sic_penalty": ("sic_penalty", None),
    "ga_tournament": ("ga_tournament", int),
    "ga_crossover": ("ga_crossover", float),
    "ga_mutation": ("ga_mutation", float),
    "ga_mutation_scale": ("ga_mutation_scale", float),
    "seed": ("seed", int),
}

SYSTEM_KEYS = tuple(_SCALAR_KEYS)
_POWER_KEYS = ("P_th_W", "P_th_mW", "P_th_dBm")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_angle(text: str) -> float:
    # accepts plain floats and multiples of pi such as "-pi/3" or "0.5*pi"
    expr = text.strip().replace(" ", "")
    if "pi" not in expr:
        return float(expr)
    expr = expr.replace("*pi", "pi").replace("pi*", "pi")
    sign = -1.0 if expr.startswith("-") else 1.0
    expr = expr.lstrip("+-")
    head, _, tail = expr.partition("pi")
    coef = float(head) if head else 1.0
    if tail.startswith("/"):
        coef /= float(tail[1:])
    elif tail:
        raise ConfigError(f"cannot parse angle {text!r}")
    return sign * coef * math.pi


def parse_key_values(text: str) -> dict[str, str]:
    """Split ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def system_config_from_pairs(pairs: dict[str, str]) -> SystemConfig:
    """Build a :class:`SystemConfig` from already split key/value strings.

    Keys absent from ``pairs`` keep their defaults. Unknown keys are the
    caller's business; this only looks at :data:`SYSTEM_KEYS`.
    """
    powers = [k for k in _POWER_KEYS if k in pairs]
    if len(powers) > 1:
        raise ConfigError(f"give at most one of {', '.join(_POWER_KEYS)}; got {powers}")
    kwargs: dict = {}
    angle_min = list(SystemConfig.angle_min)
    angle_max = list(SystemConfig.angle_max)
    for key, value in pairs.items():
        if key not in _SCALAR_KEYS:
            continue
        name, conv = _SCALAR_KEYS[key]
        try:
            if name in ("angle_min", "angle_max"):
                target = angle_min if name == "angle_min" else angle_max
                target[conv] = _parse_angle(value)
            elif name in ("hinge_penalty", "sic_penalty"):
                kwargs[name] = _parse_bool(value)
            elif conv is None:
                kwargs[name] = _vec3([float(v) for v in value.replace(",", " ").split()])
            else:
                kwargs[name] = conv(value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    kwargs["angle_min"] = tuple(angle_min)
    kwargs["angle_max"] = tuple(angle_max)
    return SystemConfig(**kwargs)


def format_config(config: SystemConfig) -> str:
    """Resolved config as ``key = value`` lines (linear units, field names)."""
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = " ".join(repr(float(v)) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def read_text(path) -> str:
    return Path(path).read_text()
