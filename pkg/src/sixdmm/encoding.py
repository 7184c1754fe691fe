"""Flat real encoding of (beamformer, phase shifts, positions, rotation) and its repair.

Segment order of a candidate vector of length ``D = 2NK + M + 3M + 3``::

    [Re W | Im W | phi_1..phi_M | x_1 y_1 z_1 ... z_M | yaw pitch roll]

``W`` is flattened user by user (``w_1`` first). The reflection coefficient
of element ``m`` is ``exp(-1j * phi_m)``.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .config import SystemConfig

logger = logging.getLogger(__name__)

BLOCKS = ("beamformer", "phases", "positions", "rotation")


class Segments(NamedTuple):
    re: slice
    im: slice
    phases: slice
    positions: slice
    rotation: slice

    def block(self, name: str) -> slice:
        """Slice of a named block; 'beamformer' covers both Re and Im parts."""
        if name == "beamformer":
            return slice(self.re.start, self.im.stop)
        if name in ("phases", "positions", "rotation"):
            return getattr(self, name)
        raise ValueError(f"unknown block {name!r}; expected one of {BLOCKS}")


class Decoded(NamedTuple):
    W: np.ndarray          # (..., N, K) complex
    phi: np.ndarray        # (..., M)
    positions: np.ndarray  # (..., M, 3)
    angles: np.ndarray     # (..., 3)

    @property
    def theta(self) -> np.ndarray:
        return np.exp(-1j * self.phi)


def dimension(config_or_N, M=None, K=None) -> int:
    if isinstance(config_or_N, SystemConfig):
        N, M, K = config_or_N.N, config_or_N.M, config_or_N.K
    else:
        N = config_or_N
    return 2 * N * K + M + 3 * M + 3


def segments(config: SystemConfig) -> Segments:
    nk = config.N * config.K
    M = config.M
    a = nk
    b = 2 * nk
    c = b + M
    d = c + 3 * M
    return Segments(slice(0, a), slice(a, b), slice(b, c), slice(c, d), slice(d, d + 3))


def encode(W, phi, positions, angles, config: SystemConfig) -> np.ndarray:
    W = np.asarray(W, dtype=complex)
    if W.shape != (config.N, config.K):
        raise ValueError(f"W must be ({config.N}, {config.K}), got {W.shape}")
    phi = np.asarray(phi, dtype=float).reshape(config.M)
    positions = np.asarray(positions, dtype=float).reshape(config.M, 3)
    if hasattr(angles, "as_array"):
        angles = angles.as_array()
    angles = np.asarray(angles, dtype=float).reshape(3)
    return np.concatenate([W.real.T.ravel(), W.imag.T.ravel(), phi, positions.ravel(), angles])


def decode(x, config: SystemConfig) -> Decoded:
    """Split one ``(D,)`` vector or a ``(..., D)`` batch into structured parts."""
    x = np.asarray(x, dtype=float)
    D = dimension(config)
    if x.shape[-1] != D:
        raise ValueError(f"candidate length {x.shape[-1]} != D = {D}")
    seg = segments(config)
    lead = x.shape[:-1]
    N, K, M = config.N, config.K, config.M
    re = x[..., seg.re].reshape(lead + (K, N))
    im = x[..., seg.im].reshape(lead + (K, N))
    W = np.swapaxes(re + 1j * im, -1, -2)
    return Decoded(
        W=W,
        phi=x[..., seg.phases].copy(),
        positions=x[..., seg.positions].reshape(lead + (M, 3)).copy(),
        angles=x[..., seg.rotation].copy(),
    )


def wrap_phase(phi) -> np.ndarray:
    """Map angles into (0, 2 pi]."""
    out = np.mod(phi, 2 * np.pi)
    return np.where(out == 0.0, 2 * np.pi, out)


def repair(x, config: SystemConfig) -> np.ndarray:
    """Project a raw sample onto the hard constraints.

    The beamformer is rescaled to spend exactly ``P_th``, phases are wrapped
    into (0, 2 pi], positions and angles are clamped to their boxes. Accepts a
    single vector or a ``(..., D)`` batch and returns a new array.
    """
    x = np.array(x, dtype=float, copy=True)
    if x.shape[-1] != dimension(config):
        raise ValueError(f"candidate length {x.shape[-1]} != D = {dimension(config)}")
    if not np.all(np.isfinite(x)):
        raise ValueError("candidate contains non-finite entries")
    seg = segments(config)
    bf = seg.block("beamformer")

    power = np.sum(x[..., bf] ** 2, axis=-1, keepdims=True)
    zero = power[..., 0] == 0.0
    if np.any(zero):
        logger.warning("replacing %d all-zero beamformer(s) by a uniform one", int(np.sum(zero)))
        x[zero, seg.re] = 1.0
        power = np.where(zero[..., None], float(config.N * config.K), power)
    x[..., bf] *= np.sqrt(config.P_th / power)

    x[..., seg.phases] = wrap_phase(x[..., seg.phases])

    lead = x.shape[:-1]
    pos = x[..., seg.positions].reshape(lead + (config.M, 3))
    pos = np.minimum(np.maximum(pos, config.r_min), config.r_max)
    x[..., seg.positions] = pos.reshape(lead + (3 * config.M,))

    x[..., seg.rotation] = np.minimum(np.maximum(x[..., seg.rotation], config.angle_min),
                                      config.angle_max)
    return x


def save_candidate(path, x, config: SystemConfig):
    """Write a candidate as a one-value-per-line text file with an (N, M, K) header."""
    x = np.asarray(x, dtype=float)
    header = f"sixdmm-candidate N={config.N} M={config.M} K={config.K} D={x.size}"
    np.savetxt(path, x, fmt="%.17g", header=header)


def load_candidate(path) -> tuple[np.ndarray, dict]:
    first = Path(path).read_text().splitlines()[0].lstrip("# ").split()
    if not first or first[0] != "sixdmm-candidate":
        raise ValueError(f"{path}: not a candidate file")
    meta = {k: int(v) for k, v in (item.split("=") for item in first[1:])}
    x = np.atleast_1d(np.loadtxt(path))
    if x.size != meta["D"]:
        raise ValueError(f"{path}: header says D={meta['D']}, found {x.size} values")
    return x, meta
