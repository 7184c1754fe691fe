"""Rician BS-to-surface and surface-to-user channels with element correlation.

The random part of every channel draw lives in :class:`ChannelState`; the
channels for a particular surface configuration (element positions and panel
rotation) are then a deterministic function of that state. Most functions
accept leading batch axes so a whole population can be assembled at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import j0

from .config import SystemConfig
from .geometry import (
    ElementLayout,
    RotationAngles,
    combined_rotation,
    direction_angles,
    pairwise_distances,
    rotate_positions,
    wave_vector,
)

__all__ = [
    "ChannelState",
    "CorrelationFactor",
    "bs_antenna_positions",
    "bs_array_response",
    "mm_array_response",
    "correlation_matrix",
    "correlation_sqrt",
    "assemble_channels",
    "assemble_batch",
    "cascaded_channel",
    "draw_channel_state",
]


@dataclass(frozen=True)
class ChannelState:
    """Everything about one Monte Carlo draw that does not depend on the candidate."""

    bs_aod: np.ndarray           # (3,)
    mm_aoa: np.ndarray           # (3,)
    mm_aod: np.ndarray           # (K, 3)
    d1: float
    d2: np.ndarray               # (K,)
    nlos_bs_mm: np.ndarray       # (M, N) complex
    nlos_mm_user: np.ndarray     # (K, M) complex
    user_positions: np.ndarray   # (K, 3)

    def __post_init__(self):
        if not self.d1 > 0 or np.any(np.asarray(self.d2) <= 0):
            raise ValueError("link distances must be positive")
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, np.ndarray):
                value = value.copy()
                value.flags.writeable = False
                object.__setattr__(self, name, value)

    @property
    def K(self) -> int:
        return self.nlos_mm_user.shape[0]

    @property
    def M(self) -> int:
        return self.nlos_bs_mm.shape[0]

    @property
    def N(self) -> int:
        return self.nlos_bs_mm.shape[1]

    def to_dict(self) -> dict:
        def cplx(a):
            return np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "format": "sixdmm-channel-state/1",
            "bs_aod": self.bs_aod.tolist(),
            "mm_aoa": self.mm_aoa.tolist(),
            "mm_aod": self.mm_aod.tolist(),
            "d1": float(self.d1),
            "d2": self.d2.tolist(),
            "nlos_bs_mm": cplx(self.nlos_bs_mm),
            "nlos_mm_user": cplx(self.nlos_mm_user),
            "user_positions": self.user_positions.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelState":
        def cplx(a):
            a = np.asarray(a, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        return cls(
            bs_aod=np.asarray(data["bs_aod"], dtype=float),
            mm_aoa=np.asarray(data["mm_aoa"], dtype=float),
            mm_aod=np.asarray(data["mm_aod"], dtype=float),
            d1=float(data["d1"]),
            d2=np.asarray(data["d2"], dtype=float),
            nlos_bs_mm=cplx(data["nlos_bs_mm"]),
            nlos_mm_user=cplx(data["nlos_mm_user"]),
            user_positions=np.asarray(data["user_positions"], dtype=float),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "ChannelState":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class CorrelationFactor:
    matrix_sqrt: np.ndarray
    clamped_eigs: int


def bs_antenna_positions(config: SystemConfig) -> np.ndarray:
    """Uniform linear array along x with spacing ``d_bs``, first antenna at the origin."""
    pos = np.zeros((config.N, 3))
    pos[:, 0] = np.arange(config.N) * config.d_bs
    return pos


def bs_array_response(aod, config: SystemConfig) -> np.ndarray:
    k = np.asarray(aod, dtype=float)
    phase = (2 * np.pi / config.wavelength) * (bs_antenna_positions(config) @ k)
    return np.exp(1j * phase) / np.sqrt(config.N)


def mm_array_response(direction, layout: ElementLayout, angles, config: SystemConfig) -> np.ndarray:
    """Surface response toward ``direction`` (a (3,) wave vector or a (P, 3) stack)."""
    eff = rotate_positions(layout.positions, layout.center, combined_rotation(angles))
    return _mm_response(np.asarray(direction, dtype=float), eff, config.wavelength)


def _mm_response(directions, eff_positions, wavelength) -> np.ndarray:
    # directions (3,) -> (..., M); (P, 3) -> (..., P, M)
    M = eff_positions.shape[-2]
    phase = (2 * np.pi / wavelength) * np.einsum("...mc,pc->...pm", eff_positions,
                                                  np.atleast_2d(directions))
    out = np.exp(1j * phase) / np.sqrt(M)
    return out[..., 0, :] if np.ndim(directions) == 1 else out


def correlation_matrix(positions, wavelength: float) -> np.ndarray:
    """Zero-order Bessel correlation ``J0(2 pi d_ij / lambda)`` of element positions.

    ``positions`` may be an :class:`ElementLayout` or a ``(..., M, 3)`` array.
    """
    if isinstance(positions, ElementLayout):
        positions = positions.positions
    C = j0((2 * np.pi / wavelength) * pairwise_distances(positions))
    idx = np.arange(C.shape[-1])
    C[..., idx, idx] = 1.0
    return C


def _factor(corr):
    # U sqrt(L) U^H rather than U sqrt(L): eigh may flip eigenvector signs or
    # reorder near-equal eigenvalues between nearby layouts, which would make
    # the channel jump as elements move. The symmetric root is continuous.
    eigvals, U = np.linalg.eigh(corr)
    clamped = np.sum(eigvals < 0, axis=-1)
    F = U * np.sqrt(np.clip(eigvals, 0.0, None))[..., None, :]
    return F @ np.swapaxes(U, -1, -2).conj(), clamped


def correlation_sqrt(corr) -> CorrelationFactor:
    """Symmetric square root ``F = U sqrt(max(L, 0)) U^H``; ``F F^H`` is the PSD-projected input."""
    corr = np.asarray(corr)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError(f"expected a square matrix, got {corr.shape}")
    if not np.allclose(corr, corr.conj().T, atol=1e-10, rtol=0):
        raise ValueError("correlation matrix is not symmetric")
    F, clamped = _factor(corr)
    return CorrelationFactor(F.astype(complex), int(clamped))


def rician_weights(kappa: float) -> tuple[float, float]:
    if np.isinf(kappa):
        return 1.0, 0.0
    return float(np.sqrt(kappa / (kappa + 1))), float(np.sqrt(1 / (kappa + 1)))


def assemble_batch(state: ChannelState, positions, angles, config: SystemConfig,
                   center=None):
    """Channels for a batch of surface configurations.

    Parameters
    ----------
    positions : (..., M, 3) element positions in the panel frame.
    angles : (..., 3) yaw, pitch, roll.
    center : rotation center, defaults to the middle of the position box.

    Returns
    -------
    H : (..., M, N) BS-to-surface channel.
    h : (..., K, M) surface-to-user channels, one row per user.
    clamped : (...,) number of clamped correlation eigenvalues.
    """
    if center is None:
        center = config.box_center
    positions = np.asarray(positions, dtype=float)
    R = combined_rotation(angles)
    eff = rotate_positions(positions, center, R)

    a_bs = bs_array_response(state.bs_aod, config)              # (N,)
    a_r = _mm_response(state.mm_aoa, eff, config.wavelength)    # (..., M)
    a_k = _mm_response(state.mm_aod, eff, config.wavelength)    # (..., K, M)

    # rotation is an isometry, so the raw positions give the same correlation
    F, clamped = _factor(correlation_matrix(positions, config.wavelength))

    w_los, w_nlos = rician_weights(config.kappa)
    g1 = np.sqrt(config.h0 * state.d1 ** (-config.alpha))
    g2 = np.sqrt(config.h0 * np.asarray(state.d2) ** (-config.alpha))

    H = g1 * (w_los * a_r[..., :, None] * a_bs.conj()[None, :]
              + w_nlos * (F @ state.nlos_bs_mm))
    h_nlos = np.einsum("...ij,kj->...ki", F, state.nlos_mm_user)
    h = g2[:, None] * (w_los * a_k + w_nlos * h_nlos)
    return H, h, clamped


def assemble_channels(state: ChannelState, layout: ElementLayout, angles, config: SystemConfig):
    """Channels ``(H, h)`` for one candidate; ``h`` holds one user per row."""
    if isinstance(angles, RotationAngles):
        angles = angles.as_array()
    H, h, _ = assemble_batch(state, layout.positions, angles, config, center=layout.center)
    return H, h


def cascaded_channel(h_k, phases, H) -> np.ndarray:
    """Effective row channel ``h_k^H diag(phases) H`` seen by one user."""
    phases = np.asarray(phases)
    if not np.allclose(np.abs(phases), 1.0, atol=1e-9, rtol=0):
        raise ValueError("reflection coefficients must be unit-modulus")
    return (np.conj(h_k) * phases) @ H


def draw_channel_state(config: SystemConfig, rng: np.random.Generator) -> ChannelState:
    """Drop users uniformly on the disc and draw the i.i.d. CN(0, 1) scattering matrices."""
    K, M, N = config.K, config.M, config.N
    radius = config.user_radius * np.sqrt(rng.random(K))
    angle = 2 * np.pi * rng.random(K)
    users = np.tile(np.asarray(config.user_center), (K, 1))
    users[:, 0] += radius * np.cos(angle)
    users[:, 1] += radius * np.sin(angle)

    bs = np.asarray(config.bs_location)
    mm = np.asarray(config.mm_location)
    bs_aod = wave_vector(*direction_angles(bs, mm))
    mm_aoa = wave_vector(*direction_angles(mm, bs))
    mm_aod = np.array([wave_vector(*direction_angles(mm, u)) for u in users])

    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    nlos_bs_mm = cn(M, N)
    nlos_mm_user = cn(K, M)
    return ChannelState(
        bs_aod=bs_aod,
        mm_aoa=mm_aoa,
        mm_aod=mm_aod,
        d1=float(np.linalg.norm(mm - bs)),
        d2=np.linalg.norm(users - mm, axis=1),
        nlos_bs_mm=nlos_bs_mm,
        nlos_mm_user=nlos_mm_user,
        user_positions=users,
    )
