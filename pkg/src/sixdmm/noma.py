"""Downlink NOMA rates with SIC, plus the OMA and SDMA comparison models.

Effective channels ``g`` are stacked as ``(..., K, N)`` (one row per user)
and beamformers ``W`` as ``(..., N, K)`` (one column per user). User indices
are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EvaluationResult",
    "sort_users",
    "gain_matrix",
    "sinr_post_sic",
    "sic_criterion",
    "sdma_sinr",
    "sdma_rate",
    "oma_rate",
    "rates_from_sinr",
    "sum_rate",
    "power_used",
]


@dataclass
class EvaluationResult:
    """Per-user outcome of one candidate under one channel draw.

    ``sinr`` and ``rates`` are indexed by original user label; ``order`` lists
    labels from strongest to weakest cascaded gain.
    """

    order: np.ndarray
    sinr: np.ndarray
    rates: np.ndarray
    sum_rate: float
    sic_ok: np.ndarray
    penalty: float
    fitness: float
    power: float = 0.0
    clamped_eigs: int = 0

    @property
    def sic_feasible(self) -> bool:
        return bool(np.all(self.sic_ok))


def sort_users(g) -> np.ndarray:
    """Indices ordering users by non-increasing ``||g_k||^2``; ties keep label order."""
    gains = np.sum(np.abs(np.asarray(g)) ** 2, axis=-1)
    return np.argsort(-gains, axis=-1, kind="stable")


def gain_matrix(g, W) -> np.ndarray:
    """``Q[..., k, j] = |g_k w_j|^2``."""
    return np.abs(np.asarray(g) @ np.asarray(W)) ** 2


def _check_noise(noise_power):
    if not noise_power > 0:
        raise ValueError(f"noise power must be positive, got {noise_power}")


def sinr_post_sic(g_sorted, W_sorted, noise_power) -> np.ndarray:
    """SINR after perfect SIC for users already sorted strongest first.

    User ``k`` is interfered only by the beams of stronger users ``j < k``.
    """
    _check_noise(noise_power)
    Q = gain_matrix(g_sorted, W_sorted)
    signal = np.diagonal(Q, axis1=-2, axis2=-1)
    interference = np.sum(np.tril(Q, k=-1), axis=-1)
    return signal / (interference + noise_power)


def sic_criterion(g_sorted, W_sorted, noise_power) -> np.ndarray:
    """Pairwise SIC decodability for sorted users.

    Entry ``[k, k']`` with ``k < k'`` tells whether the stronger user ``k``
    sees the weaker user's stream at least as well as its own. Entries with
    ``k >= k'`` carry no condition and are True.
    """
    _check_noise(noise_power)
    Q = gain_matrix(g_sorted, W_sorted)
    total = np.sum(Q, axis=-1, keepdims=True)
    # ratio[k, j] = |g_k w_j|^2 / (sum_{i != j} |g_k w_i|^2 + sigma^2)
    ratio = Q / (total - Q + noise_power)
    own = np.diagonal(ratio, axis1=-2, axis2=-1)[..., :, None]
    ok = ratio >= own
    K = Q.shape[-1]
    upper = np.triu(np.ones((K, K), dtype=bool), k=1)
    return np.where(upper, ok, True)


def sdma_sinr(g, W, noise_power) -> np.ndarray:
    """Treat-interference-as-noise SINR; every other user's beam interferes."""
    _check_noise(noise_power)
    Q = gain_matrix(g, W)
    signal = np.diagonal(Q, axis1=-2, axis2=-1)
    return signal / (np.sum(Q, axis=-1) - signal + noise_power)


def sdma_rate(g, W, noise_power) -> np.ndarray:
    return sum_rate(sdma_sinr(g, W, noise_power))


def oma_rate(g, P_th: float, noise_power) -> np.ndarray:
    """Time-division rate: each user gets the full budget with an MRT beam in a 1/K slot."""
    _check_noise(noise_power)
    gains = np.sum(np.abs(np.asarray(g)) ** 2, axis=-1)
    K = gains.shape[-1]
    return np.sum(np.log2(1 + P_th * gains / noise_power), axis=-1) / K


def rates_from_sinr(sinr) -> np.ndarray:
    return np.log2(1 + np.asarray(sinr))


def sum_rate(sinr) -> np.ndarray:
    return np.sum(rates_from_sinr(sinr), axis=-1)


def power_used(W) -> np.ndarray:
    return np.sum(np.abs(np.asarray(W)) ** 2, axis=(-2, -1))
