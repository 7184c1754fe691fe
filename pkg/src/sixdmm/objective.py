"""Penalized sum-rate fitness of candidate vectors.

:func:`fitness` evaluates a single candidate step by step through the channel
and NOMA primitives. :class:`Objective` does the same for a whole population
with batched numpy and is what the optimizers call; the two must agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import noma
from .channel import ChannelState, assemble_batch, assemble_channels, cascaded_channel
from .config import SystemConfig
from .encoding import decode, repair, segments
from .geometry import ElementLayout, pairwise_distances
from .noma import EvaluationResult

ACCESS_SCHEMES = ("noma", "sdma", "oma")


def penalty_weight(penalty0: float, t: int) -> float:
    """Decayed spacing-penalty weight for 1-based iteration ``t``."""
    if t < 1:
        raise ValueError("iteration index is 1-based")
    return penalty0 / math.sqrt(t)


def spacing_penalty(positions, d_th: float, hinge: bool = True) -> np.ndarray:
    """Sum over ordered pairs ``m != m'`` of ``d_th - ||r_m - r_m'||``.

    Each unordered pair is counted twice. With ``hinge`` the per-pair term is
    clamped at zero so well-separated layouts cost nothing.
    """
    d = pairwise_distances(positions)
    terms = d_th - d
    if hinge:
        terms = np.maximum(terms, 0.0)
    M = d.shape[-1]
    off = ~np.eye(M, dtype=bool)
    return np.sum(np.where(off, terms, 0.0), axis=(-2, -1))


def sic_violation(g_sorted, W_sorted, noise_power) -> np.ndarray:
    """Total shortfall ``max(0, rhs - lhs)`` of the SIC condition over ordered pairs."""
    Q = noma.gain_matrix(g_sorted, W_sorted)
    total = np.sum(Q, axis=-1, keepdims=True)
    ratio = Q / (total - Q + noise_power)
    own = np.diagonal(ratio, axis1=-2, axis2=-1)[..., :, None]
    gap = np.maximum(own - ratio, 0.0)
    return np.sum(np.triu(gap, k=1), axis=(-2, -1))


def mrt_beamformer(g, P_th: float, split=None) -> np.ndarray:
    """Maximum-ratio beams ``w_k = sqrt(p_k) g_k^H / ||g_k||``; equal split by default."""
    g = np.asarray(g)
    K = g.shape[-2]
    if split is None:
        split = np.full(K, 1.0 / K)
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    dirs = np.conj(g) / np.where(norms == 0, 1.0, norms)
    return np.swapaxes(dirs * np.sqrt(P_th * np.asarray(split))[..., :, None], -1, -2)


def fitness(x, state: ChannelState, penalty_weight: float, config: SystemConfig,
            access: str = "noma") -> EvaluationResult:
    """Reference single-candidate evaluation (expects an already repaired ``x``)."""
    if access not in ACCESS_SCHEMES:
        raise ValueError(f"access must be one of {ACCESS_SCHEMES}")
    dec = decode(x, config)
    layout = ElementLayout(dec.positions, config.box_center)
    H, h = assemble_channels(state, layout, dec.angles, config)
    theta = dec.theta
    g = np.array([cascaded_channel(h[k], theta, H) for k in range(config.K)])
    W = dec.W

    order = noma.sort_users(g)
    g_s, W_s = g[order], W[:, order]
    sic_ok = noma.sic_criterion(g_s, W_s, config.noise_power)
    sinr = np.empty(config.K)
    if access == "noma":
        sinr[order] = noma.sinr_post_sic(g_s, W_s, config.noise_power)
        rates = noma.rates_from_sinr(sinr)
    elif access == "sdma":
        sinr = noma.sdma_sinr(g, W, config.noise_power)
        rates = noma.rates_from_sinr(sinr)
    else:
        gains = np.sum(np.abs(g) ** 2, axis=-1)
        sinr = config.P_th * gains / config.noise_power
        rates = noma.rates_from_sinr(sinr) / config.K
    total = float(np.sum(rates))

    penalty = penalty_weight * float(spacing_penalty(dec.positions, config.d_th,
                                                     config.hinge_penalty))
    if config.sic_penalty and access == "noma":
        penalty += penalty_weight * float(sic_violation(g_s, W_s, config.noise_power))
    return EvaluationResult(
        order=order,
        sinr=sinr,
        rates=rates,
        sum_rate=total,
        sic_ok=sic_ok,
        penalty=penalty,
        fitness=total - penalty,
        power=float(noma.power_used(W)),
    )


@dataclass
class Objective:
    """Fitness of whole populations under a fixed channel draw.

    ``structure`` is anything with an ``apply(X, config)`` method that
    restricts element positions further (see :mod:`sixdmm.baselines`).
    ``frozen`` maps block names to fixed segment values written over every
    prepared candidate.
    """

    config: SystemConfig
    state: ChannelState
    access: str = "noma"
    structure: object = None
    frozen: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.access not in ACCESS_SCHEMES:
            raise ValueError(f"access must be one of {ACCESS_SCHEMES}")
        self._seg = segments(self.config)

    def prepare(self, X) -> np.ndarray:
        X = repair(X, self.config)
        if self.structure is not None:
            X = self.structure.apply(X, self.config)
        for block, values in self.frozen.items():
            X[..., self._seg.block(block)] = values
        return X

    def effective_channels(self, X):
        dec = decode(X, self.config)
        H, h, clamped = assemble_batch(self.state, dec.positions, dec.angles, self.config)
        G = np.einsum("...km,...m,...mn->...kn", np.conj(h), dec.theta, H)
        return dec, G, clamped

    def evaluate(self, X, weight: float) -> dict:
        """Batched fitness; returns arrays keyed fitness, sum_rate, penalty, clamped."""
        cfg = self.config
        X = np.atleast_2d(X)
        dec, G, clamped = self.effective_channels(X)
        W = dec.W
        if self.access == "oma":
            rate = noma.oma_rate(G, cfg.P_th, cfg.noise_power)
        elif self.access == "sdma":
            rate = noma.sdma_rate(G, W, cfg.noise_power)
        else:
            order = noma.sort_users(G)
            G_s = np.take_along_axis(G, order[..., :, None], axis=-2)
            W_s = np.take_along_axis(W, order[..., None, :], axis=-1)
            rate = noma.sum_rate(noma.sinr_post_sic(G_s, W_s, cfg.noise_power))
        penalty = weight * spacing_penalty(dec.positions, cfg.d_th, cfg.hinge_penalty)
        if cfg.sic_penalty and self.access == "noma":
            penalty = penalty + weight * sic_violation(G_s, W_s, cfg.noise_power)
        return {
            "fitness": rate - penalty,
            "sum_rate": rate,
            "penalty": penalty,
            "clamped": clamped,
        }

    def result(self, x, weight: float) -> EvaluationResult:
        res = fitness(x, self.state, weight, self.config, access=self.access)
        _, _, clamped = self.effective_channels(np.atleast_2d(x))
        res.clamped_eigs = int(clamped[0])
        return res
