"""Squared cosine distance and the binomial likelihood objective.

The pair score d(h_u, h_v) = (1 - cos(h_u, h_v))^2 doubles as the success
probability of a binomial over the pair's (k, c) window counts; minimizing the
negative log likelihood drives d toward the empirical co-firing rate k/c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DegenerateEmbeddingError, InvalidArgumentError
from .model import (
    EmbeddingModel,
    ModelGrads,
    embed_backward,
    embed_forward,
    embed_many,
    embed_many_backward,
)


@dataclass(frozen=True)
class PairSample:
    """One training example: two token sequences and their (k, c) counts."""

    u_tokens: tuple[int, ...]
    v_tokens: tuple[int, ...]
    k: int
    c: int

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidArgumentError("opportunity count c must be positive")
        if not 0 <= self.k <= self.c:
            raise InvalidArgumentError(f"need 0 <= k <= c, got k={self.k}, c={self.c}")


def similarity(h_u: np.ndarray, h_v: np.ndarray) -> float:
    """Squared cosine distance (1 - cos)^2; raw range [0, 4]."""
    nu = float(np.linalg.norm(h_u))
    nv = float(np.linalg.norm(h_v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateEmbeddingError("cannot score a zero-norm embedding")
    cos = float(np.dot(h_u, h_v)) / (nu * nv)
    return (1.0 - cos) ** 2


def clamp_probability(d: float, epsilon: float) -> float:
    """Restrict a raw score to (0, 1) before it is used as a probability."""
    return min(max(d, epsilon), 1.0 - epsilon)


def _log_binom(c: int, k: int) -> float:
    return math.lgamma(c + 1) - math.lgamma(k + 1) - math.lgamma(c - k + 1)


def pair_loss(sample: PairSample, p: float) -> float:
    """Negative log binomial likelihood of observing k of c at rate p."""
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError(f"p must lie strictly in (0, 1), got {p}")
    return (
        -(sample.k * math.log(p) + (sample.c - sample.k) * math.log1p(-p))
        - _log_binom(sample.c, sample.k)
    )


def pair_loss_grad_p(sample: PairSample, p: float) -> float:
    """d(loss)/dp; the binomial coefficient term is parameter-free."""
    return -sample.k / p + (sample.c - sample.k) / (1.0 - p)


def _similarity_backward(h_u, h_v, d_d: float):
    """Gradients of d = (1 - cos)^2 with respect to both vectors."""
    nu = float(np.linalg.norm(h_u))
    nv = float(np.linalg.norm(h_v))
    cos = float(np.dot(h_u, h_v)) / (nu * nv)
    d_cos = -2.0 * (1.0 - cos) * d_d
    d_hu = d_cos * (h_v / (nu * nv) - cos * h_u / (nu * nu))
    d_hv = d_cos * (h_u / (nu * nv) - cos * h_v / (nv * nv))
    return d_hu, d_hv


def pair_objective(sample: PairSample, model: EmbeddingModel) -> float:
    """Loss of one pair under the current model (no gradients)."""
    h_u, _ = embed_forward(sample.u_tokens, model)
    h_v, _ = embed_forward(sample.v_tokens, model)
    d = similarity(h_u, h_v)
    p = clamp_probability(d, model.config.probability_clamp_epsilon)
    return pair_loss(sample, p)


def pair_objective_with_grads(
    sample: PairSample, model: EmbeddingModel, grads: ModelGrads
) -> float:
    """Loss of one pair, accumulating parameter gradients into ``grads``."""
    eps = model.config.probability_clamp_epsilon
    h_u, cache_u = embed_forward(sample.u_tokens, model)
    h_v, cache_v = embed_forward(sample.v_tokens, model)
    d = similarity(h_u, h_v)
    p = clamp_probability(d, eps)
    loss = pair_loss(sample, p)

    # Escape-only subgradient at the clamp: outside the interval, keep the
    # slope only when it pulls the pair back in. Pairs parked at their
    # boundary optimum stay put; overshooting pairs are never trapped.
    d_d = pair_loss_grad_p(sample, p)
    if (d <= eps and d_d > 0) or (d >= 1.0 - eps and d_d < 0):
        d_d = 0.0
    if d_d != 0.0:
        d_hu, d_hv = _similarity_backward(h_u, h_v, d_d)
        embed_backward(d_hu, model, cache_u, grads)
        embed_backward(d_hv, model, cache_v, grads)
    return loss


def batch_objective_with_grads(
    samples: Sequence[PairSample], model: EmbeddingModel, grads: ModelGrads
) -> np.ndarray:
    """Per-sample losses for a mini-batch, with gradients accumulated.

    Embeds each distinct token sequence once and vectorizes the pair math;
    numerically identical to summing ``pair_objective_with_grads`` over the
    batch.
    """
    eps = model.config.probability_clamp_epsilon
    sequences: list[tuple[int, ...]] = []
    index: dict[tuple[int, ...], int] = {}
    for sample in samples:
        for tokens in (sample.u_tokens, sample.v_tokens):
            if tokens not in index:
                index[tokens] = len(sequences)
                sequences.append(tokens)
    h, cache = embed_many(sequences, model)

    iu = np.asarray([index[s.u_tokens] for s in samples])
    iv = np.asarray([index[s.v_tokens] for s in samples])
    k = np.asarray([s.k for s in samples], dtype=np.float64)
    c = np.asarray([s.c for s in samples], dtype=np.float64)

    hu, hv = h[iu], h[iv]
    nu = np.linalg.norm(hu, axis=1)
    nv = np.linalg.norm(hv, axis=1)
    if np.any(nu == 0.0) or np.any(nv == 0.0):
        raise DegenerateEmbeddingError("cannot score a zero-norm embedding")
    cos = (hu * hv).sum(axis=1) / (nu * nv)
    d = (1.0 - cos) ** 2
    p = np.clip(d, eps, 1.0 - eps)

    log_binom = np.asarray([_log_binom(s.c, s.k) for s in samples])
    losses = -(k * np.log(p) + (c - k) * np.log1p(-p)) - log_binom

    # Escape-only subgradient at the clamp (see pair_objective_with_grads).
    d_p = -k / p + (c - k) / (1.0 - p)
    d_p = np.where((d <= eps) & (d_p > 0), 0.0, d_p)
    d_p = np.where((d >= 1.0 - eps) & (d_p < 0), 0.0, d_p)
    d_cos = -2.0 * (1.0 - cos) * d_p

    scale = (d_cos / (nu * nv))[:, None]
    d_hu = scale * hv - ((d_cos * cos) / (nu * nu))[:, None] * hu
    d_hv = scale * hu - ((d_cos * cos) / (nv * nv))[:, None] * hv

    d_h = np.zeros_like(h)
    np.add.at(d_h, iu, d_hu)
    np.add.at(d_h, iv, d_hv)
    embed_many_backward(d_h, model, cache, grads)
    return losses
