"""Pairwise training loop: mini-batched Adam over the binomial objective.

Positive samples come straight from the co-occurrence statistics (every stored
pair, including pairs with the virtual noise node). Negatives are real-alert
pairs that never co-fired, drawn uniformly each epoch with k=0 and c equal to
the union of their window sets. Each epoch shuffles the samples and takes one
Adam step per mini-batch; the learning rate decays linearly across epochs.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping

import numpy as np

from ..cooccurrence import CooccurrenceStats
from ..encoding import EncodedAlert
from ..errors import DivergedTrainingError, InvalidArgumentError
from .model import EmbeddingModel, ModelGrads, TrainConfig, init_model
from .objective import PairSample, batch_objective_with_grads

SampleSource = Callable[[int, np.random.Generator], list[PairSample]]


class AdamOptimizer:
    """Standard Adam with bias correction, one state slot per tensor."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float, beta2: float,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        correct1 = 1.0 - self.beta1 ** self.t
        correct2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)


def noise_sequence(model_or_code) -> tuple[int, ...]:
    code = getattr(model_or_code, "noise_token_code", model_or_code)
    return (int(code),)


def cooccurrence_sample_source(
    stats: CooccurrenceStats,
    encoded: Mapping[str, EncodedAlert],
    noise_token_code: int,
    negative_sample_ratio: float,
) -> SampleSource:
    """Per-epoch sample builder over a finalized co-occurrence table."""
    tokens = {key: enc.token_codes for key, enc in encoded.items()}
    tokens[stats.noise_key] = noise_sequence(noise_token_code)
    positives = [
        PairSample(tokens[u], tokens[v], k, c)
        for (u, v), (k, c) in sorted(stats.pair_counts.items())
    ]
    real = stats.real_keys()
    stored = set(stats.pair_counts)
    eligible = [
        (u, v)
        for i, u in enumerate(real)
        for v in real[i + 1:]
        if (u, v) not in stored
    ]

    def source(epoch: int, rng: np.random.Generator) -> list[PairSample]:
        n_neg = min(
            int(round(negative_sample_ratio * len(positives))), len(eligible)
        )
        if n_neg <= 0:
            return list(positives)
        picks = rng.choice(len(eligible), size=n_neg, replace=False)
        negatives = [
            PairSample(tokens[u], tokens[v], 0, stats.union_count(u, v))
            for u, v in (eligible[i] for i in sorted(picks))
        ]
        return positives + negatives

    return source


def train(
    samples: Iterable[PairSample] | SampleSource,
    config: TrainConfig,
    vocab_size: int,
    noise_token_code: int | None = None,
    loss_hook: Callable[[int, float], None] | None = None,
) -> EmbeddingModel:
    """Run ``config.epochs`` shuffled passes of per-pair Adam updates.

    ``samples`` is either a concrete list or a callable (epoch, rng) -> list,
    letting callers resample negatives every epoch. Reproducible given
    ``config.seed``.
    """
    rng = np.random.default_rng(config.seed)
    model = init_model(vocab_size, config, rng, noise_token_code)
    params = model.parameters()
    adam = AdamOptimizer(
        params, config.learning_rate, config.adam_beta1, config.adam_beta2
    )

    source: SampleSource
    if callable(samples):
        source = samples
    else:
        static = list(samples)
        source = lambda epoch, rng: static

    step = 0
    saw_positive = False
    base_lr = config.learning_rate
    for epoch in range(config.epochs):
        # Linear decay anneals the tug-of-war between competing pairs.
        adam.lr = base_lr * (1.0 - 0.95 * epoch / config.epochs)
        epoch_samples = source(epoch, rng)
        if epoch == 0:
            if not epoch_samples:
                raise InvalidArgumentError("training requires at least one pair sample")
            saw_positive = any(s.k > 0 for s in epoch_samples)
        order = rng.permutation(len(epoch_samples))
        batch_size = config.batch_size or len(order)
        for lo in range(0, len(order), batch_size):
            chunk = [epoch_samples[i] for i in order[lo:lo + batch_size]]
            grads = ModelGrads(model)
            losses = batch_objective_with_grads(chunk, model, grads)
            if not np.all(np.isfinite(losses)):
                bad = int(np.flatnonzero(~np.isfinite(losses))[0])
                raise DivergedTrainingError(
                    f"non-finite loss {losses[bad]} at step {step + bad}",
                    sample=chunk[bad],
                )
            adam.step(params, grads.as_list())
            if loss_hook is not None:
                for offset, loss in enumerate(losses):
                    loss_hook(step + offset, float(loss))
            step += len(chunk)
    if not saw_positive:
        raise InvalidArgumentError("training requires at least one positive pair (k > 0)")
    model.invalidate_cache()
    model.noise_embedding()
    return model


def train_from_stats(
    stats: CooccurrenceStats,
    encoded: Mapping[str, EncodedAlert],
    config: TrainConfig,
    vocab_next_code: int,
    vocab_checksum: str = "",
    loss_hook: Callable[[int, float], None] | None = None,
) -> EmbeddingModel:
    """Allocate the noise token one past the vocabulary and train on stats."""
    noise_code = vocab_next_code
    source = cooccurrence_sample_source(
        stats, encoded, noise_code, config.negative_sample_ratio
    )
    model = train(
        source, config, vocab_size=noise_code + 1,
        noise_token_code=noise_code, loss_hook=loss_hook,
    )
    model.vocab_checksum = vocab_checksum
    return model
