"""Threshold classification of alerts against the virtual noise embedding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encoding import EncodedAlert
from ..errors import InvalidArgumentError
from .model import EmbeddingModel, embed
from .objective import clamp_probability, similarity

DEFAULT_THETA = 0.7


@dataclass(frozen=True)
class NoiseVerdict:
    alert_key: str
    score: float
    is_noise: bool
    theta: float

    def to_record(self) -> dict:
        return {
            "alert_key": self.alert_key,
            "score": self.score,
            "is_noise": self.is_noise,
            "theta": self.theta,
        }


def noise_score(alert: EncodedAlert, model: EmbeddingModel,
                noise_embedding: np.ndarray) -> float:
    """Clamped squared-cosine distance between the alert and the noise node."""
    h = embed(alert.token_codes, model)
    return clamp_probability(
        similarity(h, noise_embedding), model.config.probability_clamp_epsilon
    )


def classify(
    alert: EncodedAlert,
    model: EmbeddingModel,
    noise_embedding: np.ndarray | None = None,
    theta: float = DEFAULT_THETA,
) -> NoiseVerdict:
    """Score one alert and apply the noise threshold (score >= theta)."""
    if not 0.0 <= theta <= 1.0:
        raise InvalidArgumentError(f"theta must lie in [0, 1], got {theta}")
    if noise_embedding is None:
        noise_embedding = model.noise_embedding()
    score = noise_score(alert, model, noise_embedding)
    return NoiseVerdict(
        alert_key=alert.alert_key, score=score, is_noise=score >= theta, theta=theta
    )
