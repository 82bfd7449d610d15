"""sklearn-style front door for the denoiser: fit on alerts, predict noise."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..alerts import Alert, AnonymizationPolicy, anonymize_alert
from ..cooccurrence import build_cooccurrence
from ..encoding import encode_corpus
from ..errors import InvalidArgumentError
from .inference import DEFAULT_THETA, NoiseVerdict, classify
from .model import TrainConfig
from .trainer import train_from_stats


class GraphDenoiser(BaseEstimator):
    """Fits the co-occurrence embedding model and classifies alerts as noise.

    fit(X) takes a sequence of Alert instances; predict(X) returns a boolean
    noise mask and decision_function(X) the raw scores against the virtual
    noise node. Hyperparameters mirror TrainConfig plus the threshold theta
    and the anonymization settings.
    """

    def __init__(
        self,
        embedding_dim=64,
        attention_heads=4,
        attention_layers=1,
        learning_rate=1e-3,
        adam_beta1=0.9,
        adam_beta2=0.999,
        epochs=60,
        probability_clamp_epsilon=1e-6,
        negative_sample_ratio=1.0,
        seed=0,
        theta=DEFAULT_THETA,
        identifier_keys=(),
        cardinality_threshold=200,
        epoch_origin=None,
    ):
        self.embedding_dim = embedding_dim
        self.attention_heads = attention_heads
        self.attention_layers = attention_layers
        self.learning_rate = learning_rate
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.epochs = epochs
        self.probability_clamp_epsilon = probability_clamp_epsilon
        self.negative_sample_ratio = negative_sample_ratio
        self.seed = seed
        self.theta = theta
        self.identifier_keys = identifier_keys
        self.cardinality_threshold = cardinality_threshold
        self.epoch_origin = epoch_origin

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            embedding_dim=self.embedding_dim,
            attention_heads=self.attention_heads,
            attention_layers=self.attention_layers,
            learning_rate=self.learning_rate,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            epochs=self.epochs,
            probability_clamp_epsilon=self.probability_clamp_epsilon,
            negative_sample_ratio=self.negative_sample_ratio,
            seed=self.seed,
        )

    def fit(self, X: Sequence[Alert], y=None):
        alerts = list(X)
        if not alerts:
            raise InvalidArgumentError("cannot fit on an empty alert corpus")
        config = self._train_config()
        origin = self.epoch_origin
        if origin is None:
            origin = min(a.fire_time for a in alerts)
        self.origin_ = int(origin)
        self.policy_ = AnonymizationPolicy.from_corpus(
            alerts, self.identifier_keys, self.cardinality_threshold
        )
        anonymized = [anonymize_alert(a, self.policy_) for a in alerts]
        self.encoded_, self.vocab_ = encode_corpus(anonymized, self.origin_)
        self.tau_ = max(
            (w for enc in self.encoded_.values() for w in enc.windows), default=0
        ) + 1
        self.stats_ = build_cooccurrence(self.encoded_, self.tau_)
        self.model_ = train_from_stats(
            self.stats_, self.encoded_, config,
            vocab_next_code=self.vocab_.next_code,
            vocab_checksum=self.vocab_.checksum(),
        )
        return self

    def _encode(self, alert: Alert):
        from ..encoding import EncodedAlert

        # Verdicts are keyed by the alert identity as ingested; anonymization
        # only shapes the token codes fed to the model.
        anonymized = anonymize_alert(alert, self.policy_)
        codes = tuple(
            self.vocab_.code_for(p.key, p.value, frozen=True)
            for p in anonymized.attributes
        )
        return EncodedAlert(alert.alert_key, codes, frozenset())

    def verdicts(self, X: Sequence[Alert]) -> list[NoiseVerdict]:
        check_is_fitted(self, "model_")
        noise = self.model_.noise_embedding()
        return [
            classify(self._encode(a), self.model_, noise, self.theta) for a in X
        ]

    def decision_function(self, X: Sequence[Alert]) -> np.ndarray:
        return np.array([v.score for v in self.verdicts(X)])

    def predict(self, X: Sequence[Alert]) -> np.ndarray:
        return np.array([v.is_noise for v in self.verdicts(X)])
