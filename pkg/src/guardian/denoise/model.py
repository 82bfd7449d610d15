"""Token-embedding model: a small self-attention stack with mean pooling.

Forward and backward passes are written out explicitly in numpy so gradients
are exact and auditable against finite differences. There are no positional
encodings: attribute sets are unordered and the pooled output must be
permutation invariant.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import InvalidArgumentError

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    embedding_dim: int = 64
    attention_heads: int = 4
    attention_layers: int = 1
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    epochs: int = 60
    batch_size: int | None = None  # None takes one Adam step per epoch pass
    probability_clamp_epsilon: float = 1e-6
    negative_sample_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.embedding_dim <= 0 or self.attention_heads <= 0:
            raise InvalidArgumentError("embedding_dim and attention_heads must be positive")
        if self.embedding_dim % self.attention_heads != 0:
            raise InvalidArgumentError(
                f"embedding_dim {self.embedding_dim} is not divisible by "
                f"attention_heads {self.attention_heads}"
            )
        if self.attention_layers <= 0:
            raise InvalidArgumentError("attention_layers must be positive")
        if self.learning_rate <= 0:
            raise InvalidArgumentError("learning_rate must be positive")
        if self.epochs <= 0:
            raise InvalidArgumentError("epochs must be positive")
        if self.batch_size is not None and self.batch_size <= 0:
            raise InvalidArgumentError("batch_size must be positive when set")
        if not 0 < self.probability_clamp_epsilon < 0.5:
            raise InvalidArgumentError("probability_clamp_epsilon must lie in (0, 0.5)")
        if self.negative_sample_ratio < 0:
            raise InvalidArgumentError("negative_sample_ratio must be non-negative")

    def to_json(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "attention_heads": self.attention_heads,
            "attention_layers": self.attention_layers,
            "learning_rate": self.learning_rate,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "probability_clamp_epsilon": self.probability_clamp_epsilon,
            "negative_sample_ratio": self.negative_sample_ratio,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TrainConfig":
        return cls(**doc)


@dataclass
class AttentionLayer:
    """Query/key/value/output projections of one self-attention layer."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray

    def matrices(self) -> list[np.ndarray]:
        return [self.wq, self.wk, self.wv, self.wo]


@dataclass
class EmbeddingModel:
    """Trained parameters plus the reserved noise-token code."""

    token_table: np.ndarray
    layers: list[AttentionLayer]
    config: TrainConfig
    noise_token_code: int
    vocab_checksum: str = ""
    version: int = MODEL_FORMAT_VERSION
    _noise_embedding: np.ndarray | None = field(default=None, repr=False)

    @property
    def vocab_size(self) -> int:
        return self.token_table.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.token_table.shape[1]

    def parameters(self) -> list[np.ndarray]:
        params = [self.token_table]
        for layer in self.layers:
            params.extend(layer.matrices())
        return params

    def parameter_checksum(self) -> str:
        digest = hashlib.sha256()
        for p in self.parameters():
            digest.update(np.ascontiguousarray(p, dtype=np.float64).tobytes())
        return digest.hexdigest()

    def noise_embedding(self) -> np.ndarray:
        if self._noise_embedding is None:
            self._noise_embedding = embed((self.noise_token_code,), self)
        return self._noise_embedding

    def invalidate_cache(self) -> None:
        self._noise_embedding = None


def init_model(
    vocab_size: int, config: TrainConfig, rng: np.random.Generator,
    noise_token_code: int | None = None,
) -> EmbeddingModel:
    dim = config.embedding_dim
    scale = 1.0 / np.sqrt(dim)
    # A shared positive component keeps initial pairwise cosines positive, so
    # raw scores start inside the clamp interval where gradients flow.
    table = rng.normal(0.0, scale, size=(vocab_size, dim)) + scale
    layers = [
        AttentionLayer(
            wq=rng.normal(0.0, scale, size=(dim, dim)),
            wk=rng.normal(0.0, scale, size=(dim, dim)),
            wv=rng.normal(0.0, scale, size=(dim, dim)),
            wo=rng.normal(0.0, scale, size=(dim, dim)),
        )
        for _ in range(config.attention_layers)
    ]
    if noise_token_code is None:
        noise_token_code = vocab_size - 1
    return EmbeddingModel(
        token_table=table, layers=layers, config=config,
        noise_token_code=noise_token_code,
    )


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    *lead, n, dim = x.shape
    dh = dim // heads
    return np.moveaxis(x.reshape(*lead, n, heads, dh), -2, -3)  # (..., H, n, dh)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    *lead, heads, n, dh = x.shape
    return np.moveaxis(x, -3, -2).reshape(*lead, n, heads * dh)


def _attention_forward(x: np.ndarray, layer: AttentionLayer, heads: int):
    """One multi-head self-attention layer over (..., n, dim) inputs."""
    dh = x.shape[-1] // heads
    q = x @ layer.wq
    k = x @ layer.wk
    v = x @ layer.wv
    qh, kh, vh = (_split_heads(m, heads) for m in (q, k, v))
    scores = qh @ kh.swapaxes(-1, -2) / np.sqrt(dh)  # (..., H, n, n)
    scores -= scores.max(axis=-1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=-1, keepdims=True)
    attended = weights @ vh  # (..., H, n, dh)
    merged = _merge_heads(attended)
    out = merged @ layer.wo
    cache = (x, qh, kh, vh, weights, merged)
    return out, cache


def _flat(x: np.ndarray) -> np.ndarray:
    return x.reshape(-1, x.shape[-1])


def _attention_backward(d_out: np.ndarray, layer: AttentionLayer, heads: int, cache):
    """Backward through one attention layer.

    Returns (d_x, d_wq, d_wk, d_wv, d_wo); weight gradients sum over any
    leading batch dimensions.
    """
    x, qh, kh, vh, weights, merged = cache
    dh = x.shape[-1] // heads
    scale = 1.0 / np.sqrt(dh)

    d_wo = _flat(merged).T @ _flat(d_out)
    d_merged = d_out @ layer.wo.T
    d_attended = _split_heads(d_merged, heads)  # (..., H, n, dh)

    d_weights = d_attended @ vh.swapaxes(-1, -2)  # (..., H, n, n)
    d_vh = weights.swapaxes(-1, -2) @ d_attended

    # Softmax backward, row-wise per head.
    inner = (d_weights * weights).sum(axis=-1, keepdims=True)
    d_scores = weights * (d_weights - inner)

    d_qh = d_scores @ kh * scale
    d_kh = d_scores.swapaxes(-1, -2) @ qh * scale

    d_q = _merge_heads(d_qh)
    d_k = _merge_heads(d_kh)
    d_v = _merge_heads(d_vh)

    d_wq = _flat(x).T @ _flat(d_q)
    d_wk = _flat(x).T @ _flat(d_k)
    d_wv = _flat(x).T @ _flat(d_v)
    d_x = d_q @ layer.wq.T + d_k @ layer.wk.T + d_v @ layer.wv.T
    return d_x, d_wq, d_wk, d_wv, d_wo


def _check_codes(tokens: Sequence[int], model: EmbeddingModel) -> None:
    for code in tokens:
        if not 0 <= code < model.vocab_size:
            raise InvalidArgumentError(
                f"token code {code} outside vocabulary of size {model.vocab_size}"
            )


def embed_forward(tokens: Sequence[int], model: EmbeddingModel):
    """Embed a token sequence, keeping caches for the backward pass."""
    if not tokens:
        raise InvalidArgumentError("cannot embed an empty token sequence")
    _check_codes(tokens, model)
    codes = np.asarray(tokens, dtype=np.intp)
    x = model.token_table[codes]
    caches = []
    for layer in model.layers:
        x, cache = _attention_forward(x, layer, model.config.attention_heads)
        caches.append(cache)
    h = x.mean(axis=0)
    return h, (codes, caches, x.shape[0])


def embed_backward(d_h: np.ndarray, model: EmbeddingModel, cache, grads: "ModelGrads"):
    """Accumulate gradients of a scalar loss through the embedding stack."""
    codes, layer_caches, n_tokens = cache
    d_x = np.tile(d_h / n_tokens, (n_tokens, 1))
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        d_x, d_wq, d_wk, d_wv, d_wo = _attention_backward(
            d_x, layer, model.config.attention_heads, layer_caches[idx]
        )
        grads.layers[idx][0] += d_wq
        grads.layers[idx][1] += d_wk
        grads.layers[idx][2] += d_wv
        grads.layers[idx][3] += d_wo
    np.add.at(grads.token_table, codes, d_x)


def embed(tokens: Sequence[int], model: EmbeddingModel) -> np.ndarray:
    """Mean of the final attention layer's token outputs."""
    h, _ = embed_forward(tokens, model)
    return h


def embed_many(sequences: Sequence[Sequence[int]], model: EmbeddingModel):
    """Embed many token sequences at once, batching equal lengths together.

    Returns (matrix of shape (len(sequences), dim), cache). Identical math to
    ``embed_forward`` per sequence, vectorized over leading batch dims.
    """
    if not sequences:
        raise InvalidArgumentError("embed_many needs at least one sequence")
    by_length: dict[int, list[int]] = {}
    for i, tokens in enumerate(sequences):
        if not tokens:
            raise InvalidArgumentError("cannot embed an empty token sequence")
        _check_codes(tokens, model)
        by_length.setdefault(len(tokens), []).append(i)

    out = np.zeros((len(sequences), model.embedding_dim))
    groups = []
    for length in sorted(by_length):
        indices = by_length[length]
        codes = np.asarray([sequences[i] for i in indices], dtype=np.intp)
        x = model.token_table[codes]  # (B, n, D)
        caches = []
        for layer in model.layers:
            x, cache = _attention_forward(x, layer, model.config.attention_heads)
            caches.append(cache)
        out[indices] = x.mean(axis=-2)
        groups.append((np.asarray(indices, dtype=np.intp), codes, caches, length))
    return out, groups


def embed_many_backward(d_h: np.ndarray, model: EmbeddingModel, groups,
                        grads: "ModelGrads") -> None:
    """Accumulate gradients for a batch produced by ``embed_many``."""
    for indices, codes, caches, length in groups:
        d_x = np.repeat(d_h[indices][:, None, :] / length, length, axis=1)
        for idx in range(len(model.layers) - 1, -1, -1):
            layer = model.layers[idx]
            d_x, d_wq, d_wk, d_wv, d_wo = _attention_backward(
                d_x, layer, model.config.attention_heads, caches[idx]
            )
            grads.layers[idx][0] += d_wq
            grads.layers[idx][1] += d_wk
            grads.layers[idx][2] += d_wv
            grads.layers[idx][3] += d_wo
        np.add.at(grads.token_table, codes, d_x)


class ModelGrads:
    """Gradient buffers matching the model's parameter list."""

    def __init__(self, model: EmbeddingModel):
        self.token_table = np.zeros_like(model.token_table)
        self.layers = [[np.zeros_like(m) for m in layer.matrices()] for layer in model.layers]

    def as_list(self) -> list[np.ndarray]:
        out = [self.token_table]
        for layer in self.layers:
            out.extend(layer)
        return out


def save_model(model: EmbeddingModel, path: str | Path) -> None:
    """Persist as a versioned JSON container with row-major float64 tensors."""
    doc = {
        "format_version": model.version,
        "config": model.config.to_json(),
        "vocab_checksum": model.vocab_checksum,
        "noise_token_code": model.noise_token_code,
        "token_table": model.token_table.tolist(),
        "layers": [
            {"wq": l.wq.tolist(), "wk": l.wk.tolist(),
             "wv": l.wv.tolist(), "wo": l.wo.tolist()}
            for l in model.layers
        ],
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path: str | Path) -> EmbeddingModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise InvalidArgumentError(
            f"unsupported model format version: {doc.get('format_version')!r}"
        )
    config = TrainConfig.from_json(doc["config"])
    layers = [
        AttentionLayer(
            wq=np.asarray(l["wq"], dtype=np.float64),
            wk=np.asarray(l["wk"], dtype=np.float64),
            wv=np.asarray(l["wv"], dtype=np.float64),
            wo=np.asarray(l["wo"], dtype=np.float64),
        )
        for l in doc["layers"]
    ]
    model = EmbeddingModel(
        token_table=np.asarray(doc["token_table"], dtype=np.float64),
        layers=layers,
        config=config,
        noise_token_code=int(doc["noise_token_code"]),
        vocab_checksum=doc.get("vocab_checksum", ""),
    )
    for p in model.parameters():
        if not np.all(np.isfinite(p)):
            raise InvalidArgumentError("model file contains non-finite parameters")
    return model
