"""Deterministic local text embedder: hashed bag-of-tokens, L2-normalized.

Keeps retrieval fully offline and reproducible; identical texts always embed
identically. An empty token stream yields the zero vector, whose cosine
against anything is defined as 0.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9_]+")

DEFAULT_DIMENSION = 256


def _bucket(token: str, dimension: int) -> int:
    digest = hashlib.sha1(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % dimension


def embed_text(text: str, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    vector = np.zeros(dimension)
    for token in _TOKEN_RE.findall(text.lower()):
        vector[_bucket(token, dimension)] += 1.0
    norm = np.linalg.norm(vector)
    if norm > 0:
        vector /= norm
    return vector


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)
