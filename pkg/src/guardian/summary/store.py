"""In-memory knowledge store with cosine retrieval and the context cache."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, InputError, InvalidArgumentError
from .embedder import DEFAULT_DIMENSION, cosine, embed_text


class SourceKind(str, Enum):
    SYSTEM_DOC = "system_doc"
    RULE_EXPLANATION = "rule_explanation"
    INCIDENT_TICKET = "incident_ticket"


@dataclass(frozen=True)
class KnowledgeChunk:
    id: str
    text: str
    source_kind: SourceKind
    embedding: tuple[float, ...]

    def __post_init__(self):
        if not self.text:
            raise InvalidArgumentError("knowledge chunks need non-empty text")


@dataclass(frozen=True)
class ScoredChunk:
    chunk: KnowledgeChunk
    score: float


class VectorStore:
    """Cosine-ranked chunk retrieval; concurrent reads, exclusive writes."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        self.dimension = dimension
        self._chunks: list[KnowledgeChunk] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._chunks)

    def add_text(self, chunk_id: str, text: str, source_kind: SourceKind) -> KnowledgeChunk:
        chunk = KnowledgeChunk(
            id=chunk_id,
            text=text,
            source_kind=SourceKind(source_kind),
            embedding=tuple(embed_text(text, self.dimension)),
        )
        self.add(chunk)
        return chunk

    def add(self, chunk: KnowledgeChunk) -> None:
        if len(chunk.embedding) != self.dimension:
            raise ConfigurationError(
                f"chunk {chunk.id} has dimension {len(chunk.embedding)}, "
                f"store expects {self.dimension}"
            )
        with self._lock:
            self._chunks.append(chunk)

    def query(self, vector: np.ndarray, top_k: int) -> list[ScoredChunk]:
        """At most top_k chunks by non-increasing cosine, ties by id ascending."""
        if len(vector) != self.dimension:
            raise ConfigurationError(
                f"query dimension {len(vector)} does not match store "
                f"dimension {self.dimension}"
            )
        if top_k <= 0:
            raise InvalidArgumentError("top_k must be positive")
        with self._lock:
            chunks = list(self._chunks)
        scored = [
            ScoredChunk(chunk, cosine(vector, np.asarray(chunk.embedding)))
            for chunk in chunks
        ]
        scored.sort(key=lambda s: (-s.score, s.chunk.id))
        return scored[:top_k]


@dataclass(frozen=True)
class SystemContextCache:
    """Operator-supplied system state summary with a freshness TTL."""

    summary_text: str
    generated_at: int
    ttl_seconds: int = 300

    def __post_init__(self):
        if self.ttl_seconds <= 0:
            raise InvalidArgumentError("ttl_seconds must be positive")

    def is_fresh(self, now: int) -> bool:
        return now - self.generated_at <= self.ttl_seconds


def load_knowledge_dir(directory: str | Path,
                       dimension: int = DEFAULT_DIMENSION) -> VectorStore:
    """Build a store from a directory of {id, text, source_kind} JSON files."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"knowledge directory {directory} does not exist")
    store = VectorStore(dimension)
    for path in sorted(directory.glob("*.json")):
        try:
            doc = json.loads(path.read_text())
            store.add_text(str(doc["id"]), str(doc["text"]), SourceKind(doc["source_kind"]))
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad knowledge file {path.name}: {exc}") from exc
    return store
