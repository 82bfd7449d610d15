"""Attribute-value tokenization: each distinct (key, value) pair gets one code.

Codes are assigned by first appearance in the corpus, starting at 1; code 0 is
reserved for pairs never seen during vocabulary construction.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .alerts import Alert, assign_windows
from .errors import InvalidArgumentError

UNK_CODE = 0

VOCABULARY_FORMAT_VERSION = 1


@dataclass
class TokenVocabulary:
    """Injective (key, value) -> code mapping in first-appearance order."""

    pair_to_code: dict[tuple[str, str], int] = field(default_factory=dict)
    next_code: int = 1
    unk_code: int = UNK_CODE

    def code_for(self, key: str, value: str, frozen: bool) -> int:
        pair = (key, value)
        code = self.pair_to_code.get(pair)
        if code is not None:
            return code
        if frozen:
            return self.unk_code
        code = self.next_code
        self.pair_to_code[pair] = code
        self.next_code += 1
        return code

    def __len__(self) -> int:
        return len(self.pair_to_code)

    def checksum(self) -> str:
        """Digest over the full mapping; pins a model to its vocabulary."""
        items = sorted((k, v, c) for (k, v), c in self.pair_to_code.items())
        payload = json.dumps(items, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_json(self) -> dict:
        return {
            "version": VOCABULARY_FORMAT_VERSION,
            "pairs": [[k, v, c] for (k, v), c in sorted(
                self.pair_to_code.items(), key=lambda item: item[1]
            )],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TokenVocabulary":
        if doc.get("version") != VOCABULARY_FORMAT_VERSION:
            raise InvalidArgumentError(
                f"unsupported vocabulary version: {doc.get('version')!r}"
            )
        vocab = cls()
        for key, value, code in doc["pairs"]:
            if code == UNK_CODE:
                raise InvalidArgumentError("code 0 is reserved for unknown pairs")
            vocab.pair_to_code[(key, value)] = int(code)
        vocab.next_code = max(vocab.pair_to_code.values(), default=0) + 1
        return vocab

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "TokenVocabulary":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class EncodedAlert:
    """Per-identity model input: token codes plus active window indices."""

    alert_key: str
    token_codes: tuple[int, ...]
    windows: frozenset[int]

    def __post_init__(self):
        if not self.token_codes:
            raise InvalidArgumentError("an encoded alert needs at least one token")


def encode(alert: Alert, vocab: TokenVocabulary, frozen: bool,
           windows: Iterable[int] = ()) -> EncodedAlert:
    """Encode one alert's attribute pairs, preserving attribute order.

    With ``frozen=False`` unseen pairs extend the vocabulary; with
    ``frozen=True`` they map to the reserved unknown code.
    """
    codes = tuple(vocab.code_for(p.key, p.value, frozen) for p in alert.attributes)
    return EncodedAlert(alert.alert_key, codes, frozenset(windows))


def encode_corpus(
    alerts: Sequence[Alert],
    epoch_origin: int,
    vocab: TokenVocabulary | None = None,
    frozen: bool = False,
) -> tuple[dict[str, EncodedAlert], TokenVocabulary]:
    """Encode a corpus and merge instances into per-identity encoded alerts.

    Window sets accumulate over every instance of the same alert_key; token
    codes are identical across instances by construction of the key.
    """
    if vocab is None:
        vocab = TokenVocabulary()
    window_sets = assign_windows(alerts, epoch_origin)
    merged: dict[str, tuple[tuple[int, ...], set[int]]] = {}
    for alert, windows in zip(alerts, window_sets):
        codes = tuple(vocab.code_for(p.key, p.value, frozen) for p in alert.attributes)
        key = alert.alert_key
        if key in merged:
            merged[key][1].update(windows)
        else:
            merged[key] = (codes, set(windows))
    encoded = {
        key: EncodedAlert(key, codes, frozenset(windows))
        for key, (codes, windows) in merged.items()
    }
    return encoded, vocab
