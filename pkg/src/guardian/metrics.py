"""Evaluation metrics: reduction ratio, critical-retention P/R/F1, accept rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class DenoiseEvaluation:
    n_initial: int
    n_retained: int
    reduction_ratio: float
    precision: float
    recall: float
    f1: float

    def to_record(self) -> dict:
        return {
            "n_initial": self.n_initial,
            "n_retained": self.n_retained,
            "reduction_ratio": self.reduction_ratio,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class AcceptRateRow:
    policy: str
    recommended: int
    accepted: int
    accept_rate: float

    def to_record(self) -> dict:
        return {
            "policy": self.policy,
            "recommended": self.recommended,
            "accepted": self.accepted,
            "accept_rate": self.accept_rate,
        }


def reduction_ratio(n_initial: int, n_retained: int) -> float:
    """(N - M) / N: the fraction of alerts filtered out."""
    if n_initial <= 0:
        raise InvalidArgumentError("n_initial must be positive")
    if not 0 <= n_retained <= n_initial:
        raise InvalidArgumentError(
            f"need 0 <= n_retained <= n_initial, got {n_retained} of {n_initial}"
        )
    return (n_initial - n_retained) / n_initial


def precision_recall_f1(
    retained: Iterable[str], critical: Iterable[str]
) -> tuple[float, float, float]:
    """Precision/recall of critical alerts among the retained set.

    F1 is the harmonic mean, defined as 0 when precision + recall = 0.
    """
    retained = set(retained)
    critical = set(critical)
    if not critical:
        raise InvalidArgumentError("the critical set must be non-empty")
    hits = len(retained & critical)
    precision = hits / len(retained) if retained else 0.0
    recall = hits / len(critical)
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def evaluate_denoise(
    n_initial: int, retained: Iterable[str], critical: Iterable[str]
) -> DenoiseEvaluation:
    retained = set(retained)
    p, r, f1 = precision_recall_f1(retained, critical)
    return DenoiseEvaluation(
        n_initial=n_initial,
        n_retained=len(retained),
        reduction_ratio=reduction_ratio(n_initial, len(retained)),
        precision=p,
        recall=r,
        f1=f1,
    )


def accept_rate_table(proposals: Sequence) -> list[AcceptRateRow]:
    """Per-policy accept-rate rows plus a trailing total row.

    ``recommended`` counts every proposal that reached review (any status but
    abandoned); ``accepted`` counts those approved.
    """
    counts: dict[str, list[int]] = {}
    for proposal in proposals:
        status = getattr(proposal, "status", None) or proposal["status"]
        policy = getattr(proposal, "policy", None) or proposal["policy"]
        status = getattr(status, "value", status)
        policy = getattr(policy, "value", policy)
        if status == "abandoned":
            continue
        row = counts.setdefault(policy, [0, 0])
        row[0] += 1
        if status == "accepted":
            row[1] += 1

    rows = []
    total_rec = 0
    total_acc = 0
    for policy in sorted(counts):
        rec, acc = counts[policy]
        total_rec += rec
        total_acc += acc
        rows.append(AcceptRateRow(policy, rec, acc, acc / rec if rec else 0.0))
    rows.append(AcceptRateRow(
        "total", total_rec, total_acc, total_acc / total_rec if total_rec else 0.0
    ))
    return rows


def render_accept_table(rows: Sequence[AcceptRateRow]) -> str:
    header = f"{'policy':<22}{'recommended':>12}{'accepted':>10}{'rate':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.policy:<22}{row.recommended:>12}{row.accepted:>10}"
            f"{row.accept_rate * 100:>7.1f}%"
        )
    return "\n".join(lines)
