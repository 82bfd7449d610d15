"""Noise-pattern detection: density clustering plus periodicity heuristics.

Clustering groups noise alerts by one-hot attribute/rule features using
HDBSCAN semantics (no preset cluster count, outliers dropped). Periodicity
looks at each identity's inter-arrival intervals: a stable interval means a
periodic stream, near-total window occupancy means a persistent one.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from ..alerts import Alert
from ..errors import InvalidArgumentError
from .clustering import cluster_labels

PERIODIC_MIN_FIRINGS = 4
PERIODIC_INTERVAL_TOLERANCE = 0.10
PERIODIC_MATCH_FRACTION = 0.80
PERSISTENT_OCCUPANCY = 0.95


class PatternKind(str, Enum):
    SEMANTIC_CLUSTER = "semantic_cluster"
    PERSISTENT = "persistent"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class NoiseCluster:
    member_alert_keys: frozenset[str]
    kind: PatternKind
    descriptor: str
    rule_ids: frozenset[str]
    period_minutes: int | None = None

    def __post_init__(self):
        if not self.member_alert_keys:
            raise InvalidArgumentError("a noise cluster needs members")
        if self.kind is PatternKind.PERIODIC and (
            self.period_minutes is None or self.period_minutes < 2
        ):
            raise InvalidArgumentError("periodic patterns carry a period >= 2 minutes")

    def to_record(self) -> dict:
        return {
            "members": sorted(self.member_alert_keys),
            "kind": self.kind.value,
            "descriptor": self.descriptor,
            "rule_ids": sorted(self.rule_ids),
            "period_minutes": self.period_minutes,
        }


@dataclass(frozen=True)
class RefineConfig:
    window_minutes: int = 30
    noise_ratio_threshold: float = 0.05
    max_iterations: int = 30
    cluster_min_size: int = 3

    def __post_init__(self):
        if self.window_minutes <= 0:
            raise InvalidArgumentError("window_minutes must be positive")
        if not 0 < self.noise_ratio_threshold < 1:
            raise InvalidArgumentError("noise_ratio_threshold must lie in (0, 1)")
        if self.max_iterations <= 0 or self.cluster_min_size <= 0:
            raise InvalidArgumentError("iteration cap and cluster size must be positive")


def _identity_view(alerts: Iterable[Alert]):
    """Collapse instances into per-identity attribute sets and fire times."""
    attrs: dict[str, tuple] = {}
    fire_times: dict[str, list[int]] = {}
    durations: dict[str, int] = {}
    rules: dict[str, str] = {}
    for alert in alerts:
        key = alert.alert_key
        attrs.setdefault(key, alert.attributes)
        rules.setdefault(key, alert.rule_id)
        durations[key] = max(durations.get(key, 0), alert.duration_minutes)
        fire_times.setdefault(key, []).append(alert.fire_time)
    for times in fire_times.values():
        times.sort()
    return attrs, fire_times, durations, rules


def _semantic_clusters(attrs, rules, min_cluster_size) -> list[NoiseCluster]:
    keys = sorted(attrs)
    if len(keys) < min_cluster_size:
        return []
    features = sorted(
        {("rule", rules[k]) for k in keys}
        | {(p.key, p.value) for k in keys for p in attrs[k]}
    )
    index = {f: i for i, f in enumerate(features)}
    matrix = np.zeros((len(keys), len(features)))
    for row, key in enumerate(keys):
        matrix[row, index[("rule", rules[key])]] = 1.0
        for pair in attrs[key]:
            matrix[row, index[(pair.key, pair.value)]] = 1.0

    labels = cluster_labels(matrix, min_cluster_size)
    clusters = []
    for label in sorted(set(labels)):
        if label == -1:
            continue  # outliers are excluded
        members = [keys[i] for i in range(len(keys)) if labels[i] == label]
        shared = set.intersection(
            *({(p.key, p.value) for p in attrs[k]} for k in members)
        )
        descriptor = ", ".join(f"{k}={v}" for k, v in sorted(shared)) or "no shared attributes"
        clusters.append(NoiseCluster(
            member_alert_keys=frozenset(members),
            kind=PatternKind.SEMANTIC_CLUSTER,
            descriptor=descriptor,
            rule_ids=frozenset(rules[k] for k in members),
        ))
    return clusters


def _temporal_patterns(fire_times, durations, rules, attrs) -> list[NoiseCluster]:
    all_minutes = [t // 60 for times in fire_times.values() for t in times]
    if not all_minutes:
        return []
    horizon = max(all_minutes) - min(all_minutes) + 1
    first_minute = min(all_minutes)

    patterns = []
    for key in sorted(fire_times):
        minutes = sorted({t // 60 for t in fire_times[key]})
        active = set()
        for m in minutes:
            active.update(range(m, m + durations[key] + 1))
        active = {m for m in active if first_minute <= m < first_minute + horizon}
        occupancy = len(active) / horizon
        if len(minutes) >= PERIODIC_MIN_FIRINGS and occupancy >= PERSISTENT_OCCUPANCY:
            patterns.append(NoiseCluster(
                member_alert_keys=frozenset({key}),
                kind=PatternKind.PERSISTENT,
                descriptor=f"active in {len(active)}/{horizon} trailing windows",
                rule_ids=frozenset({rules[key]}),
            ))
            continue
        if len(minutes) < PERIODIC_MIN_FIRINGS:
            continue
        intervals = [b - a for a, b in zip(minutes, minutes[1:])]
        median = statistics.median(intervals)
        if median < 2:
            continue
        close = sum(
            1 for i in intervals
            if abs(i - median) <= PERIODIC_INTERVAL_TOLERANCE * median
        )
        if close / len(intervals) >= PERIODIC_MATCH_FRACTION:
            patterns.append(NoiseCluster(
                member_alert_keys=frozenset({key}),
                kind=PatternKind.PERIODIC,
                descriptor=f"fires about every {round(median)} minutes",
                rule_ids=frozenset({rules[key]}),
                period_minutes=round(median),
            ))
    return patterns


def detect_patterns(
    noise_alerts: Sequence[Alert],
    config: RefineConfig,
    history: Sequence[Alert] | None = None,
) -> list[NoiseCluster]:
    """Clusters and temporal patterns among the window's noise alerts.

    ``history`` supplies the trailing firings used for periodicity; it
    defaults to the window's alerts, but longer periods need a longer view.
    """
    if not noise_alerts:
        return []
    attrs, _, _, rules = _identity_view(noise_alerts)
    clusters = _semantic_clusters(attrs, rules, config.cluster_min_size)

    trailing = list(history) if history is not None else list(noise_alerts)
    window_keys = set(attrs)
    relevant = [a for a in trailing if a.alert_key in window_keys]
    h_attrs, h_times, h_durations, h_rules = _identity_view(relevant)
    clusters.extend(_temporal_patterns(h_times, h_durations, h_rules, h_attrs))
    return clusters
