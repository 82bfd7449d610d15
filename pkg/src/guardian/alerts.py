"""Domain types for alerts and rules, time windowing, and attribute anonymization.

Alerts are identified by their attribute set: ``alert_key`` is a stable digest
of the sorted (key, value) pairs, so two instances with the same attributes in
any order share one identity.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import InvalidArgumentError, RejectedInputError

WINDOW_SECONDS = 60

#: Reserved identity of the virtual noisy alert injected into every window.
NOISE_KEY = "__virtual_noise__"


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


@dataclass(frozen=True)
class AttributePair:
    key: str
    value: str

    def __post_init__(self):
        if not self.key:
            raise InvalidArgumentError("attribute key must be non-empty")


def attribute_digest(attributes: Iterable[AttributePair]) -> str:
    """Canonical identity for an attribute set, independent of input order."""
    canonical = sorted((a.key, a.value) for a in attributes)
    payload = json.dumps(canonical, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class Alert:
    """A fired alert instance."""

    rule_id: str
    fire_time: int
    duration_minutes: int
    severity: Severity
    attributes: tuple[AttributePair, ...]
    annotations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.duration_minutes < 0:
            raise InvalidArgumentError("duration_minutes must be non-negative")
        if not self.attributes:
            raise InvalidArgumentError("an alert needs at least one attribute")
        keys = [a.key for a in self.attributes]
        if len(keys) != len(set(keys)):
            raise InvalidArgumentError(f"duplicate attribute keys in alert: {keys}")

    @property
    def alert_key(self) -> str:
        return attribute_digest(self.attributes)

    def attribute_map(self) -> dict[str, str]:
        return {a.key: a.value for a in self.attributes}

    def with_attributes(self, attributes: Sequence[AttributePair]) -> "Alert":
        return Alert(
            rule_id=self.rule_id,
            fire_time=self.fire_time,
            duration_minutes=self.duration_minutes,
            severity=self.severity,
            attributes=tuple(attributes),
            annotations=dict(self.annotations),
        )

    def to_record(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "fire_time": self.fire_time,
            "duration_minutes": self.duration_minutes,
            "severity": self.severity.value,
            "attributes": {a.key: a.value for a in self.attributes},
            "annotations": dict(self.annotations),
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "Alert":
        try:
            attributes = tuple(
                AttributePair(str(k), str(v)) for k, v in record["attributes"].items()
            )
            return cls(
                rule_id=str(record["rule_id"]),
                fire_time=int(record["fire_time"]),
                duration_minutes=int(record["duration_minutes"]),
                severity=Severity(record["severity"]),
                attributes=attributes,
                annotations=dict(record.get("annotations", {})),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise RejectedInputError(f"bad alert record: {exc}") from exc


@dataclass(frozen=True)
class AlertRule:
    """A Prometheus-style rule: query expression, duration, and annotations."""

    id: str
    name: str
    expr: str
    for_duration_minutes: int = 0
    eval_interval_seconds: int = 60
    labels: Mapping[str, str] = field(default_factory=dict)
    annotations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.eval_interval_seconds <= 0:
            raise InvalidArgumentError("eval_interval_seconds must be positive")
        if self.for_duration_minutes < 0:
            raise InvalidArgumentError("for_duration_minutes must be non-negative")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "expr": self.expr,
            "for": self.for_duration_minutes,
            "labels": dict(self.labels),
            "annotations": dict(self.annotations),
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "AlertRule":
        return cls(
            id=str(record["id"]),
            name=str(record["name"]),
            expr=str(record["expr"]),
            for_duration_minutes=int(record.get("for", 0)),
            eval_interval_seconds=int(record.get("eval_interval_seconds", 60)),
            labels=dict(record.get("labels", {})),
            annotations=dict(record.get("annotations", {})),
        )


@dataclass(frozen=True)
class TimeWindow:
    """One 1-minute slot of the tiled time axis."""

    index: int
    start: int
    end: int

    def __post_init__(self):
        if self.end - self.start != WINDOW_SECONDS:
            raise InvalidArgumentError("a time window spans exactly 60 seconds")


@dataclass(frozen=True)
class IncidentLabel:
    incident_id: str
    critical_alert_keys: frozenset[str]
    root_cause_component: str = ""

    def __post_init__(self):
        if not self.critical_alert_keys:
            raise InvalidArgumentError("an incident labels at least one critical alert")

    def to_record(self) -> dict:
        return {
            "incident_id": self.incident_id,
            "critical_alert_keys": sorted(self.critical_alert_keys),
            "root_cause_component": self.root_cause_component,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "IncidentLabel":
        return cls(
            incident_id=str(record["incident_id"]),
            critical_alert_keys=frozenset(record["critical_alert_keys"]),
            root_cause_component=str(record.get("root_cause_component", "")),
        )


def window_for(timestamp: int, epoch_origin: int) -> TimeWindow:
    """The unique window containing ``timestamp``."""
    index = (timestamp - epoch_origin) // WINDOW_SECONDS
    start = epoch_origin + index * WINDOW_SECONDS
    return TimeWindow(index=index, start=start, end=start + WINDOW_SECONDS)


def assign_windows(alerts: Sequence[Alert], epoch_origin: int) -> list[frozenset[int]]:
    """Map each alert to the 1-minute windows in which it is active.

    An alert fired in window w with duration d is active in {w, ..., w + d}:
    the fire window plus d duplicates for the minutes it stays unresolved.
    """
    assignments = []
    for alert in alerts:
        if alert.fire_time < epoch_origin:
            raise RejectedInputError(
                f"alert {alert.alert_key} fired at {alert.fire_time}, "
                f"before the epoch origin {epoch_origin}"
            )
        base = (alert.fire_time - epoch_origin) // WINDOW_SECONDS
        assignments.append(frozenset(range(base, base + alert.duration_minutes + 1)))
    return assignments


@dataclass(frozen=True)
class AnonymizationPolicy:
    """Which attribute values get replaced by ANON_<KEY> placeholders.

    A key is anonymized when it is explicitly listed as an identifier or when
    its observed distinct-value count exceeds the cardinality threshold.
    """

    identifier_keys: frozenset[str] = frozenset()
    cardinality_threshold: int = 200
    value_counts: Mapping[str, int] = field(default_factory=dict)

    def should_anonymize(self, key: str) -> bool:
        if key in self.identifier_keys:
            return True
        return self.value_counts.get(key, 0) > self.cardinality_threshold

    @classmethod
    def from_corpus(
        cls,
        alerts: Iterable[Alert],
        identifier_keys: Iterable[str] = (),
        cardinality_threshold: int = 200,
    ) -> "AnonymizationPolicy":
        """Observe distinct-value counts per attribute key over a corpus."""
        seen: dict[str, set[str]] = {}
        for alert in alerts:
            for pair in alert.attributes:
                seen.setdefault(pair.key, set()).add(pair.value)
        return cls(
            identifier_keys=frozenset(identifier_keys),
            cardinality_threshold=cardinality_threshold,
            value_counts={k: len(v) for k, v in seen.items()},
        )


def anonymize(
    attributes: Sequence[AttributePair], policy: AnonymizationPolicy
) -> tuple[AttributePair, ...]:
    """Replace identifier-like values with ANON_<KEY>, preserving order."""
    out = []
    for pair in attributes:
        if policy.should_anonymize(pair.key):
            out.append(AttributePair(pair.key, "ANON_" + pair.key.upper()))
        else:
            out.append(pair)
    return tuple(out)


def anonymize_alert(alert: Alert, policy: AnonymizationPolicy) -> Alert:
    return alert.with_attributes(anonymize(alert.attributes, policy))
