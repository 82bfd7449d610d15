"""Synthetic alert-storm generator with ground-truth incident labels.

Reproduces the two noise classes (persistent streams firing every minute,
periodic streams firing on a phase/period schedule) plus incident-driven
critical alerts whose metric series spike above their rules' thresholds, so
denoising, summarization, and rule refinement are all exercisable offline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .alerts import Alert, AlertRule, AttributePair, IncidentLabel, Severity
from .errors import InvalidArgumentError
from .store import MetricSample


@dataclass(frozen=True)
class PeriodicSpec:
    period_minutes: int
    phase_minutes: int
    duration_minutes: int | None = None  # defaults to period - 2

    def resolved_duration(self) -> int:
        if self.duration_minutes is not None:
            return self.duration_minutes
        return max(0, self.period_minutes - 2)


@dataclass(frozen=True)
class IncidentSpec:
    start_minute: int
    duration_minutes: int
    critical_rule_ids: tuple[int, ...]


@dataclass(frozen=True)
class SyntheticScenario:
    duration_minutes: int = 120
    n_rules: int = 8
    persistent_alert_rate: int = 20  # persistent streams, one firing per minute
    periodic_specs: tuple[PeriodicSpec, ...] = ()
    incident_schedule: tuple[IncidentSpec, ...] = ()
    noise_fraction_target: float = 0.9
    seed: int = 0
    origin: int = 1_700_000_000

    def __post_init__(self):
        if self.duration_minutes <= 0 or self.n_rules <= 0:
            raise InvalidArgumentError("duration and rule count must be positive")
        if self.persistent_alert_rate < 0:
            raise InvalidArgumentError("persistent_alert_rate must be non-negative")
        for spec in self.periodic_specs:
            if spec.period_minutes < 1 or spec.phase_minutes < 0:
                raise InvalidArgumentError("bad periodic spec")
        for incident in self.incident_schedule:
            if incident.start_minute < 0 or incident.duration_minutes <= 0:
                raise InvalidArgumentError("bad incident spec")
            if incident.start_minute + incident.duration_minutes > self.duration_minutes:
                raise InvalidArgumentError("incident extends past the scenario horizon")

    def to_json(self) -> dict:
        return {
            "duration_minutes": self.duration_minutes,
            "n_rules": self.n_rules,
            "persistent_alert_rate": self.persistent_alert_rate,
            "periodic_specs": [
                {
                    "period_minutes": s.period_minutes,
                    "phase_minutes": s.phase_minutes,
                    "duration_minutes": s.duration_minutes,
                }
                for s in self.periodic_specs
            ],
            "incident_schedule": [
                {
                    "start_minute": i.start_minute,
                    "duration_minutes": i.duration_minutes,
                    "critical_rule_ids": list(i.critical_rule_ids),
                }
                for i in self.incident_schedule
            ],
            "noise_fraction_target": self.noise_fraction_target,
            "seed": self.seed,
            "origin": self.origin,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SyntheticScenario":
        return cls(
            duration_minutes=doc.get("duration_minutes", 120),
            n_rules=doc.get("n_rules", 8),
            persistent_alert_rate=doc.get("persistent_alert_rate", 20),
            periodic_specs=tuple(
                PeriodicSpec(
                    period_minutes=s["period_minutes"],
                    phase_minutes=s["phase_minutes"],
                    duration_minutes=s.get("duration_minutes"),
                )
                for s in doc.get("periodic_specs", [])
            ),
            incident_schedule=tuple(
                IncidentSpec(
                    start_minute=i["start_minute"],
                    duration_minutes=i["duration_minutes"],
                    critical_rule_ids=tuple(i["critical_rule_ids"]),
                )
                for i in doc.get("incident_schedule", [])
            ),
            noise_fraction_target=doc.get("noise_fraction_target", 0.9),
            seed=doc.get("seed", 0),
            origin=doc.get("origin", 1_700_000_000),
        )

    @classmethod
    def load(cls, path: str | Path) -> "SyntheticScenario":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


@dataclass
class GeneratedCorpus:
    scenario: SyntheticScenario
    rules: list[AlertRule]
    alerts: list[Alert]
    metric_samples: list[MetricSample]
    labels: list[IncidentLabel]
    critical_keys: set[str] = field(default_factory=set)

    @property
    def origin(self) -> int:
        return self.scenario.origin


def _rule(index: int, threshold: float, for_minutes: int, kind: str) -> AlertRule:
    return AlertRule(
        id=f"rule-{index:03d}",
        name=f"rule-{index:03d}",
        expr=f"metric_{index:03d} > {threshold!r}",
        for_duration_minutes=for_minutes,
        labels={"kind": kind},
        annotations={"summary": f"{kind} rule watching metric_{index:03d}"},
    )


def generate(scenario: SyntheticScenario) -> GeneratedCorpus:
    """Deterministic corpus for a scenario; identical seeds give identical data.

    Rules are assigned in order: periodic specs first (one rule each), then
    incident-critical rules, and persistent streams spread round-robin over
    the remainder. Metric series carry one ``instance`` label per stream so a
    rule replay reproduces exactly the generated alert identities.
    """
    rng = np.random.default_rng(scenario.seed)
    minutes = scenario.duration_minutes
    n_periodic = len(scenario.periodic_specs)
    critical_rule_ids = sorted(
        {rid for inc in scenario.incident_schedule for rid in inc.critical_rule_ids}
    )
    needed = n_periodic + len(critical_rule_ids)
    if scenario.n_rules < needed + (1 if scenario.persistent_alert_rate else 0):
        raise InvalidArgumentError(
            f"n_rules={scenario.n_rules} is too small: need at least "
            f"{needed + (1 if scenario.persistent_alert_rate else 0)}"
        )

    thresholds = [float(x) for x in np.round(0.4 + 0.2 * rng.random(scenario.n_rules), 3)]
    rules: list[AlertRule] = []
    periodic_rule_idx = list(range(n_periodic))
    critical_idx_set = set()
    for spec_pos, rule_idx in enumerate(periodic_rule_idx):
        spec = scenario.periodic_specs[spec_pos]
        rules.append(_rule(rule_idx, thresholds[rule_idx], spec.resolved_duration(),
                           "periodic"))
    # Incident rule ids index into the post-periodic block.
    critical_rule_map: dict[int, int] = {}
    next_idx = n_periodic
    for rid in critical_rule_ids:
        critical_rule_map[rid] = next_idx
        critical_idx_set.add(next_idx)
        rules.append(_rule(next_idx, thresholds[next_idx], 0, "critical"))
        next_idx += 1
    persistent_rule_idx = list(range(next_idx, scenario.n_rules))
    for idx in persistent_rule_idx:
        rules.append(_rule(idx, thresholds[idx], 0, "persistent"))

    by_idx = {int(r.id.split("-")[1]): r for r in rules}

    alerts: list[Alert] = []
    # (rule_idx, instance) -> set of minutes where the metric runs hot
    hot_minutes: dict[tuple[int, str], set[int]] = {}

    def add_alert(rule_idx: int, instance: str, minute: int, severity: Severity):
        rule = by_idx[rule_idx]
        alerts.append(Alert(
            rule_id=rule.id,
            fire_time=scenario.origin + minute * 60,
            duration_minutes=rule.for_duration_minutes,
            severity=severity,
            attributes=(
                AttributePair("alert", rule.name),
                AttributePair("instance", instance),
            ),
            annotations={"summary": rule.annotations.get("summary", "")},
        ))

    for j in range(scenario.persistent_alert_rate):
        rule_idx = persistent_rule_idx[j % len(persistent_rule_idx)]
        instance = f"host-{j:03d}"
        for minute in range(minutes):
            add_alert(rule_idx, instance, minute, Severity.INFO)
        hot_minutes.setdefault((rule_idx, instance), set()).update(range(minutes))

    for spec_pos, spec in enumerate(scenario.periodic_specs):
        rule_idx = periodic_rule_idx[spec_pos]
        instance = f"cron-{spec_pos:03d}"
        duration = spec.resolved_duration()
        minute = spec.phase_minutes
        series_hot = hot_minutes.setdefault((rule_idx, instance), set())
        while minute < minutes:
            add_alert(rule_idx, instance, minute, Severity.WARNING)
            series_hot.update(
                m for m in range(minute, minute + duration + 1) if m < minutes
            )
            minute += spec.period_minutes

    labels: list[IncidentLabel] = []
    critical_keys: set[str] = set()
    for inc_no, incident in enumerate(scenario.incident_schedule):
        incident_keys = set()
        for rid in incident.critical_rule_ids:
            rule_idx = critical_rule_map[rid]
            instance = f"svc-{rid:03d}"
            series_hot = hot_minutes.setdefault((rule_idx, instance), set())
            for minute in range(incident.start_minute,
                                incident.start_minute + incident.duration_minutes):
                add_alert(rule_idx, instance, minute, Severity.CRITICAL)
                series_hot.add(minute)
            incident_keys.add(alerts[-1].alert_key)
        labels.append(IncidentLabel(
            incident_id=f"incident-{inc_no:03d}",
            critical_alert_keys=frozenset(incident_keys),
            root_cause_component=f"svc-{min(incident.critical_rule_ids):03d}",
        ))
        critical_keys |= incident_keys

    # Metric samples: one series per (rule, instance) stream. Baselines sit
    # below threshold except for persistent streams, whose thresholds are the
    # misconfiguration the refinery is supposed to fix.
    samples: list[MetricSample] = []
    for (rule_idx, instance) in sorted(hot_minutes):
        threshold = float(thresholds[rule_idx])
        persistent = rule_idx in set(persistent_rule_idx)
        hot = hot_minutes[(rule_idx, instance)]
        base_level = threshold * (1.25 if persistent else 0.6)
        noise = rng.normal(0.0, 0.04 * threshold, size=minutes)
        for minute in range(minutes):
            if persistent:
                value = base_level + noise[minute]
            elif minute in hot:
                value = 2.2 * threshold + noise[minute]
            else:
                value = base_level + noise[minute]
            samples.append(MetricSample(
                metric=f"metric_{rule_idx:03d}",
                labels={"instance": instance},
                timestamp=scenario.origin + minute * 60,
                value=round(float(value), 6),
            ))

    alerts.sort(key=lambda a: (a.fire_time, a.rule_id, a.alert_key))
    samples.sort(key=lambda s: (s.timestamp, s.metric, tuple(sorted(s.labels.items()))))
    rules.sort(key=lambda r: r.id)
    return GeneratedCorpus(
        scenario=scenario,
        rules=rules,
        alerts=alerts,
        metric_samples=samples,
        labels=labels,
        critical_keys=critical_keys,
    )


def write_corpus(corpus: GeneratedCorpus, directory: str | Path) -> None:
    """Write the corpus as JSONL/JSON files under a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with (directory / "alerts.jsonl").open("w") as handle:
        for alert in corpus.alerts:
            handle.write(json.dumps(alert.to_record(), sort_keys=True) + "\n")
    with (directory / "metrics.jsonl").open("w") as handle:
        for sample in corpus.metric_samples:
            handle.write(json.dumps(sample.to_record(), sort_keys=True) + "\n")
    with (directory / "labels.jsonl").open("w") as handle:
        for label in corpus.labels:
            handle.write(json.dumps(label.to_record(), sort_keys=True) + "\n")
    (directory / "rules.json").write_text(
        json.dumps([r.to_record() for r in corpus.rules], indent=1, sort_keys=True)
    )
    corpus.scenario.save(directory / "scenario.json")


def read_corpus(directory: str | Path) -> GeneratedCorpus:
    directory = Path(directory)
    scenario = SyntheticScenario.load(directory / "scenario.json")
    alerts = [
        Alert.from_record(json.loads(line))
        for line in (directory / "alerts.jsonl").read_text().splitlines()
        if line.strip()
    ]
    samples = [
        MetricSample.from_record(json.loads(line))
        for line in (directory / "metrics.jsonl").read_text().splitlines()
        if line.strip()
    ]
    labels = [
        IncidentLabel.from_record(json.loads(line))
        for line in (directory / "labels.jsonl").read_text().splitlines()
        if line.strip()
    ]
    rules = [
        AlertRule.from_record(doc)
        for doc in json.loads((directory / "rules.json").read_text())
    ]
    critical = {key for label in labels for key in label.critical_alert_keys}
    return GeneratedCorpus(
        scenario=scenario, rules=rules, alerts=alerts,
        metric_samples=samples, labels=labels, critical_keys=critical,
    )


def default_scenario(seed: int = 0) -> SyntheticScenario:
    """The reference desk-scale storm: 20 persistent, 10 periodic, 3 incidents."""
    periodic = tuple(
        PeriodicSpec(period_minutes=10 + 2 * (i % 5), phase_minutes=i)
        for i in range(10)
    )
    incidents = (
        IncidentSpec(start_minute=25, duration_minutes=5, critical_rule_ids=(0, 1)),
        IncidentSpec(start_minute=60, duration_minutes=5, critical_rule_ids=(1, 2)),
        IncidentSpec(start_minute=95, duration_minutes=5, critical_rule_ids=(0, 2)),
    )
    return SyntheticScenario(
        duration_minutes=120,
        n_rules=18,
        persistent_alert_rate=20,
        periodic_specs=periodic,
        incident_schedule=incidents,
        seed=seed,
    )
