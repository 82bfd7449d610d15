"""Synthetic scenario generation: schedules, labels, determinism."""

import filecmp

import pytest

from guardian.errors import InvalidArgumentError
from guardian.synth import (
    IncidentSpec,
    PeriodicSpec,
    SyntheticScenario,
    default_scenario,
    generate,
    read_corpus,
    write_corpus,
)


def scenario(**overrides):
    base = dict(
        duration_minutes=100,
        n_rules=4,
        persistent_alert_rate=1,
        periodic_specs=(),
        incident_schedule=(),
        seed=7,
    )
    base.update(overrides)
    return SyntheticScenario(**base)


class TestSchedules:
    def test_persistent_stream_fires_every_minute(self):
        corpus = generate(scenario())
        assert len(corpus.alerts) == 100
        keys = {a.alert_key for a in corpus.alerts}
        assert len(keys) == 1

    def test_periodic_phase_arithmetic(self):
        corpus = generate(scenario(
            duration_minutes=181,
            persistent_alert_rate=0,
            periodic_specs=(PeriodicSpec(period_minutes=60, phase_minutes=3,
                                         duration_minutes=0),),
        ))
        minutes = sorted((a.fire_time - corpus.origin) // 60 for a in corpus.alerts)
        assert minutes == [3, 63, 123]

    def test_incident_labels_cover_only_incident_span(self):
        inc = IncidentSpec(start_minute=50, duration_minutes=5, critical_rule_ids=(0,))
        corpus = generate(scenario(incident_schedule=(inc,), n_rules=4))
        (label,) = corpus.labels
        critical_alerts = [
            a for a in corpus.alerts if a.alert_key in label.critical_alert_keys
        ]
        assert critical_alerts, "labeled identities must fire"
        for alert in critical_alerts:
            minute = (alert.fire_time - corpus.origin) // 60
            assert 50 <= minute < 55

    def test_critical_metric_series_spike_above_threshold(self):
        inc = IncidentSpec(start_minute=10, duration_minutes=3, critical_rule_ids=(0,))
        corpus = generate(scenario(incident_schedule=(inc,), n_rules=4))
        critical_rules = [r for r in corpus.rules if r.labels.get("kind") == "critical"]
        assert len(critical_rules) == 1
        rule = critical_rules[0]
        threshold = float(rule.expr.split(">")[1])
        metric = rule.expr.split(">")[0].strip()
        spikes = [
            s for s in corpus.metric_samples
            if s.metric == metric
            and 10 <= (s.timestamp - corpus.origin) // 60 < 13
        ]
        assert spikes and all(s.value > threshold for s in spikes)

    def test_incident_past_horizon_rejected(self):
        with pytest.raises(InvalidArgumentError):
            scenario(incident_schedule=(
                IncidentSpec(start_minute=99, duration_minutes=5,
                             critical_rule_ids=(0,)),
            ))


class TestDeterminism:
    def test_identical_seed_byte_identical_files(self, tmp_path):
        for name in ("a", "b"):
            write_corpus(generate(default_scenario(seed=3)), tmp_path / name)
        for filename in ("alerts.jsonl", "metrics.jsonl", "labels.jsonl",
                         "rules.json", "scenario.json"):
            assert filecmp.cmp(tmp_path / "a" / filename, tmp_path / "b" / filename,
                               shallow=False), filename

    def test_different_seed_changes_metrics(self, tmp_path):
        a = generate(default_scenario(seed=1))
        b = generate(default_scenario(seed=2))
        assert [s.value for s in a.metric_samples] != [s.value for s in b.metric_samples]

    def test_round_trip_through_files(self, tmp_path):
        corpus = generate(default_scenario(seed=5))
        write_corpus(corpus, tmp_path / "c")
        loaded = read_corpus(tmp_path / "c")
        assert [a.to_record() for a in loaded.alerts] == [
            a.to_record() for a in corpus.alerts
        ]
        assert loaded.critical_keys == corpus.critical_keys
        assert [r.to_record() for r in loaded.rules] == [
            r.to_record() for r in corpus.rules
        ]


class TestLabelSoundness:
    def test_every_labeled_identity_fires_in_its_incident(self):
        corpus = generate(default_scenario(seed=11))
        by_key = {}
        for alert in corpus.alerts:
            by_key.setdefault(alert.alert_key, []).append(
                (alert.fire_time - corpus.origin) // 60
            )
        for label, spec in zip(corpus.labels, corpus.scenario.incident_schedule):
            for key in label.critical_alert_keys:
                minutes = by_key.get(key, [])
                assert any(
                    spec.start_minute <= m < spec.start_minute + spec.duration_minutes
                    for m in minutes
                ), f"{label.incident_id} labels {key} but it never fired in span"
