"""Policy dispatch and the deterministic refinement fallbacks."""

import numpy as np
import pytest

from guardian.alerts import Alert, AlertRule, AttributePair, Severity
from guardian.errors import CandidateRejectedError, PolicyInapplicableError
from guardian.refinery import (
    NoiseCluster,
    PatternKind,
    Policy,
    ReplayHorizon,
    parse_rule,
    propose,
    select_policy,
)
from guardian.refinery.expr import And, Comparison, SustainedFor, TimeOutside
from guardian.store import MetricSample
from guardian.summary import MockCompletionClient

ORIGIN = 1_700_000_000


def rule(expr="cpu > 0.4", rule_id="r1", for_minutes=0):
    return AlertRule(id=rule_id, name=rule_id, expr=expr,
                     for_duration_minutes=for_minutes)


def cluster(kind, members, rule_ids, period=None):
    return NoiseCluster(
        member_alert_keys=frozenset(members),
        kind=kind,
        descriptor="test",
        rule_ids=frozenset(rule_ids),
        period_minutes=period,
    )


def alert(rule_id, minute, instance="h1", duration=0, name=None):
    return Alert(
        rule_id=rule_id, fire_time=ORIGIN + minute * 60,
        duration_minutes=duration, severity=Severity.INFO,
        attributes=(AttributePair("alert", name or rule_id),
                    AttributePair("instance", instance)),
    )


class TestThresholdAdjustment:
    def horizon_with_history(self, values):
        samples = [
            MetricSample("cpu", {"instance": "h1"}, ORIGIN + i * 60, v)
            for i, v in enumerate(values)
        ]
        return ReplayHorizon(ORIGIN, ORIGIN + len(values) * 60, samples)

    def test_new_threshold_is_95th_percentile(self):
        # 21 samples with interpolation rank 0.95 * 20 = 19, so the 95th
        # percentile lands exactly on the crafted value 0.60.
        values = [0.6 * i / 19 for i in range(20)] + [0.9]
        horizon = self.horizon_with_history(values)
        c = cluster(PatternKind.PERSISTENT, {"k"}, {"r1"})
        draft = propose(rule("cpu > 0.4"), c, "", horizon)
        assert draft.policy is Policy.THRESHOLD_ADJUSTMENT
        new_expr = parse_rule(draft.after[0].expr)
        expected = float(np.percentile(values, 95))
        assert new_expr.threshold == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.6, abs=1e-9)
        assert "95th percentile" in draft.rationale

    def test_lower_bound_rule_uses_fifth_percentile(self):
        values = list(np.linspace(0.1, 1.0, 50))
        horizon = self.horizon_with_history(values)
        c = cluster(PatternKind.PERSISTENT, {"k"}, {"r1"})
        draft = propose(rule("cpu < 0.9"), c, "", horizon)
        assert parse_rule(draft.after[0].expr).threshold == pytest.approx(
            float(np.percentile(values, 5))
        )

    def test_escalation_reaches_beyond_maximum(self):
        values = [0.5] * 30
        horizon = self.horizon_with_history(values)
        c = cluster(PatternKind.PERSISTENT, {"k"}, {"r1"})
        from guardian.refinery.policies import Feedback

        feedback = tuple(Feedback("noise_ratio", "still noisy") for _ in range(3))
        draft = propose(rule("cpu > 0.4"), c, "", horizon, feedback=feedback)
        assert parse_rule(draft.after[0].expr).threshold > 0.5

    def test_no_history_is_policy_inapplicable(self):
        horizon = ReplayHorizon(ORIGIN, ORIGIN + 600, [])
        c = cluster(PatternKind.PERSISTENT, {"k"}, {"r1"})
        with pytest.raises(PolicyInapplicableError):
            propose(rule("cpu > 0.4"), c, "", horizon)


class TestTemporalAnalysis:
    def test_nightly_pattern_gets_time_window_around_phase(self):
        # Firings at 03:00 each day for a week.
        three_am = 3 * 60
        alerts = [
            alert("r1", day * 1440 + three_am - (ORIGIN // 60) % 1440)
            for day in range(1, 6)
        ]
        horizon = ReplayHorizon(ORIGIN, ORIGIN + 9 * 1440 * 60, alerts=alerts)
        keys = {a.alert_key for a in alerts}
        c = cluster(PatternKind.PERIODIC, keys, {"r1"}, period=1440)
        draft = propose(rule(), c, "", horizon)
        assert draft.policy is Policy.TEMPORAL_ANALYSIS
        tree = parse_rule(draft.after[0].expr)
        assert isinstance(tree, And)
        gate = tree.right
        assert isinstance(gate, TimeOutside)
        assert gate.start_minute == three_am - 5
        assert gate.end_minute == three_am + 5

    def test_short_period_uses_sustain_gate(self):
        alerts = [alert("r1", m) for m in range(0, 120, 15)]
        horizon = ReplayHorizon(ORIGIN, ORIGIN + 7200, alerts=alerts)
        keys = {a.alert_key for a in alerts}
        c = cluster(PatternKind.PERIODIC, keys, {"r1"}, period=15)
        draft = propose(rule(), c, "", horizon)
        tree = parse_rule(draft.after[0].expr)
        assert isinstance(tree, SustainedFor)
        assert tree.minutes == 5


class TestDeduplication:
    def overlapping_horizon(self):
        alerts = []
        for m in range(0, 50):
            alerts.append(alert("r1", m, name="PodNotReady"))
            alerts.append(alert("r2", m, name="PodNotRunning"))
        return ReplayHorizon(ORIGIN, ORIGIN + 3000, alerts=alerts), alerts

    def test_identical_firing_sets_deduplicate_keeping_first(self):
        horizon, alerts = self.overlapping_horizon()
        keys = {a.alert_key for a in alerts}
        c = cluster(PatternKind.SEMANTIC_CLUSTER, keys, {"r1", "r2"})
        rules = {"r1": rule(rule_id="r1"), "r2": rule(rule_id="r2")}
        draft = propose(rules["r1"], c, "", horizon, rule_set=rules)
        assert draft.policy is Policy.DEDUPLICATION
        assert [r.id for r in draft.after] == ["r1"]
        assert {r.id for r in draft.before} == {"r1", "r2"}
        assert "r2" in draft.rationale

    def test_low_overlap_falls_back_to_aggregation(self):
        alerts = [alert("r1", m, name="A") for m in range(40)]
        alerts += [alert("r2", m, name="B") for m in range(38, 60)]
        horizon = ReplayHorizon(ORIGIN, ORIGIN + 3600, alerts=alerts)
        keys = {a.alert_key for a in alerts}
        c = cluster(PatternKind.SEMANTIC_CLUSTER, keys, {"r1", "r2"})
        assert select_policy(c, horizon) is Policy.AGGREGATION


class TestAggregation:
    def test_varying_matcher_generalized_away(self):
        alerts = [alert("r1", m, instance=f"h{m % 4}") for m in range(12)]
        horizon = ReplayHorizon(ORIGIN, ORIGIN + 1200, alerts=alerts)
        keys = {a.alert_key for a in alerts}
        c = cluster(PatternKind.SEMANTIC_CLUSTER, keys, {"r1"})
        r = rule('cpu{instance="h0",zone="us"} > 0.4')
        draft = propose(r, c, "", horizon)
        assert draft.policy is Policy.AGGREGATION
        tree = parse_rule(draft.after[0].expr)
        assert isinstance(tree, Comparison)
        assert tree.matchers == (("zone", "us"),)

    def test_nothing_to_generalize_inapplicable(self):
        alerts = [alert("r1", m) for m in range(6)]
        horizon = ReplayHorizon(ORIGIN, ORIGIN + 600, alerts=alerts)
        keys = {a.alert_key for a in alerts}
        c = cluster(PatternKind.SEMANTIC_CLUSTER, keys, {"r1"})
        with pytest.raises(PolicyInapplicableError):
            propose(rule("cpu > 0.4"), c, "", horizon)


class TestBackendInterplay:
    def history(self):
        samples = [
            MetricSample("cpu", {"instance": "h1"}, ORIGIN + i * 60, 0.5)
            for i in range(30)
        ]
        return ReplayHorizon(ORIGIN, ORIGIN + 1800, samples)

    def test_mock_echoes_deterministic_baseline(self):
        c = cluster(PatternKind.PERSISTENT, {"k"}, {"r1"})
        with_client = propose(rule(), c, "", self.history(),
                              client=MockCompletionClient())
        without = propose(rule(), c, "", self.history())
        assert with_client.after[0].expr == without.after[0].expr
        assert with_client.rationale == without.rationale

    def test_backend_override_is_used(self):
        c = cluster(PatternKind.PERSISTENT, {"k"}, {"r1"})
        client = MockCompletionClient(responses=[
            "CANDIDATE: cpu > 0.75\nRATIONALE: operator guidance says 0.75"
        ])
        draft = propose(rule(), c, "", self.history(), client=client)
        assert draft.after[0].expr == "cpu > 0.75"
        assert "0.75" in draft.rationale

    def test_unstructured_completion_rejected(self):
        c = cluster(PatternKind.PERSISTENT, {"k"}, {"r1"})
        client = MockCompletionClient(responses=["I cannot help with that."])
        with pytest.raises(CandidateRejectedError):
            propose(rule(), c, "", self.history(), client=client)
