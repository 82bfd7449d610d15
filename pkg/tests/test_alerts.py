"""Window assignment, anonymization, and alert identity."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from guardian.alerts import (
    Alert,
    AnonymizationPolicy,
    AttributePair,
    Severity,
    anonymize,
    assign_windows,
    window_for,
)
from guardian.errors import InvalidArgumentError, RejectedInputError

ORIGIN = 1_700_000_000


def make_alert(fire_time, duration=0, attrs=(("alert", "X"),), rule_id="r1"):
    return Alert(
        rule_id=rule_id,
        fire_time=fire_time,
        duration_minutes=duration,
        severity=Severity.WARNING,
        attributes=tuple(AttributePair(k, v) for k, v in attrs),
    )


class TestAssignWindows:
    def test_duration_duplicates_into_subsequent_windows(self):
        alert = make_alert(ORIGIN + 600, duration=5)
        [windows] = assign_windows([alert], ORIGIN)
        assert windows == frozenset({10, 11, 12, 13, 14, 15})

    def test_zero_duration_single_window(self):
        alert = make_alert(ORIGIN, duration=0)
        [windows] = assign_windows([alert], ORIGIN)
        assert windows == frozenset({0})

    def test_floor_boundary(self):
        [at_59] = assign_windows([make_alert(ORIGIN + 59)], ORIGIN)
        [at_60] = assign_windows([make_alert(ORIGIN + 60)], ORIGIN)
        assert at_59 == frozenset({0})
        assert at_60 == frozenset({1})

    def test_fire_before_origin_rejected_naming_alert(self):
        alert = make_alert(ORIGIN - 1)
        with pytest.raises(RejectedInputError, match=alert.alert_key):
            assign_windows([alert], ORIGIN)

    @given(
        offset=st.integers(min_value=0, max_value=10_000),
        duration=st.integers(min_value=0, max_value=30),
    )
    def test_window_count_is_duration_plus_one(self, offset, duration):
        alert = make_alert(ORIGIN + offset, duration=duration)
        [windows] = assign_windows([alert], ORIGIN)
        assert len(windows) == duration + 1

    @given(timestamp=st.integers(min_value=ORIGIN, max_value=ORIGIN + 100_000))
    def test_exactly_one_window_contains_any_timestamp(self, timestamp):
        window = window_for(timestamp, ORIGIN)
        assert window.start <= timestamp < window.end
        assert window.end - window.start == 60


class TestAnonymize:
    def test_listed_identifier_key_replaced(self):
        policy = AnonymizationPolicy(identifier_keys=frozenset({"pod_id"}))
        (out,) = anonymize((AttributePair("pod_id", "pod-12345"),), policy)
        assert out == AttributePair("pod_id", "ANON_POD_ID")

    def test_low_cardinality_key_untouched(self):
        policy = AnonymizationPolicy(
            cardinality_threshold=200, value_counts={"severity": 3}
        )
        (out,) = anonymize((AttributePair("severity", "critical"),), policy)
        assert out == AttributePair("severity", "critical")

    def test_cardinality_heuristic_fires_above_threshold(self):
        # 201 distinct observed values for "ip": the heuristic must engage
        # even though the key was never listed as an identifier.
        corpus = [
            make_alert(ORIGIN + i, attrs=(("alert", "X"), ("ip", f"10.0.0.{i}")))
            for i in range(201)
        ]
        policy = AnonymizationPolicy.from_corpus(corpus, cardinality_threshold=200)
        assert policy.value_counts["ip"] == 201
        (_, out) = anonymize(corpus[0].attributes, policy)
        assert out == AttributePair("ip", "ANON_IP")

    def test_exactly_at_threshold_untouched(self):
        policy = AnonymizationPolicy(cardinality_threshold=200, value_counts={"ip": 200})
        (out,) = anonymize((AttributePair("ip", "10.0.0.1"),), policy)
        assert out.value == "10.0.0.1"

    def test_order_preserved(self):
        policy = AnonymizationPolicy(identifier_keys=frozenset({"b"}))
        attrs = (AttributePair("a", "1"), AttributePair("b", "2"), AttributePair("c", "3"))
        out = anonymize(attrs, policy)
        assert [p.key for p in out] == ["a", "b", "c"]


class TestAlertIdentity:
    def test_key_independent_of_attribute_order(self):
        a = make_alert(ORIGIN, attrs=(("x", "1"), ("y", "2")))
        b = make_alert(ORIGIN, attrs=(("y", "2"), ("x", "1")))
        assert a.alert_key == b.alert_key

    def test_different_values_different_key(self):
        a = make_alert(ORIGIN, attrs=(("x", "1"),))
        b = make_alert(ORIGIN, attrs=(("x", "2"),))
        assert a.alert_key != b.alert_key

    def test_duplicate_attribute_keys_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_alert(ORIGIN, attrs=(("x", "1"), ("x", "2")))

    def test_empty_attribute_key_rejected(self):
        with pytest.raises(InvalidArgumentError):
            AttributePair("", "v")
