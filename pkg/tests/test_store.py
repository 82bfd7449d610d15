"""Event store persistence and range queries."""

import io
import json

import pytest

from guardian.errors import InputError, InvalidArgumentError
from guardian.store import EventStore, MetricSample, ingest_alerts

GOOD_ALERT = {
    "rule_id": "r1",
    "fire_time": 1000,
    "duration_minutes": 0,
    "severity": "warning",
    "attributes": {"alert": "X", "host": "h1"},
    "annotations": {},
}


@pytest.fixture
def store(tmp_path):
    return EventStore(tmp_path / "store")


class TestIngest:
    def test_three_valid_lines(self, store):
        lines = [json.dumps(GOOD_ALERT)] * 3
        report = ingest_alerts(io.StringIO("\n".join(lines)), store)
        assert report.ingested == 3
        assert report.rejected == []

    def test_malformed_line_reported_with_number(self, store):
        source = io.StringIO(json.dumps(GOOD_ALERT) + "\n{not json}\n")
        report = ingest_alerts(source, store)
        assert report.ingested == 1
        assert len(report.rejected) == 1
        assert report.rejected[0]["line"] == 2

    def test_empty_file_succeeds(self, store):
        report = ingest_alerts(io.StringIO(""), store)
        assert report.ingested == 0

    def test_unreadable_path_is_input_error(self, store, tmp_path):
        with pytest.raises(InputError):
            ingest_alerts(tmp_path / "missing.jsonl", store)

    def test_schema_violation_rejected(self, store):
        bad = dict(GOOD_ALERT, severity="apocalyptic")
        report = ingest_alerts(io.StringIO(json.dumps(bad)), store)
        assert report.ingested == 0
        assert report.rejected[0]["line"] == 1


class TestQueryRange:
    def fill(self, store):
        records = [dict(GOOD_ALERT, fire_time=t, rule_id=f"r{t % 2}")
                   for t in range(0, 600, 60)]
        store.append_many("alerts", records)
        return records

    def test_empty_range(self, store):
        self.fill(store)
        assert store.query_range("alerts", 100, 100) == []

    def test_full_range_returns_all(self, store):
        records = self.fill(store)
        out = store.query_range("alerts", 0, 10_000)
        assert len(out) == len(records)
        times = [r["fire_time"] for r in out]
        assert times == sorted(times)

    def test_filter_matches_linear_scan(self, store):
        records = self.fill(store)
        out = store.query_range("alerts", 0, 10_000, {"rule_id": "r1"})
        expected = [r for r in records if r["rule_id"] == "r1"]
        assert out == sorted(expected, key=lambda r: r["fire_time"])

    def test_half_open_interval(self, store):
        self.fill(store)
        out = store.query_range("alerts", 60, 120)
        assert [r["fire_time"] for r in out] == [60]

    def test_reversed_range_rejected(self, store):
        with pytest.raises(InvalidArgumentError):
            store.query_range("alerts", 100, 50)


class TestDurability:
    def test_reopen_preserves_records(self, tmp_path):
        path = tmp_path / "store"
        store = EventStore(path)
        store.append("alerts", GOOD_ALERT)
        reopened = EventStore(path)
        assert reopened.all("alerts") == [GOOD_ALERT]

    def test_metric_series_timestamps_must_increase(self, store):
        sample = MetricSample("cpu", {"i": "a"}, 100, 0.5)
        store.append("metrics", sample.to_record())
        with pytest.raises(InvalidArgumentError):
            store.append("metrics", MetricSample("cpu", {"i": "a"}, 100, 0.6).to_record())
        # a different series may reuse the timestamp
        store.append("metrics", MetricSample("cpu", {"i": "b"}, 100, 0.6).to_record())

    def test_unknown_kind_rejected(self, store):
        with pytest.raises(InvalidArgumentError):
            store.append("nonsense", {})
