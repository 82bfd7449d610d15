"""Embedded append-only event store plus alert/metric ingestion.

One JSONL segment file per record kind inside a store directory; appends are
flushed and fsynced before the call returns, and an in-memory index serves
timestamp-range queries. No external database: a checkout is enough to run.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, IO, Iterable, Mapping

from .alerts import Alert
from .errors import InputError, InvalidArgumentError

KINDS = {
    "alerts": "fire_time",
    "metrics": "timestamp",
    "rules": None,
    "labels": None,
    "verdicts": "fire_time",
    "reports": "window_start",
    "proposals": "created_at",
    "audit": "timestamp",
}


@dataclass(frozen=True)
class MetricSample:
    metric: str
    labels: Mapping[str, str]
    timestamp: int
    value: float

    def series_key(self) -> tuple:
        return (self.metric, tuple(sorted(self.labels.items())))

    def to_record(self) -> dict:
        return {
            "metric": self.metric,
            "labels": dict(self.labels),
            "timestamp": self.timestamp,
            "value": self.value,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "MetricSample":
        return cls(
            metric=str(record["metric"]),
            labels=dict(record.get("labels", {})),
            timestamp=int(record["timestamp"]),
            value=float(record["value"]),
        )


@dataclass
class IngestReport:
    ingested: int = 0
    rejected: list[dict] = field(default_factory=list)


class EventStore:
    """Single-writer append log with concurrent snapshot reads."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[str, list[dict]] = {kind: [] for kind in KINDS}
        self._series_last_ts: dict[tuple, int] = {}
        self._load()

    def _path(self, kind: str) -> Path:
        return self.directory / f"{kind}.jsonl"

    def _load(self) -> None:
        for kind in KINDS:
            path = self._path(kind)
            if not path.exists():
                continue
            with path.open() as handle:
                for line in handle:
                    line = line.strip()
                    if line:
                        self._records[kind].append(json.loads(line))
        for record in self._records["metrics"]:
            sample = MetricSample.from_record(record)
            self._series_last_ts[sample.series_key()] = sample.timestamp

    def append(self, kind: str, record: dict) -> None:
        self.append_many(kind, [record])

    def append_many(self, kind: str, records: Iterable[dict]) -> int:
        if kind not in KINDS:
            raise InvalidArgumentError(f"unknown record kind: {kind}")
        records = list(records)
        if not records:
            return 0
        with self._lock:
            if kind == "metrics":
                for record in records:
                    sample = MetricSample.from_record(record)
                    last = self._series_last_ts.get(sample.series_key())
                    if last is not None and sample.timestamp <= last:
                        raise InvalidArgumentError(
                            f"timestamps within series {sample.series_key()} must "
                            f"be strictly increasing ({sample.timestamp} after {last})"
                        )
                    self._series_last_ts[sample.series_key()] = sample.timestamp
            with self._path(kind).open("a") as handle:
                for record in records:
                    handle.write(json.dumps(record, sort_keys=True) + "\n")
                handle.flush()
                os.fsync(handle.fileno())
            self._records[kind].extend(records)
        return len(records)

    def all(self, kind: str) -> list[dict]:
        if kind not in KINDS:
            raise InvalidArgumentError(f"unknown record kind: {kind}")
        with self._lock:
            return list(self._records[kind])

    def query_range(
        self,
        kind: str,
        start: int,
        end: int,
        filter: Mapping | Callable[[dict], bool] | None = None,
    ) -> list[dict]:
        """All and only items with timestamp in [start, end), ascending."""
        if start > end:
            raise InvalidArgumentError(f"start {start} is after end {end}")
        ts_field = KINDS.get(kind)
        if kind not in KINDS or ts_field is None:
            raise InvalidArgumentError(f"kind {kind!r} does not support range queries")
        if filter is None:
            predicate = lambda record: True
        elif callable(filter):
            predicate = filter
        else:
            predicate = lambda record: all(record.get(k) == v for k, v in filter.items())
        items = [
            record
            for record in self.all(kind)
            if start <= record[ts_field] < end and predicate(record)
        ]
        items.sort(key=lambda record: record[ts_field])
        return items


def ingest_alerts(source: str | Path | IO[str] | Iterable[str],
                  store: EventStore) -> IngestReport:
    """Ingest newline-delimited JSON alert records; bad lines are reported."""
    close_after = False
    if isinstance(source, (str, Path)):
        try:
            handle = open(source)
        except OSError as exc:
            raise InputError(f"cannot read alert source {source}: {exc}") from exc
        close_after = True
    else:
        handle = source

    report = IngestReport()
    valid: list[dict] = []
    try:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                alert = Alert.from_record(record)
            except Exception as exc:
                report.rejected.append({"line": line_no, "error": str(exc)})
                continue
            valid.append(alert.to_record())
    finally:
        if close_after:
            handle.close()
    report.ingested = store.append_many("alerts", valid)
    return report
