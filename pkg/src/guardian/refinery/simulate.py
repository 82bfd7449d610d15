"""Replay simulation: re-evaluate a candidate rule against recorded history.

Two modes, picked by data availability:

* metric replay — every comparison in the candidate is re-evaluated over the
  recorded metric samples at each evaluation instant;
* event replay — when samples are missing but the candidate keeps the original
  comparisons untouched, recorded alert firings are filtered through the
  candidate's attribute matchers and time/sustain gates instead.

A fired instance is one (evaluation instant, label set) pair in metric mode,
or one recorded firing that survives the gates in event mode. Identities are
derived exactly like generated alerts: {alert: rule name} plus series labels.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..alerts import Alert, AlertRule, AttributePair, attribute_digest
from ..errors import SimulationInputError
from ..store import MetricSample
from .expr import And, Comparison, Or, RuleExpr, SustainedFor, TimeOutside, comparisons
from .parser import parse_rule

STALENESS_SECONDS = 300

#: Marker for "every label set passes" (pure time gates select no series).
ALL = object()


@dataclass(frozen=True)
class SimulationResult:
    fired_before: int
    fired_after: int
    noise_ratio_after: float
    critical_preserved: bool
    missing_critical: frozenset[str]

    def to_record(self) -> dict:
        return {
            "fired_before": self.fired_before,
            "fired_after": self.fired_after,
            "noise_ratio_after": self.noise_ratio_after,
            "critical_preserved": self.critical_preserved,
            "missing_critical": sorted(self.missing_critical),
        }


class ReplayHorizon:
    """Recorded metric samples and alert events over [start, end)."""

    def __init__(
        self,
        start: int,
        end: int,
        metric_samples: Iterable[MetricSample] = (),
        alerts: Iterable[Alert] = (),
        step_seconds: int = 60,
    ):
        if end <= start:
            raise SimulationInputError("replay horizon must have positive length")
        self.start = start
        self.end = end
        self.step_seconds = step_seconds
        self.alerts = [a for a in alerts if start <= a.fire_time < end]
        self.series: dict[tuple, tuple[list[int], list[float]]] = {}
        self.metrics: set[str] = set()
        for sample in metric_samples:
            key = sample.series_key()
            ts_list, val_list = self.series.setdefault(key, ([], []))
            ts_list.append(sample.timestamp)
            val_list.append(sample.value)
            self.metrics.add(sample.metric)
        for ts_list, val_list in self.series.values():
            order = sorted(range(len(ts_list)), key=ts_list.__getitem__)
            ts_list[:] = [ts_list[i] for i in order]
            val_list[:] = [val_list[i] for i in order]

    def instants(self) -> range:
        return range(self.start, self.end, self.step_seconds)

    def series_for(self, metric: str, matchers: Sequence[tuple[str, str]]):
        out = []
        for (name, labels), data in self.series.items():
            if name != metric:
                continue
            label_map = dict(labels)
            if all(label_map.get(k) == v for k, v in matchers):
                out.append((dict(labels), data))
        return out


def _compare(value: float, op: str, threshold: float) -> bool:
    if op == "<":
        return value < threshold
    if op == "<=":
        return value <= threshold
    if op == ">":
        return value > threshold
    if op == ">=":
        return value >= threshold
    if op == "==":
        return value == threshold
    return value != threshold


def _comparison_value(node: Comparison, ts_list, val_list, t: int):
    if node.agg is None:
        idx = bisect.bisect_right(ts_list, t) - 1
        if idx < 0 or ts_list[idx] <= t - STALENESS_SECONDS:
            return None
        return val_list[idx]
    lo = bisect.bisect_right(ts_list, t - node.range_minutes * 60)
    hi = bisect.bisect_right(ts_list, t)
    window = val_list[lo:hi]
    if node.agg == "count":
        return float(len(window))
    if not window:
        return None
    if node.agg == "avg":
        return sum(window) / len(window)
    if node.agg == "max":
        return max(window)
    return min(window)


def _eval_metric(expr: RuleExpr, horizon: ReplayHorizon, t: int):
    """Label sets firing at instant t, or ALL for pure time gates."""
    if isinstance(expr, Comparison):
        fired = set()
        for labels, (ts_list, val_list) in horizon.series_for(expr.metric, expr.matchers):
            value = _comparison_value(expr, ts_list, val_list, t)
            if value is not None and _compare(value, expr.op, expr.threshold):
                fired.add(tuple(sorted(labels.items())))
        return fired
    if isinstance(expr, TimeOutside):
        minute_of_day = (t // 60) % 1440
        return set() if expr.silences(minute_of_day) else ALL
    if isinstance(expr, And):
        left = _eval_metric(expr.left, horizon, t)
        right = _eval_metric(expr.right, horizon, t)
        if left is ALL:
            return right
        if right is ALL:
            return left
        return left & right
    if isinstance(expr, Or):
        left = _eval_metric(expr.left, horizon, t)
        right = _eval_metric(expr.right, horizon, t)
        if left is ALL or right is ALL:
            return ALL
        return left | right
    if isinstance(expr, SustainedFor):
        spans = [
            _eval_metric(expr.inner, horizon, t - i * horizon.step_seconds)
            for i in range(expr.minutes)
        ]
        if any(span is ALL for span in spans):
            concrete = [span for span in spans if span is not ALL]
            if not concrete:
                return ALL
            spans = concrete
        out = spans[0]
        for span in spans[1:]:
            out = out & span
        return out
    raise SimulationInputError(f"cannot evaluate {expr!r}")


def _identity(rule_name: str, labels: Mapping[str, str] | tuple) -> str:
    if isinstance(labels, tuple):
        labels = dict(labels)
    pairs = [AttributePair("alert", rule_name)]
    pairs.extend(AttributePair(k, v) for k, v in sorted(labels.items()))
    return attribute_digest(pairs)


@dataclass
class _Firings:
    per_identity: dict[str, int] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return sum(self.per_identity.values())

    @property
    def identities(self) -> set[str]:
        return set(self.per_identity)

    def add(self, identity: str, n: int = 1) -> None:
        self.per_identity[identity] = self.per_identity.get(identity, 0) + n

    def merge(self, other: "_Firings") -> None:
        for identity, n in other.per_identity.items():
            self.add(identity, n)


def _replay_metric(rule: AlertRule, expr: RuleExpr, horizon: ReplayHorizon) -> _Firings:
    firings = _Firings()
    # The rule-level `for` duration demands the condition to hold at that many
    # prior instants too, matching a sustain gate around the expression.
    effective = (
        SustainedFor(expr, rule.for_duration_minutes + 1)
        if rule.for_duration_minutes > 0
        else expr
    )
    for t in horizon.instants():
        fired = _eval_metric(effective, horizon, t)
        if fired is ALL:
            continue  # a pure time gate selects no series, so nothing fires
        for labels in fired:
            firings.add(_identity(rule.name, labels))
    return firings


def _event_gates_ok(expr: RuleExpr, alert: Alert,
                    active_windows: dict[str, set[int]]) -> bool:
    if isinstance(expr, Comparison):
        attrs = alert.attribute_map()
        return all(attrs.get(k) == v for k, v in expr.matchers)
    if isinstance(expr, TimeOutside):
        return not expr.silences((alert.fire_time // 60) % 1440)
    if isinstance(expr, And):
        return _event_gates_ok(expr.left, alert, active_windows) and _event_gates_ok(
            expr.right, alert, active_windows
        )
    if isinstance(expr, Or):
        return _event_gates_ok(expr.left, alert, active_windows) or _event_gates_ok(
            expr.right, alert, active_windows
        )
    if isinstance(expr, SustainedFor):
        window = alert.fire_time // 60
        mine = active_windows.get(alert.alert_key, set())
        covered = all(window - i in mine for i in range(expr.minutes))
        return covered and _event_gates_ok(expr.inner, alert, active_windows)
    raise SimulationInputError(f"cannot replay {expr!r} over events")


def _replay_events(rules: Sequence[AlertRule], expr: RuleExpr | None,
                   horizon: ReplayHorizon) -> _Firings:
    rule_ids = {r.id for r in rules}
    events = [a for a in horizon.alerts if a.rule_id in rule_ids]
    active: dict[str, set[int]] = {}
    for alert in events:
        window = alert.fire_time // 60
        active.setdefault(alert.alert_key, set()).update(
            range(window, window + alert.duration_minutes + 1)
        )
    firings = _Firings()
    for alert in events:
        if expr is None or _event_gates_ok(expr, alert, active):
            firings.add(alert.alert_key)
    return firings


def _metrics_available(exprs: Iterable[RuleExpr], horizon: ReplayHorizon) -> bool:
    return all(
        comp.metric in horizon.metrics for expr in exprs for comp in comparisons(expr)
    )


def _comparisons_unchanged(candidate: RuleExpr, original: RuleExpr) -> bool:
    # Matchers are attribute predicates and replay fine over events; the
    # value comparison itself is what demands recorded samples.
    def cores(expr: RuleExpr):
        return {
            (c.metric, c.op, c.threshold, c.agg, c.range_minutes)
            for c in comparisons(expr)
        }

    return cores(candidate) <= cores(original)


def simulate(
    candidate: AlertRule,
    horizon: ReplayHorizon,
    critical: Iterable[str],
    before: AlertRule | Sequence[AlertRule] | None = None,
) -> SimulationResult:
    """Replay a candidate rule; critical coverage is judged against the alerts
    the original rule(s) fired within the horizon."""
    critical = set(critical)
    before_rules = (
        [candidate] if before is None
        else list(before) if isinstance(before, (list, tuple))
        else [before]
    )
    candidate_expr = parse_rule(candidate.expr)
    before_exprs = [parse_rule(r.expr) for r in before_rules]

    if _metrics_available([candidate_expr, *before_exprs], horizon):
        after = _replay_metric(candidate, candidate_expr, horizon)
        before_f = _Firings()
        for rule, expr in zip(before_rules, before_exprs):
            before_f.merge(_replay_metric(rule, expr, horizon))
    else:
        merged_before = None
        for expr in before_exprs:
            merged_before = expr if merged_before is None else Or(merged_before, expr)
        if not _comparisons_unchanged(candidate_expr, merged_before):
            missing = sorted(
                {c.metric for c in comparisons(candidate_expr)} - horizon.metrics
            )
            raise SimulationInputError(
                f"candidate changes comparisons but metrics {missing} have no "
                f"recorded samples in the horizon"
            )
        after = _replay_events(before_rules, candidate_expr, horizon)
        before_f = _replay_events(before_rules, None, horizon)

    required = critical & before_f.identities
    missing = required - after.identities
    total = after.count
    noise_instances = sum(
        n for identity, n in after.per_identity.items() if identity not in critical
    )
    noise_ratio = (noise_instances / total) if total else 0.0
    return SimulationResult(
        fired_before=before_f.count,
        fired_after=total,
        noise_ratio_after=noise_ratio,
        critical_preserved=not missing,
        missing_critical=frozenset(missing),
    )
