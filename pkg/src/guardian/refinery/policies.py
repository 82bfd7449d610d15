"""The four refinement policies and their deterministic fallbacks.

Policy dispatch follows the detected pattern: persistent noise adjusts the
threshold from the metric's trailing percentile, periodic noise gets a time
gate or a sustain requirement, and semantic clusters lead to deduplication
(near-identical firing sets across rules) or attribute generalization.

When a completion backend is present it is asked to confirm or adjust the
deterministic candidate and must supply the rationale; with no backend the
run is a pure function of its inputs. Failed iterations feed back in and
escalate the deterministic choice (higher percentile, wider silence window,
longer sustain).
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from ..alerts import AlertRule
from ..errors import CandidateRejectedError, PolicyInapplicableError
from ..summary.backends import BASELINE_BEGIN, BASELINE_END, CompletionClient
from .expr import And, Comparison, Or, RuleExpr, SustainedFor, TimeOutside, comparisons, render
from .parser import parse_rule
from .patterns import NoiseCluster, PatternKind
from .simulate import ReplayHorizon


class Policy(str, Enum):
    DEDUPLICATION = "deduplication"
    AGGREGATION = "aggregation"
    THRESHOLD_ADJUSTMENT = "threshold_adjustment"
    TEMPORAL_ANALYSIS = "temporal_analysis"


DEDUP_OVERLAP_THRESHOLD = 0.9
DAILY_PERIOD_MINUTES = 720  # periods at least this long use wall-clock gating

#: Escalation ladder for persistent-noise thresholds; None means "past max".
PERCENTILE_LADDER = (95.0, 99.0, 99.9, None)


@dataclass(frozen=True)
class ProposalDraft:
    policy: Policy
    before: tuple[AlertRule, ...]
    after: tuple[AlertRule, ...]
    rationale: str


@dataclass(frozen=True)
class Feedback:
    failed_condition: str
    detail: str

    def to_record(self) -> dict:
        return {"failed_condition": self.failed_condition, "detail": self.detail}


def _replace_first_threshold(expr: RuleExpr, new_threshold: float) -> RuleExpr:
    replaced = False

    def walk(node: RuleExpr) -> RuleExpr:
        nonlocal replaced
        if isinstance(node, Comparison) and not replaced:
            replaced = True
            return Comparison(
                metric=node.metric, op=node.op, threshold=new_threshold,
                matchers=node.matchers, agg=node.agg,
                range_minutes=node.range_minutes,
            )
        if isinstance(node, And):
            return And(walk(node.left), walk(node.right))
        if isinstance(node, Or):
            return Or(walk(node.left), walk(node.right))
        if isinstance(node, SustainedFor):
            return SustainedFor(walk(node.inner), node.minutes)
        return node

    return walk(expr)


def _metric_values(horizon: ReplayHorizon, comparison: Comparison) -> list[float]:
    values: list[float] = []
    for _, (ts_list, val_list) in horizon.series_for(
        comparison.metric, comparison.matchers
    ):
        values.extend(
            v for t, v in zip(ts_list, val_list) if horizon.start <= t < horizon.end
        )
    return values


def _threshold_adjustment(rule: AlertRule, horizon: ReplayHorizon,
                          attempt: int) -> tuple[RuleExpr, str]:
    expr = parse_rule(rule.expr)
    comps = comparisons(expr)
    if not comps:
        raise PolicyInapplicableError(f"rule {rule.id} has no threshold to adjust")
    target = comps[0]
    if target.op in ("==", "!="):
        raise PolicyInapplicableError("cannot adjust an equality comparison")
    values = _metric_values(horizon, target)
    if not values:
        raise PolicyInapplicableError(
            f"no recorded samples for metric {target.metric} in the horizon"
        )
    upper = target.op in (">", ">=")
    quantile = PERCENTILE_LADDER[min(attempt, len(PERCENTILE_LADDER) - 1)]
    if quantile is None:
        extreme = max(values) if upper else min(values)
        margin = 0.05 * abs(extreme) + 1e-9
        new_threshold = extreme + margin if upper else extreme - margin
        basis = "the maximum observed value plus a 5% margin" if upper else \
            "the minimum observed value minus a 5% margin"
    else:
        q = quantile if upper else 100.0 - quantile
        new_threshold = float(np.percentile(values, q))
        basis = f"the {q:g}th percentile of the trailing metric history"
    direction = "raised" if upper else "lowered"
    rationale = (
        f"Threshold {direction} to {new_threshold:.6g} based on {basis} "
        f"for {target.metric} ({len(values)} samples)"
    )
    return _replace_first_threshold(expr, new_threshold), rationale


def _member_fire_minutes(cluster: NoiseCluster, horizon: ReplayHorizon) -> list[int]:
    minutes = [
        a.fire_time // 60
        for a in horizon.alerts
        if a.alert_key in cluster.member_alert_keys
    ]
    if not minutes:
        raise PolicyInapplicableError(
            "no recorded firings for the cluster members in the horizon"
        )
    return sorted(minutes)


def _max_consecutive_run(cluster: NoiseCluster, horizon: ReplayHorizon) -> int:
    active: dict[str, set[int]] = {}
    for a in horizon.alerts:
        if a.alert_key in cluster.member_alert_keys:
            w = a.fire_time // 60
            active.setdefault(a.alert_key, set()).update(
                range(w, w + a.duration_minutes + 1)
            )
    best = 1
    for windows in active.values():
        ordered = sorted(windows)
        run = 1
        for prev, cur in zip(ordered, ordered[1:]):
            run = run + 1 if cur == prev + 1 else 1
            best = max(best, run)
    return best


def _temporal_analysis(rule: AlertRule, cluster: NoiseCluster,
                       horizon: ReplayHorizon, attempt: int) -> tuple[RuleExpr, str]:
    expr = parse_rule(rule.expr)
    period = cluster.period_minutes or 0
    if period >= DAILY_PERIOD_MINUTES:
        minutes = _member_fire_minutes(cluster, horizon)
        phase = int(statistics.median(m % 1440 for m in minutes))
        half_width = 5 + 5 * attempt
        start = (phase - half_width) % 1440
        end = (phase + half_width) % 1440
        gate = TimeOutside(start, end)
        rationale = (
            f"Silenced the recurring window around "
            f"{phase // 60:02d}:{phase % 60:02d} "
            f"(period {period} min) with a ±{half_width}-minute gate"
        )
        return And(expr, gate), rationale
    if attempt == 0:
        sustain = 5
    else:
        sustain = _max_consecutive_run(cluster, horizon) + attempt
    rationale = (
        f"Required the condition to sustain for {sustain} minutes to filter "
        f"spikes recurring every {period} minutes"
    )
    return SustainedFor(expr, sustain), rationale


def firing_overlap(rule_ids: Sequence[str], horizon: ReplayHorizon) -> float:
    """Jaccard overlap of the rules' fired minute sets within the horizon."""
    minute_sets = []
    for rule_id in rule_ids:
        minutes = {a.fire_time // 60 for a in horizon.alerts if a.rule_id == rule_id}
        minute_sets.append(minutes)
    union = set.union(*minute_sets) if minute_sets else set()
    intersection = set.intersection(*minute_sets) if minute_sets else set()
    return len(intersection) / len(union) if union else 0.0


def _generalized_expr(rule: AlertRule, cluster: NoiseCluster,
                      horizon: ReplayHorizon) -> tuple[RuleExpr, list[str]]:
    """Drop selector matchers whose values vary across cluster members."""
    member_attrs: dict[str, set[str]] = {}
    for a in horizon.alerts:
        if a.alert_key in cluster.member_alert_keys:
            for pair in a.attributes:
                member_attrs.setdefault(pair.key, set()).add(pair.value)
    varying = {k for k, vals in member_attrs.items() if len(vals) > 1}

    dropped: list[str] = []

    def walk(node: RuleExpr) -> RuleExpr:
        if isinstance(node, Comparison):
            kept = tuple((k, v) for k, v in node.matchers if k not in varying)
            dropped.extend(k for k, _ in node.matchers if k in varying)
            return Comparison(
                metric=node.metric, op=node.op, threshold=node.threshold,
                matchers=kept, agg=node.agg, range_minutes=node.range_minutes,
            )
        if isinstance(node, And):
            return And(walk(node.left), walk(node.right))
        if isinstance(node, Or):
            return Or(walk(node.left), walk(node.right))
        if isinstance(node, SustainedFor):
            return SustainedFor(walk(node.inner), node.minutes)
        return node

    return walk(parse_rule(rule.expr)), dropped


def _cluster_rules(cluster: NoiseCluster,
                   rule_set: Mapping[str, AlertRule]) -> list[AlertRule]:
    missing = [rid for rid in cluster.rule_ids if rid not in rule_set]
    if missing:
        raise PolicyInapplicableError(f"cluster references unknown rules: {missing}")
    return sorted((rule_set[rid] for rid in cluster.rule_ids), key=lambda r: r.id)


def select_policy(cluster: NoiseCluster, horizon: ReplayHorizon) -> Policy:
    if cluster.kind is PatternKind.PERSISTENT:
        return Policy.THRESHOLD_ADJUSTMENT
    if cluster.kind is PatternKind.PERIODIC:
        return Policy.TEMPORAL_ANALYSIS
    if (
        len(cluster.rule_ids) >= 2
        and firing_overlap(sorted(cluster.rule_ids), horizon) >= DEDUP_OVERLAP_THRESHOLD
    ):
        return Policy.DEDUPLICATION
    return Policy.AGGREGATION


def _deterministic_draft(
    rule: AlertRule,
    cluster: NoiseCluster,
    horizon: ReplayHorizon,
    rule_set: Mapping[str, AlertRule],
    attempt: int,
) -> ProposalDraft:
    policy = select_policy(cluster, horizon)

    if policy is Policy.THRESHOLD_ADJUSTMENT:
        new_expr, rationale = _threshold_adjustment(rule, horizon, attempt)
        after = _with_expr(rule, new_expr)
        return ProposalDraft(policy, (rule,), (after,), rationale)

    if policy is Policy.TEMPORAL_ANALYSIS:
        new_expr, rationale = _temporal_analysis(rule, cluster, horizon, attempt)
        after = _with_expr(rule, new_expr)
        return ProposalDraft(policy, (rule,), (after,), rationale)

    if policy is Policy.DEDUPLICATION:
        rules = _cluster_rules(cluster, rule_set)
        kept = rules[0]
        overlap = firing_overlap([r.id for r in rules], horizon)
        retired = ", ".join(r.id for r in rules[1:])
        rationale = (
            f"Rules {retired} duplicate {kept.id} with {overlap:.0%} firing "
            f"overlap; keeping {kept.id} and retiring the rest"
        )
        return ProposalDraft(policy, tuple(rules), (kept,), rationale)

    # Aggregation: generalize varying attributes; across rules, merge into one.
    rules = _cluster_rules(cluster, rule_set) if len(cluster.rule_ids) > 1 else [rule]
    generalized = []
    dropped_all: list[str] = []
    for r in rules:
        expr, dropped = _generalized_expr(r, cluster, horizon)
        generalized.append(expr)
        dropped_all.extend(dropped)
    merged = generalized[0]
    for expr in generalized[1:]:
        merged = Or(merged, expr)
    if len(rules) == 1 and not dropped_all:
        raise PolicyInapplicableError(
            f"rule {rule.id} has no varying attributes to generalize"
        )
    primary = rules[0]
    suffix = "_aggregated" if len(rules) > 1 else ""
    after = AlertRule(
        id=primary.id + suffix,
        name=primary.name + suffix,
        expr=render(merged),
        for_duration_minutes=primary.for_duration_minutes,
        eval_interval_seconds=primary.eval_interval_seconds,
        labels=dict(primary.labels),
        annotations=dict(primary.annotations),
    )
    detail = (
        f"generalized attributes {sorted(set(dropped_all))}" if dropped_all
        else f"merged {len(rules)} overlapping rules"
    )
    rationale = f"Consolidated {len(rules)} rule(s): {detail}"
    return ProposalDraft(policy, tuple(rules), (after,), rationale)


def _with_expr(rule: AlertRule, expr: RuleExpr) -> AlertRule:
    return AlertRule(
        id=rule.id,
        name=rule.name,
        expr=render(expr),
        for_duration_minutes=rule.for_duration_minutes,
        eval_interval_seconds=rule.eval_interval_seconds,
        labels=dict(rule.labels),
        annotations=dict(rule.annotations),
    )


def build_refine_prompt(
    rule: AlertRule,
    cluster: NoiseCluster,
    knowledge: str,
    draft: ProposalDraft,
    feedback: Sequence[Feedback],
) -> str:
    lines = [
        "You are refining a noisy alert rule. Keep the rule's intent,",
        "reduce noise, and never suppress critical alerts.",
        f"Rule {rule.id}: {rule.expr}",
        f"Detected pattern: {cluster.kind.value} ({cluster.descriptor})",
        f"Policy: {draft.policy.value}",
    ]
    if knowledge:
        lines.append(f"Knowledge: {knowledge}")
    for item in feedback:
        lines.append(f"Previous attempt failed {item.failed_condition}: {item.detail}")
    lines.extend([
        "Answer with exactly two lines:",
        "CANDIDATE: <rule expression>",
        "RATIONALE: <one sentence>",
        "If you cannot improve on it, return the baseline verbatim:",
        BASELINE_BEGIN,
        f"CANDIDATE: {draft.after[0].expr}",
        f"RATIONALE: {draft.rationale}",
        BASELINE_END,
    ])
    return "\n".join(lines)


def _parse_candidate_completion(completion: str) -> tuple[str, str]:
    candidate = None
    rationale = None
    for line in completion.splitlines():
        stripped = line.strip()
        if stripped.startswith("CANDIDATE:"):
            candidate = stripped[len("CANDIDATE:"):].strip()
        elif stripped.startswith("RATIONALE:"):
            rationale = stripped[len("RATIONALE:"):].strip()
    if not candidate or not rationale:
        raise CandidateRejectedError(
            "completion is missing CANDIDATE or RATIONALE lines",
            completion=completion,
        )
    return candidate, rationale


def propose(
    rule: AlertRule,
    cluster: NoiseCluster,
    knowledge: str,
    horizon: ReplayHorizon,
    client: CompletionClient | None = None,
    rule_set: Mapping[str, AlertRule] | None = None,
    feedback: Sequence[Feedback] = (),
) -> ProposalDraft:
    """One refinement candidate for the rule under the detected pattern.

    The deterministic fallback escalates with the attempt number (length of
    ``feedback``); a present backend may override the candidate expression
    and must supply the rationale.
    """
    rule_set = rule_set or {rule.id: rule}
    draft = _deterministic_draft(rule, cluster, horizon, rule_set, len(feedback))
    if client is None:
        return draft
    prompt = build_refine_prompt(rule, cluster, knowledge, draft, feedback)
    completion = client.complete(prompt)
    candidate_expr, rationale = _parse_candidate_completion(completion)
    template = draft.after[0]
    after = AlertRule(
        id=template.id,
        name=template.name,
        expr=candidate_expr,
        for_duration_minutes=template.for_duration_minutes,
        eval_interval_seconds=template.eval_interval_seconds,
        labels=dict(template.labels),
        annotations=dict(template.annotations),
    )
    return ProposalDraft(draft.policy, draft.before, (after,), rationale)
