"""The bounded propose -> validate -> simulate feedback loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from ..alerts import Alert, AlertRule
from ..errors import CandidateRejectedError, ParseError, PolicyInapplicableError
from ..summary.backends import CompletionClient
from .parser import parse_rule
from .expr import render
from .patterns import NoiseCluster, PatternKind, RefineConfig, detect_patterns
from .policies import Feedback, Policy, propose, select_policy
from .simulate import ReplayHorizon, SimulationResult, simulate


class ProposalStatus(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    ABANDONED = "abandoned"


@dataclass
class RefinementProposal:
    rule_id: str
    policy: Policy
    before: tuple[AlertRule, ...]
    after: tuple[AlertRule, ...]
    rationale: str
    simulation: SimulationResult | None
    iterations_used: int
    status: ProposalStatus
    failure_log: tuple[Feedback, ...] = ()
    id: str = ""
    created_at: int = 0
    decided_by: str = ""
    decided_at: int | None = None

    def rendered(self, rules: Sequence[AlertRule]) -> str:
        return "\n".join(
            f"{rule.name}: {render(parse_rule(rule.expr))}" for rule in rules
        )

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "rule_id": self.rule_id,
            "policy": self.policy.value,
            "status": self.status.value,
            "rationale": self.rationale,
            "iterations_used": self.iterations_used,
            "created_at": self.created_at,
            "before": [r.to_record() for r in self.before],
            "after": [r.to_record() for r in self.after],
            "before_text": self.rendered(self.before),
            "after_text": self.rendered(self.after),
            "simulation": self.simulation.to_record() if self.simulation else None,
            "failure_log": [f.to_record() for f in self.failure_log],
            "decided_by": self.decided_by,
            "decided_at": self.decided_at,
        }


@dataclass
class RefineContext:
    """Everything a refinement run reads: history, labels, knowledge, backend."""

    horizon: ReplayHorizon
    critical: frozenset[str]
    knowledge: str = ""
    client: CompletionClient | None = None
    rule_set: Mapping[str, AlertRule] = field(default_factory=dict)


_PRIORITY = {
    PatternKind.PERSISTENT: 1,
    PatternKind.PERIODIC: 2,
    PatternKind.SEMANTIC_CLUSTER: 3,
}


def select_cluster(
    clusters: Sequence[NoiseCluster], rule: AlertRule, horizon: ReplayHorizon
) -> NoiseCluster | None:
    """The rule's highest-priority cluster: cross-rule dedup first, then
    persistent, periodic, and finally within-rule semantic clusters."""
    mine = [c for c in clusters if rule.id in c.rule_ids]
    if not mine:
        return None

    def sort_key(cluster: NoiseCluster):
        is_dedup = (
            cluster.kind is PatternKind.SEMANTIC_CLUSTER
            and select_policy(cluster, horizon) is Policy.DEDUPLICATION
        )
        return (
            0 if is_dedup else _PRIORITY[cluster.kind],
            -len(cluster.member_alert_keys),
            sorted(cluster.member_alert_keys),
        )

    return min(mine, key=sort_key)


def run_feedback_loop(
    rule: AlertRule,
    clusters: Sequence[NoiseCluster],
    context: RefineContext,
    config: RefineConfig,
) -> RefinementProposal:
    """Iterate propose -> syntax check -> simulate until every stop condition
    holds: the candidate parses, critical alerts are preserved, and the noise
    ratio falls below the threshold. Each failure feeds a targeted message
    into the next proposal; hitting the iteration cap abandons the rule.
    """
    cluster = select_cluster(clusters, rule, context.horizon)
    if cluster is None:
        raise PolicyInapplicableError(f"no detected pattern involves rule {rule.id}")

    feedback: list[Feedback] = []
    last_draft = None
    for iteration in range(1, config.max_iterations + 1):
        try:
            draft = propose(
                rule, cluster, context.knowledge, context.horizon,
                client=context.client, rule_set=context.rule_set,
                feedback=tuple(feedback),
            )
        except CandidateRejectedError as exc:
            feedback.append(Feedback("syntax", str(exc)))
            continue
        last_draft = draft

        try:
            for candidate in draft.after:
                parse_rule(candidate.expr)
        except ParseError as exc:
            feedback.append(Feedback("syntax", str(exc)))
            continue

        simulation = simulate(
            draft.after[0], context.horizon, context.critical, before=list(draft.before)
        )
        if not simulation.critical_preserved:
            feedback.append(Feedback(
                "critical_preservation",
                f"candidate suppresses critical alerts: "
                f"{sorted(simulation.missing_critical)}",
            ))
            continue
        if simulation.noise_ratio_after >= config.noise_ratio_threshold:
            feedback.append(Feedback(
                "noise_ratio",
                f"noise ratio {simulation.noise_ratio_after:.3f} is not below "
                f"{config.noise_ratio_threshold}",
            ))
            continue
        return RefinementProposal(
            rule_id=rule.id,
            policy=draft.policy,
            before=draft.before,
            after=draft.after,
            rationale=draft.rationale,
            simulation=simulation,
            iterations_used=iteration,
            status=ProposalStatus.PENDING,
            failure_log=tuple(feedback),
        )

    policy = last_draft.policy if last_draft else select_policy(cluster, context.horizon)
    return RefinementProposal(
        rule_id=rule.id,
        policy=policy,
        before=(rule,),
        after=(rule,),  # the original rule stands
        rationale="abandoned after hitting the iteration cap",
        simulation=None,
        iterations_used=config.max_iterations,
        status=ProposalStatus.ABANDONED,
        failure_log=tuple(feedback),
    )


def refine_run(
    noise_alerts: Sequence[Alert],
    context: RefineContext,
    config: RefineConfig,
) -> list[RefinementProposal]:
    """Refine every rule with detected noise in the latest refine window.

    Pattern detection runs over the window's noise alerts with the full noise
    history as the trailing view; each involved rule gets one feedback loop.
    Cross-rule clusters are handled once, under their smallest rule id.
    """
    if not noise_alerts:
        return []
    window_start = context.horizon.end - config.window_minutes * 60
    window_noise = [a for a in noise_alerts if a.fire_time >= window_start]
    clusters = detect_patterns(window_noise, config, history=noise_alerts)

    handled: set[str] = set()
    proposals: list[RefinementProposal] = []
    for rule_id in sorted({rid for c in clusters for rid in c.rule_ids}):
        if rule_id in handled:
            continue
        rule = context.rule_set.get(rule_id)
        if rule is None:
            continue
        try:
            proposal = run_feedback_loop(rule, clusters, context, config)
        except PolicyInapplicableError:
            continue
        proposals.append(proposal)
        handled.add(rule_id)
        if proposal.policy is Policy.DEDUPLICATION:
            handled.update(r.id for r in proposal.before)
    return proposals
