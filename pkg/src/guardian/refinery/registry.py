"""Active rule set, proposal lifecycle, and the human decision step."""

from __future__ import annotations

import threading
import time
from typing import Iterable, Mapping

from ..alerts import AlertRule
from ..errors import InvalidArgumentError, InvalidStateError, NotFoundError
from ..store import EventStore
from .loop import ProposalStatus, RefinementProposal
from .simulate import ReplayHorizon, simulate

DECISIONS = ("accepted", "rejected")


class RuleRegistry:
    """Single-writer rule set with auditable accept/reject transitions.

    Accepting a proposal atomically swaps the superseded rules for the
    refined ones; when a replay horizon is attached, acceptance re-simulates
    first and refuses any candidate that would drop a critical alert.
    """

    def __init__(self, rules: Iterable[AlertRule] = (), store: EventStore | None = None):
        self._lock = threading.Lock()
        self.rules: dict[str, AlertRule] = {r.id: r for r in rules}
        self.proposals: dict[str, RefinementProposal] = {}
        self.store = store
        self._counter = 0
        self.horizon: ReplayHorizon | None = None
        self.critical: frozenset[str] = frozenset()
        if store is not None:
            self._replay_store()

    def _replay_store(self) -> None:
        for record in self.store.all("rules"):
            rule = AlertRule.from_record(record)
            self.rules[rule.id] = rule

    def attach_replay(self, horizon: ReplayHorizon, critical: Iterable[str]) -> None:
        self.horizon = horizon
        self.critical = frozenset(critical)

    def add_rules(self, rules: Iterable[AlertRule]) -> None:
        with self._lock:
            for rule in rules:
                self.rules[rule.id] = rule
            if self.store is not None:
                self.store.append_many("rules", [r.to_record() for r in rules])

    def register(self, proposal: RefinementProposal,
                 now: int | None = None) -> RefinementProposal:
        with self._lock:
            self._counter += 1
            proposal.id = f"prop-{self._counter:05d}"
            proposal.created_at = int(now if now is not None else time.time())
            self.proposals[proposal.id] = proposal
            if self.store is not None:
                self.store.append("proposals", proposal.to_record())
        return proposal

    def list_proposals(self, status: str | None = None) -> list[RefinementProposal]:
        with self._lock:
            items = sorted(self.proposals.values(), key=lambda p: p.id)
        if status is None:
            return items
        return [p for p in items if p.status.value == status]

    def get(self, proposal_id: str) -> RefinementProposal:
        with self._lock:
            proposal = self.proposals.get(proposal_id)
        if proposal is None:
            raise NotFoundError(f"no proposal with id {proposal_id}")
        return proposal

    def decide(self, proposal_id: str, decision: str, reviewer: str,
               now: int | None = None) -> RefinementProposal:
        """Apply a human decision; accepted proposals replace their rules."""
        if decision not in DECISIONS:
            raise InvalidArgumentError(
                f"decision must be one of {DECISIONS}, got {decision!r}"
            )
        timestamp = int(now if now is not None else time.time())
        with self._lock:
            proposal = self.proposals.get(proposal_id)
            if proposal is None:
                raise NotFoundError(f"no proposal with id {proposal_id}")
            if proposal.status is not ProposalStatus.PENDING:
                raise InvalidStateError(
                    f"proposal {proposal_id} is already {proposal.status.value}"
                )
            if decision == "accepted":
                if self.horizon is not None:
                    check = simulate(
                        proposal.after[0], self.horizon, self.critical,
                        before=list(proposal.before),
                    )
                    if not check.critical_preserved:
                        raise InvalidStateError(
                            f"acceptance re-simulation shows suppressed critical "
                            f"alerts: {sorted(check.missing_critical)}"
                        )
                for rule in proposal.before:
                    self.rules.pop(rule.id, None)
                for rule in proposal.after:
                    self.rules[rule.id] = rule
                proposal.status = ProposalStatus.ACCEPTED
            else:
                proposal.status = ProposalStatus.REJECTED
            proposal.decided_by = reviewer
            proposal.decided_at = timestamp
            if self.store is not None:
                self.store.append("audit", {
                    "proposal_id": proposal_id,
                    "decision": decision,
                    "reviewer": reviewer,
                    "timestamp": timestamp,
                })
                if decision == "accepted":
                    self.store.append_many(
                        "rules", [r.to_record() for r in proposal.after]
                    )
        return proposal

    def active_rules(self) -> Mapping[str, AlertRule]:
        with self._lock:
            return dict(self.rules)
