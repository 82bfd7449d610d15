"""Per-alert retrieval, context fusion, and the actionability decision."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..alerts import Alert, AlertRule, Severity
from ..errors import (
    BackendUnavailableError,
    InvalidArgumentError,
    MalformedReportError,
    SummaryGenerationError,
)
from .backends import BASELINE_BEGIN, BASELINE_END, CompletionClient
from .embedder import embed_text
from .reports import (
    ActionabilityDecision,
    NonActionable,
    parse_report,
    render_report,
)
from .store import ScoredChunk, SystemContextCache, VectorStore


@dataclass(frozen=True)
class SummaryConfig:
    top_k: int = 5
    min_relevance: float = 0.2
    context_budget_chars: int = 4000
    cache_ttl_seconds: int = 300
    max_attempts: int = 3  # one call plus two retries on unparseable output


def build_query(alert: Alert, rule: AlertRule | None = None) -> str:
    parts = [rule.name if rule is not None else alert.rule_id]
    parts.extend(f"{p.key}={p.value}" for p in alert.attributes)
    parts.extend(str(v) for v in alert.annotations.values())
    return " ".join(parts)


def retrieve_per_alert(
    alert: Alert,
    store: VectorStore,
    top_k: int,
    rule: AlertRule | None = None,
) -> list[ScoredChunk]:
    """Top-k knowledge chunks for one alert's attribute/annotation query."""
    if len(store) == 0:
        return []
    query_vector = embed_text(build_query(alert, rule), store.dimension)
    return store.query(query_vector, top_k)


def fuse_context(
    chunks: Sequence[ScoredChunk],
    cache: SystemContextCache | None,
    min_relevance: float,
    budget_chars: int = 4000,
    now: int = 0,
) -> str:
    """Relevance-filtered chunk texts plus the cached summary, budget-bounded.

    The fresh cache comes first, then chunks by rank; once the budget is hit,
    lower-ranked parts are dropped whole (the very first part is truncated
    rather than returning nothing).
    """
    if not 0 <= min_relevance <= 1:
        raise InvalidArgumentError("min_relevance must lie in [0, 1]")
    parts: list[str] = []
    if cache is not None and cache.is_fresh(now):
        parts.append(f"[system_context] {cache.summary_text}")
    for scored in chunks:
        if scored.score >= min_relevance:
            parts.append(f"[{scored.chunk.source_kind.value}] {scored.chunk.text}")

    fused: list[str] = []
    used = 0
    for part in parts:
        cost = len(part) if not fused else len(part) + 2  # joiner
        if used + cost > budget_chars:
            if not fused:
                fused.append(part[:budget_chars])
            break
        fused.append(part)
        used += cost
    return "\n\n".join(fused)


_SEVERITY_ORDER = {Severity.CRITICAL: 0, Severity.WARNING: 1, Severity.INFO: 2}


def _baseline_answer(window_alerts: Sequence[Alert],
                     contexts: Mapping[str, str]) -> str:
    """A deterministic well-formed answer embedded in every prompt.

    The mock backend returns it verbatim; a real backend may improve on it.
    """
    ordered = sorted(
        window_alerts,
        key=lambda a: (_SEVERITY_ORDER[a.severity], a.alert_key),
    )
    listed = []
    for alert in ordered:
        if alert.alert_key not in listed:
            listed.append(alert.alert_key)
        if len(listed) == 5:
            break
    first = ordered[0]
    component = first.attribute_map().get("instance", first.rule_id)
    references = []
    for alert in ordered:
        context = contexts.get(alert.alert_key, "")
        for line in context.splitlines():
            if line.startswith("[") and "]" in line:
                references.append(line[1:line.index("]")])
    references = sorted(set(references)) or ["internal:system-context"]
    solution = first.annotations.get(
        "runbook",
        f"Inspect {component} and the firing rule {first.rule_id}; "
        f"correlate with recent deploys before mitigating.",
    )
    return render_report(
        alerts=listed,
        root_cause=f"{component} is the common component across the window's alerts",
        explanation=(
            f"{len(window_alerts)} alert(s) fired together in this window, "
            f"led by {first.rule_id} at severity {first.severity.value}."
        ),
        solution=solution,
        references=references[:5],
    )


def build_summary_prompt(window_alerts: Sequence[Alert],
                         contexts: Mapping[str, str]) -> str:
    lines = [
        "You are an SRE assistant triaging one minute of alerts.",
        "Think step by step about whether intervention is warranted, then",
        "answer ONLY in the delimited layout below. If no action is needed,",
        f"answer with a single line 'NON_ACTIONABLE: <reason>'.",
        "",
        "Required layout for actionable windows:",
        "ALERTS:",
        "- <alert key> (up to five, most relevant first)",
        "ROOT_CAUSE: <component>",
        "EXPLANATION: <why>",
        "SOLUTION: <remediation>",
        "REFERENCES:",
        "- <knowledge link>",
        "",
        "Alerts in this window:",
    ]
    for alert in window_alerts:
        attrs = ", ".join(f"{p.key}={p.value}" for p in alert.attributes)
        lines.append(
            f"- key={alert.alert_key} rule={alert.rule_id} severity="
            f"{alert.severity.value} fired_at={alert.fire_time} attrs=[{attrs}]"
        )
        context = contexts.get(alert.alert_key, "")
        if context:
            lines.append(f"  context: {context}")
    lines.append("")
    lines.append("If you cannot improve on it, return the baseline verbatim:")
    lines.append(BASELINE_BEGIN)
    lines.append(_baseline_answer(window_alerts, contexts))
    lines.append(BASELINE_END)
    return "\n".join(lines)


def decide_and_summarize(
    window_alerts: Sequence[Alert],
    contexts: Mapping[str, str],
    client: CompletionClient,
    max_attempts: int = 3,
) -> ActionabilityDecision:
    """One prompt covering the window's alerts; silent or a five-field report."""
    if not window_alerts:
        raise InvalidArgumentError("decide_and_summarize needs at least one alert")
    prompt = build_summary_prompt(window_alerts, contexts)
    completion = ""
    for attempt in range(max_attempts):
        try:
            completion = client.complete(prompt)
        except BackendUnavailableError:
            raise
        try:
            parsed = parse_report(completion)
        except MalformedReportError as exc:
            if attempt + 1 == max_attempts:
                raise SummaryGenerationError(
                    f"backend returned unparseable output after {max_attempts} "
                    f"attempts: {exc}",
                    completion=completion,
                ) from exc
            continue
        if isinstance(parsed.result, NonActionable):
            return ActionabilityDecision(
                actionable=False, reason=parsed.result.reason,
                warnings=parsed.warnings,
            )
        return ActionabilityDecision(
            actionable=True, reason="actionable", report=parsed.result,
            warnings=parsed.warnings,
        )
    raise SummaryGenerationError("no completion produced", completion=completion)


class SummaryPipeline:
    """Wires retrieval, fusion, and the decision for whole windows."""

    def __init__(
        self,
        store: VectorStore,
        client: CompletionClient,
        cache: SystemContextCache | None = None,
        config: SummaryConfig = SummaryConfig(),
        rules_by_id: Mapping[str, AlertRule] | None = None,
    ):
        self.store = store
        self.client = client
        self.cache = cache
        self.config = config
        self.rules_by_id = dict(rules_by_id or {})

    def summarize_window(
        self, window_alerts: Sequence[Alert], now: int = 0
    ) -> ActionabilityDecision:
        contexts = {}
        for alert in window_alerts:
            chunks = retrieve_per_alert(
                alert, self.store, self.config.top_k,
                rule=self.rules_by_id.get(alert.rule_id),
            )
            contexts[alert.alert_key] = fuse_context(
                chunks, self.cache, self.config.min_relevance,
                self.config.context_budget_chars, now,
            )
        return decide_and_summarize(
            window_alerts, contexts, self.client, self.config.max_attempts
        )
