"""The five-field report layout and its strict parser.

Answer blocks are delimited key-value sections; anything before the final
ALERTS:/NON_ACTIONABLE: marker is treated as reasoning and discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..errors import InvalidArgumentError, MalformedReportError

MAX_REPORT_ALERTS = 5
NON_ACTIONABLE_MARKER = "NON_ACTIONABLE:"

_SECTION_HEADERS = ("ALERTS:", "ROOT_CAUSE:", "EXPLANATION:", "SOLUTION:", "REFERENCES:")


@dataclass(frozen=True)
class SummaryReport:
    alerts: tuple[str, ...]
    root_cause: str
    explanation: str
    solution: str
    references: tuple[str, ...]

    def __post_init__(self):
        if not 1 <= len(self.alerts) <= MAX_REPORT_ALERTS:
            raise InvalidArgumentError(
                f"a report lists 1 to {MAX_REPORT_ALERTS} alerts, got {len(self.alerts)}"
            )
        for name in ("root_cause", "explanation", "solution"):
            if not getattr(self, name).strip():
                raise InvalidArgumentError(f"report field {name} must be non-empty")
        if not self.references:
            raise InvalidArgumentError("a report needs at least one reference")

    def to_record(self) -> dict:
        return {
            "alerts": list(self.alerts),
            "root_cause": self.root_cause,
            "explanation": self.explanation,
            "solution": self.solution,
            "references": list(self.references),
        }

    @classmethod
    def from_record(cls, record: dict) -> "SummaryReport":
        return cls(
            alerts=tuple(record["alerts"]),
            root_cause=record["root_cause"],
            explanation=record["explanation"],
            solution=record["solution"],
            references=tuple(record["references"]),
        )


@dataclass(frozen=True)
class NonActionable:
    reason: str


@dataclass(frozen=True)
class ActionabilityDecision:
    actionable: bool
    reason: str
    report: SummaryReport | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.actionable != (self.report is not None):
            raise InvalidArgumentError(
                "a decision carries a report exactly when it is actionable"
            )

    def to_record(self) -> dict:
        return {
            "actionable": self.actionable,
            "reason": self.reason,
            "report": self.report.to_record() if self.report else None,
            "warnings": list(self.warnings),
        }


def render_report(alerts: Sequence[str], root_cause: str, explanation: str,
                  solution: str, references: Sequence[str]) -> str:
    lines = ["ALERTS:"]
    lines.extend(f"- {a}" for a in alerts)
    lines.append(f"ROOT_CAUSE: {root_cause}")
    lines.append(f"EXPLANATION: {explanation}")
    lines.append(f"SOLUTION: {solution}")
    lines.append("REFERENCES:")
    lines.extend(f"- {r}" for r in references)
    return "\n".join(lines)


@dataclass(frozen=True)
class ParsedCompletion:
    result: SummaryReport | NonActionable
    warnings: tuple[str, ...] = ()


def _answer_block(completion: str) -> list[str]:
    """Drop chain-of-thought: keep from the last answer marker onward."""
    lines = completion.splitlines()
    start = 0
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped.startswith(NON_ACTIONABLE_MARKER) or stripped == "ALERTS:":
            start = i
    return [line.rstrip() for line in lines[start:]]


def parse_report(completion: str) -> ParsedCompletion:
    """Parse a completion into a report or the non-actionable marker.

    All five sections are required for an actionable result; a missing or
    empty one raises MalformedReportError naming the section. Alert lists
    longer than five are truncated in listed order with a warning.
    """
    lines = _answer_block(completion)
    for line in lines:
        stripped = line.strip()
        if stripped.startswith(NON_ACTIONABLE_MARKER):
            reason = stripped[len(NON_ACTIONABLE_MARKER):].strip() or "not actionable"
            return ParsedCompletion(NonActionable(reason))

    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in lines:
        stripped = line.strip()
        header = next((h for h in _SECTION_HEADERS if stripped.startswith(h)), None)
        if header is not None:
            current = header
            remainder = stripped[len(header):].strip()
            sections[current] = [remainder] if remainder else []
        elif current is not None and stripped:
            sections[current].append(stripped)

    for header in _SECTION_HEADERS:
        if header not in sections:
            raise MalformedReportError(header.rstrip(":"))

    def list_items(header: str) -> list[str]:
        items = [
            line[2:].strip() for line in sections[header] if line.startswith("- ")
        ]
        return [item for item in items if item]

    def text_of(header: str) -> str:
        text = " ".join(sections[header]).strip()
        if not text:
            raise MalformedReportError(header.rstrip(":"))
        return text

    alerts = list_items("ALERTS:")
    if not alerts:
        raise MalformedReportError("ALERTS")
    references = list_items("REFERENCES:")
    if not references:
        raise MalformedReportError("REFERENCES")

    warnings = ()
    if len(alerts) > MAX_REPORT_ALERTS:
        warnings = (
            f"completion listed {len(alerts)} alerts; keeping the first "
            f"{MAX_REPORT_ALERTS}",
        )
        alerts = alerts[:MAX_REPORT_ALERTS]

    report = SummaryReport(
        alerts=tuple(alerts),
        root_cause=text_of("ROOT_CAUSE:"),
        explanation=text_of("EXPLANATION:"),
        solution=text_of("SOLUTION:"),
        references=tuple(references),
    )
    return ParsedCompletion(report, warnings)
