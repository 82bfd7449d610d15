"""Abstract syntax for the rule-expression subset.

Supported productions: threshold comparisons over a metric selector (with an
optional avg/max/min/count aggregation over a trailing range), boolean and/or,
a wall-clock silence window, and a sustain requirement. Trees render to a
canonical normal form that reparses to an equal tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..errors import InvalidArgumentError

MAX_DEPTH = 32

COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")
AGGREGATIONS = ("avg", "max", "min", "count")


@dataclass(frozen=True)
class Comparison:
    metric: str
    op: str
    threshold: float
    matchers: tuple[tuple[str, str], ...] = ()
    agg: str | None = None
    range_minutes: int | None = None

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise InvalidArgumentError(f"unknown comparison operator {self.op!r}")
        if (self.agg is None) != (self.range_minutes is None):
            raise InvalidArgumentError("aggregation and range go together")
        if self.agg is not None:
            if self.agg not in AGGREGATIONS:
                raise InvalidArgumentError(f"unknown aggregation {self.agg!r}")
            if self.range_minutes < 1:
                raise InvalidArgumentError("range must cover at least 1 minute")
        for key, value in self.matchers:
            if '"' in value or "\\" in value:
                raise InvalidArgumentError("label values may not contain quotes")


@dataclass(frozen=True)
class And:
    left: "RuleExpr"
    right: "RuleExpr"


@dataclass(frozen=True)
class Or:
    left: "RuleExpr"
    right: "RuleExpr"


@dataclass(frozen=True)
class TimeOutside:
    """Condition passes only when wall-clock time is outside [start, end].

    Minutes since midnight; a window with start > end wraps past midnight.
    """

    start_minute: int
    end_minute: int

    def __post_init__(self):
        for m in (self.start_minute, self.end_minute):
            if not 0 <= m <= 23 * 60 + 59:
                raise InvalidArgumentError("silence window must use valid HH:MM times")

    def silences(self, minute_of_day: int) -> bool:
        if self.start_minute <= self.end_minute:
            return self.start_minute <= minute_of_day <= self.end_minute
        return minute_of_day >= self.start_minute or minute_of_day <= self.end_minute


@dataclass(frozen=True)
class SustainedFor:
    inner: "RuleExpr"
    minutes: int

    def __post_init__(self):
        if self.minutes < 1:
            raise InvalidArgumentError("sustain span must be at least 1 minute")


RuleExpr = Union[Comparison, And, Or, TimeOutside, SustainedFor]


def depth(expr: RuleExpr) -> int:
    if isinstance(expr, (And, Or)):
        return 1 + max(depth(expr.left), depth(expr.right))
    if isinstance(expr, SustainedFor):
        return 1 + depth(expr.inner)
    return 1


def check_depth(expr: RuleExpr) -> RuleExpr:
    if depth(expr) > MAX_DEPTH:
        raise InvalidArgumentError(f"expression deeper than {MAX_DEPTH} levels")
    return expr


def comparisons(expr: RuleExpr) -> list[Comparison]:
    """Every comparison leaf, left-to-right."""
    if isinstance(expr, Comparison):
        return [expr]
    if isinstance(expr, (And, Or)):
        return comparisons(expr.left) + comparisons(expr.right)
    if isinstance(expr, SustainedFor):
        return comparisons(expr.inner)
    return []


def _format_time(minute: int) -> str:
    return f"{minute // 60:02d}:{minute % 60:02d}"


def _render_selector(node: Comparison) -> str:
    series = node.metric
    if node.matchers:
        inner = ",".join(f'{k}="{v}"' for k, v in sorted(node.matchers))
        series += "{" + inner + "}"
    if node.agg is not None:
        return f"{node.agg}_over_time({series}[{node.range_minutes}m])"
    return series


def render(expr: RuleExpr) -> str:
    """Canonical normal form; ``parse(render(t))`` equals ``t``."""
    if isinstance(expr, Comparison):
        return f"{_render_selector(expr)} {expr.op} {expr.threshold!r}"
    if isinstance(expr, TimeOutside):
        return (
            f"time_outside({_format_time(expr.start_minute)}, "
            f"{_format_time(expr.end_minute)})"
        )
    if isinstance(expr, SustainedFor):
        return f"sustained_for({render(expr.inner)}, {expr.minutes}m)"
    if isinstance(expr, And):
        left = render(expr.left)
        if isinstance(expr.left, Or):
            left = f"({left})"
        right = render(expr.right)
        if isinstance(expr.right, (And, Or)):
            right = f"({right})"
        return f"{left} and {right}"
    if isinstance(expr, Or):
        left = render(expr.left)
        right = render(expr.right)
        if isinstance(expr.right, Or):
            right = f"({right})"
        return f"{left} or {right}"
    raise InvalidArgumentError(f"not a rule expression: {expr!r}")
