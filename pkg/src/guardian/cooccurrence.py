"""Pairwise co-occurrence statistics over 1-minute windows.

For an unordered alert pair (u, v): k counts the windows where both are
active, c counts the windows where at least one is (k/c is the empirical
co-firing rate). A virtual noisy alert, active in every window, is paired with
each real alert so persistent noise shows up as k/c near 1 against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

from .alerts import NOISE_KEY
from .encoding import EncodedAlert
from .errors import InvalidArgumentError


def _pair(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


@dataclass
class CooccurrenceStats:
    """Symmetric (k, c) counts keyed by unordered alert-identity pairs."""

    tau: int
    active_windows: dict[str, frozenset[int]] = field(default_factory=dict)
    pair_counts: dict[tuple[str, str], tuple[int, int]] = field(default_factory=dict)
    noise_key: str = NOISE_KEY

    def counts(self, u: str, v: str) -> tuple[int, int] | None:
        return self.pair_counts.get(_pair(u, v))

    def real_keys(self) -> list[str]:
        return sorted(k for k in self.active_windows if k != self.noise_key)

    def union_count(self, u: str, v: str) -> int:
        return len(self.active_windows[u] | self.active_windows[v])


def build_cooccurrence(
    encoded: Iterable[EncodedAlert] | Mapping[str, EncodedAlert], tau: int
) -> CooccurrenceStats:
    """Aggregate per-window co-occurrence into (k, c) pair statistics.

    Stored pairs are those with k > 0 plus every (real alert, noise) pair;
    real pairs that never co-fire are omitted but remain sampleable as
    negatives via ``union_count``.
    """
    if tau <= 0:
        raise InvalidArgumentError(f"tau must be positive, got {tau}")
    if isinstance(encoded, Mapping):
        encoded = list(encoded.values())
    else:
        encoded = list(encoded)

    active: dict[str, frozenset[int]] = {}
    for alert in encoded:
        if alert.alert_key == NOISE_KEY:
            raise InvalidArgumentError("the virtual noise key is reserved")
        bad = [w for w in alert.windows if w >= tau or w < 0]
        if bad:
            raise InvalidArgumentError(
                f"alert {alert.alert_key} has window indices {sorted(bad)} "
                f"outside [0, {tau})"
            )
        active[alert.alert_key] = alert.windows

    stats = CooccurrenceStats(tau=tau)
    stats.active_windows = dict(active)
    stats.active_windows[NOISE_KEY] = frozenset(range(tau))

    by_window: dict[int, list[str]] = {}
    for key, windows in active.items():
        for w in windows:
            by_window.setdefault(w, []).append(key)

    intersections: dict[tuple[str, str], int] = {}
    for members in by_window.values():
        for u, v in combinations(sorted(members), 2):
            intersections[(u, v)] = intersections.get((u, v), 0) + 1

    for (u, v), k in intersections.items():
        c = len(active[u] | active[v])
        stats.pair_counts[(u, v)] = (k, c)

    # The noise node is active everywhere: k = |windows(u)|, c = tau.
    for key, windows in active.items():
        stats.pair_counts[_pair(key, NOISE_KEY)] = (len(windows), tau)

    return stats
