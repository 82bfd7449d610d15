"""Co-occurrence statistics against a brute-force window-scan oracle."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guardian.alerts import NOISE_KEY
from guardian.cooccurrence import build_cooccurrence
from guardian.encoding import EncodedAlert
from guardian.errors import InvalidArgumentError


def enc(key, windows):
    return EncodedAlert(key, (1,), frozenset(windows))


def brute_force_pairs(encoded, tau):
    """Independent oracle: double loop over all windows and alert pairs."""
    active = {e.alert_key: set(e.windows) for e in encoded}
    active[NOISE_KEY] = set(range(tau))
    keys = sorted(active)
    pairs = {}
    for i, u in enumerate(keys):
        for v in keys[i + 1:]:
            k = 0
            c = 0
            for w in range(tau):
                in_u = w in active[u]
                in_v = w in active[v]
                if in_u and in_v:
                    k += 1
                if in_u or in_v:
                    c += 1
            if k > 0 or NOISE_KEY in (u, v):
                pairs[(u, v)] = (k, c)
    return pairs


class TestExamples:
    def test_partial_overlap(self):
        stats = build_cooccurrence([enc("u", {1, 2}), enc("v", {2})], tau=3)
        assert stats.counts("u", "v") == (1, 2)

    def test_noise_pair_counts(self):
        stats = build_cooccurrence([enc("u", {1, 2})], tau=3)
        assert stats.counts("u", NOISE_KEY) == (2, 3)

    def test_persistent_alert_saturates_noise_pair(self):
        stats = build_cooccurrence([enc("u", {0, 1, 2})], tau=3)
        assert stats.counts("u", NOISE_KEY) == (3, 3)

    def test_tau_must_be_positive(self):
        with pytest.raises(InvalidArgumentError):
            build_cooccurrence([], tau=0)

    def test_window_outside_tau_rejected(self):
        with pytest.raises(InvalidArgumentError):
            build_cooccurrence([enc("u", {5})], tau=3)

    def test_disjoint_real_pair_not_stored(self):
        stats = build_cooccurrence([enc("u", {0}), enc("v", {1})], tau=2)
        assert stats.counts("u", "v") is None
        assert stats.union_count("u", "v") == 2


class TestInvariants:
    def test_symmetry(self):
        stats = build_cooccurrence([enc("a", {0, 1}), enc("b", {1, 2})], tau=4)
        assert stats.counts("a", "b") == stats.counts("b", "a")

    def test_noise_completeness(self):
        encoded = [enc("a", {0}), enc("b", {1, 2}), enc("c", {3})]
        stats = build_cooccurrence(encoded, tau=5)
        for e in encoded:
            k, c = stats.counts(e.alert_key, NOISE_KEY)
            assert c == 5
            assert k == len(e.windows)

    def test_bounds_hold_for_all_pairs(self):
        encoded = [enc(f"a{i}", set(range(i, i + 3))) for i in range(6)]
        stats = build_cooccurrence(encoded, tau=10)
        for (u, v), (k, c) in stats.pair_counts.items():
            assert 0 <= k <= c <= stats.tau


@st.composite
def corpora(draw):
    tau = draw(st.integers(min_value=1, max_value=100))
    n_alerts = draw(st.integers(min_value=0, max_value=50))
    encoded = []
    for i in range(n_alerts):
        windows = draw(
            st.sets(st.integers(min_value=0, max_value=tau - 1), min_size=1, max_size=min(tau, 20))
        )
        encoded.append(enc(f"alert-{i:02d}", windows))
    return encoded, tau


@settings(max_examples=60, deadline=None)
@given(corpora())
def test_matches_brute_force_oracle(corpus):
    encoded, tau = corpus
    stats = build_cooccurrence(encoded, tau)
    assert stats.pair_counts == brute_force_pairs(encoded, tau)
