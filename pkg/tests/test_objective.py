"""Squared cosine distance, binomial loss, and their analytic forms."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from guardian.denoise import PairSample, clamp_probability, pair_loss, similarity
from guardian.errors import DegenerateEmbeddingError, InvalidArgumentError


class TestSimilarity:
    def test_identical_vectors_zero_distance(self):
        h = np.array([0.3, -0.7, 1.1])
        assert similarity(h, h) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_vectors_distance_one(self):
        assert similarity(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(1.0)

    def test_antiparallel_vectors_distance_four_then_clamped(self):
        h = np.array([1.0, 2.0])
        raw = similarity(h, -h)
        assert raw == pytest.approx(4.0)
        assert clamp_probability(raw, 1e-6) == pytest.approx(1.0 - 1e-6)

    def test_zero_norm_raises(self):
        with pytest.raises(DegenerateEmbeddingError):
            similarity(np.zeros(3), np.array([1.0, 0.0, 0.0]))

    @given(
        scale=st.floats(min_value=1e-3, max_value=1e3),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_scale_invariance(self, scale, seed):
        rng = np.random.default_rng(seed)
        u, v = rng.normal(size=4), rng.normal(size=4)
        assert similarity(scale * u, v) == pytest.approx(similarity(u, v), rel=1e-9)


class TestPairLoss:
    def test_all_successes(self):
        # C(3,3) = 1 so the loss is -3 log 0.9.
        loss = pair_loss(PairSample((1,), (2,), 3, 3), 0.9)
        assert loss == pytest.approx(-3 * math.log(0.9))
        assert loss == pytest.approx(0.3161, abs=5e-5)

    def test_one_of_two(self):
        loss = pair_loss(PairSample((1,), (2,), 1, 2), 0.5)
        assert loss == pytest.approx(math.log(2))

    def test_p_out_of_domain_rejected(self):
        sample = PairSample((1,), (2,), 1, 2)
        for bad in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(InvalidArgumentError):
                pair_loss(sample, bad)

    def test_minimized_at_empirical_rate(self):
        # Binomial MLE: for (k, c) = (7, 10) the loss is minimal at p = 0.7.
        sample = PairSample((1,), (2,), 7, 10)
        grid = np.linspace(0.01, 0.99, 981)
        losses = [pair_loss(sample, p) for p in grid]
        assert grid[int(np.argmin(losses))] == pytest.approx(0.7, abs=1e-3)

    def test_direct_gradient_descent_on_p_converges_to_k_over_c(self):
        from guardian.denoise import pair_loss_grad_p

        sample = PairSample((1,), (2,), 7, 10)
        p = 0.2
        for _ in range(5000):
            p -= 1e-3 * pair_loss_grad_p(sample, p)
            p = min(max(p, 1e-6), 1 - 1e-6)
        assert p == pytest.approx(0.7, abs=1e-3)

    def test_invalid_counts_rejected(self):
        with pytest.raises(InvalidArgumentError):
            PairSample((1,), (2,), 3, 2)
        with pytest.raises(InvalidArgumentError):
            PairSample((1,), (2,), 0, 0)
