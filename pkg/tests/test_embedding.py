"""Embedding forward pass properties and the finite-difference gradient check."""

import numpy as np
import pytest

from guardian.denoise import (
    ModelGrads,
    PairSample,
    TrainConfig,
    embed,
    init_model,
    pair_objective,
    pair_objective_with_grads,
)
from guardian.errors import InvalidArgumentError


def small_model(seed=0, dim=8, heads=2, layers=1, vocab=12, eps=1e-6):
    config = TrainConfig(
        embedding_dim=dim, attention_heads=heads, attention_layers=layers,
        probability_clamp_epsilon=eps, epochs=1, seed=seed,
    )
    rng = np.random.default_rng(seed)
    return init_model(vocab, config, rng)


class TestEmbedForward:
    def test_single_token_is_attended_self_projection(self):
        model = small_model()
        h = embed((3,), model)
        x = model.token_table[3]
        layer = model.layers[0]
        # Softmax over one token is 1, so attention reduces to x @ Wv @ Wo.
        expected = (x @ layer.wv) @ layer.wo
        np.testing.assert_allclose(h, expected, rtol=1e-12)

    def test_permutation_invariance(self):
        model = small_model()
        np.testing.assert_allclose(
            embed((1, 4, 7), model), embed((7, 1, 4), model), rtol=1e-12
        )

    def test_same_codes_same_embedding(self):
        model = small_model()
        np.testing.assert_allclose(embed((2, 5), model), embed((2, 5), model))

    def test_deterministic_for_fixed_model(self):
        a = embed((1, 2, 3), small_model(seed=9))
        b = embed((1, 2, 3), small_model(seed=9))
        np.testing.assert_array_equal(a, b)

    def test_out_of_range_code_rejected(self):
        model = small_model(vocab=5)
        with pytest.raises(InvalidArgumentError):
            embed((5,), model)
        with pytest.raises(InvalidArgumentError):
            embed((-1,), model)

    def test_multi_layer_runs(self):
        model = small_model(layers=3)
        assert embed((1, 2), model).shape == (8,)


def finite_difference_grads(model, sample, step=1e-6):
    """Central differences of the pair objective over every parameter."""
    grads = []
    for param in model.parameters():
        grad = np.zeros_like(param)
        flat = param.ravel()
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = pair_objective(sample, model)
            flat[i] = original - step
            down = pair_objective(sample, model)
            flat[i] = original
            grad.ravel()[i] = (up - down) / (2 * step)
        grads.append(grad)
    return grads


def relative_error(a, b):
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
    return np.max(np.abs(a - b) / denom)


def test_batched_objective_matches_per_sample_path():
    from guardian.denoise.objective import batch_objective_with_grads

    model = small_model(seed=5, dim=8, heads=2, vocab=9)
    rng = np.random.default_rng(5)
    samples = [
        PairSample(
            u_tokens=tuple(rng.integers(0, 9, size=rng.integers(1, 4))),
            v_tokens=tuple(rng.integers(0, 9, size=rng.integers(1, 4))),
            k=int(rng.integers(0, 6)),
            c=int(rng.integers(6, 12)),
        )
        for _ in range(7)
    ]
    batched = ModelGrads(model)
    losses = batch_objective_with_grads(samples, model, batched)

    singles = ModelGrads(model)
    expected = [pair_objective_with_grads(s, model, singles) for s in samples]

    np.testing.assert_allclose(losses, expected, rtol=1e-12)
    for a, b in zip(batched.as_list(), singles.as_list()):
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_embed_many_matches_single_embeds():
    from guardian.denoise.model import embed_many

    model = small_model(seed=3)
    sequences = [(1,), (2, 5), (7, 3, 1), (2, 5)]
    batched, _ = embed_many(sequences, model)
    for row, tokens in zip(batched, sequences):
        np.testing.assert_allclose(row, embed(tokens, model), rtol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_analytic_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.choice([4, 8]))
    heads = int(rng.choice([1, 2]))
    model = small_model(seed=seed, dim=dim, heads=heads, vocab=10)
    sample = PairSample(
        u_tokens=tuple(rng.integers(0, 10, size=rng.integers(1, 4))),
        v_tokens=tuple(rng.integers(0, 10, size=rng.integers(1, 4))),
        k=3,
        c=7,
    )
    grads = ModelGrads(model)
    pair_objective_with_grads(sample, model, grads)
    numeric = finite_difference_grads(model, sample)
    for analytic, fd in zip(grads.as_list(), numeric):
        assert relative_error(analytic, fd) < 1e-4
