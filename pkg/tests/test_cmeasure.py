import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from infodyn.cmeasure import (
    apply_markov,
    as_markov,
    as_weights,
    conditional_expectation,
    expectation,
    gamma_embed,
    gamma_unembed,
    is_normalized,
    lp_norm,
    random_markov,
    support,
    update_by_conditioning,
    updated_weights,
)
from infodyn.errors import DegenerateConditioningError

positive = arrays(np.float64, st.integers(1, 8), elements=st.floats(0.01, 10.0))


def test_weights_validation():
    with pytest.raises(ValueError):
        as_weights([1.0, -0.1])
    with pytest.raises(ValueError):
        as_weights([0.0, 0.0])
    with pytest.raises(ValueError):
        as_weights([1.0, np.nan])
    assert is_normalized([0.25, 0.75])
    assert not is_normalized([0.25, 0.5])
    assert support([0, 2.0, 0, 1.0]).tolist() == [1, 3]


def test_expectation_examples():
    assert expectation([1, 1], [0, 0]) == 0
    assert expectation([0.5, 0.5], [1, 1]) == 1
    assert expectation([2, 1], [1, 3]) == 5
    with pytest.raises(ValueError):
        expectation([1, 1], [1, 2, 3])


def test_conditional_expectation_blocks():
    E = conditional_expectation(np.full(4, 0.25), [1, 2, 3, 4], [0, 0, 1, 1])
    np.testing.assert_allclose(E, [1.5, 1.5, 3.5, 3.5])
    f = np.array([5.0, 5.0, -1.0, -1.0])
    np.testing.assert_array_equal(conditional_expectation([1, 2, 3, 4], f, [0, 0, 1, 1]), f)
    w = np.array([1.0, 2.0, 3.0])
    f = np.array([1.0, 4.0, 2.0])
    E = conditional_expectation(w, f, [7, 7, 7])
    np.testing.assert_allclose(E, np.full(3, w @ f / w.sum()))


def test_conditioning_on_zero_mass_block_raises():
    with pytest.raises(DegenerateConditioningError):
        conditional_expectation([1.0, 1.0, 0.0], [1, 2, 3], [0, 0, 1])


def test_update_by_conditioning():
    omega = np.full(4, 0.25)
    upd = update_by_conditioning(omega, [1, 3, 1, 1], [0, 0, 1, 1])
    assert upd([1, 0, 0, 0]) == pytest.approx(0.125, abs=1e-15)
    f = np.array([0.3, -1.0, 2.0, 5.0])
    assert update_by_conditioning(omega, omega, [0, 0, 1, 1])(f) == pytest.approx(expectation(omega, f))
    w = np.array([0.1, 0.2, 0.3, 0.4])
    assert update_by_conditioning(w, [4, 3, 2, 1], [0, 1, 2, 3])(f) == pytest.approx(expectation(w, f))
    nw = updated_weights(omega, [1, 3, 1, 1], [0, 0, 1, 1])
    assert nw @ f == pytest.approx(upd(f))


@given(st.integers(0, 10_000))
def test_conditional_expectation_orthogonality_and_tower(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    omega = rng.uniform(0.01, 1.0, n)
    f = rng.normal(size=n)
    g = rng.integers(0, 3, n)
    E = conditional_expectation(omega, f, g)
    for _ in range(50):
        h = rng.normal(size=3)
        assert abs(expectation(omega, (f - E) * h[g])) < 1e-10
    np.testing.assert_array_equal(conditional_expectation(omega, E, g), E)


def test_conditional_expectation_is_least_squares(rng):
    n = 7
    omega = rng.uniform(0.1, 1.0, n)
    f = rng.normal(size=n)
    g = np.array([0, 0, 1, 1, 1, 2, 2])
    E = conditional_expectation(omega, f, g)
    best = expectation(omega, (f - E) ** 2)
    for _ in range(200):
        fe = rng.normal(size=3)[g]
        assert expectation(omega, (f - fe) ** 2) > best


def test_gamma_embedding():
    np.testing.assert_array_equal(gamma_embed([4, 1], 1.0), [4, 1])
    np.testing.assert_allclose(gamma_embed([4, 1], 0.5), [4, 2])
    np.testing.assert_allclose(gamma_embed([1, np.e], 0.0), [0, 1])
    with pytest.raises(ValueError):
        gamma_embed([1.0], 1.5)


# mu^gamma rounds to 1 as gamma -> 0+, so the chart is only usable away from 0
@given(positive, st.one_of(st.just(0.0), st.floats(0.01, 1.0)))
def test_gamma_embedding_round_trip(mu, gamma):
    np.testing.assert_allclose(gamma_unembed(gamma_embed(mu, gamma), gamma), mu, rtol=1e-12)


def test_markov_examples(rng):
    mu = np.array([0.2, 0.3, 0.5])
    np.testing.assert_array_equal(apply_markov(mu, np.eye(3)), mu)
    collapse = np.zeros((3, 3))
    collapse[:, 1] = 1.0
    np.testing.assert_allclose(apply_markov(mu, collapse), [0, 1, 0])
    T = random_markov(rng, 2, 5)
    assert apply_markov([1, 2], T).sum() == pytest.approx(3, abs=1e-12)
    with pytest.raises(ValueError):
        as_markov([[0.5, 0.4]])
    with pytest.raises(ValueError):
        apply_markov(mu, np.eye(2))


def test_markov_preserves_mass_and_sign(rng):
    for _ in range(100):
        n, m = rng.integers(1, 9, 2)
        mu = rng.uniform(0, 3, n)
        mu[0] += 0.1
        out = apply_markov(mu, random_markov(rng, n, m))
        assert out.min() >= 0
        assert out.sum() == pytest.approx(mu.sum(), rel=1e-12)


def test_lp_norm():
    assert lp_norm(np.zeros(3), 2) == 0
    assert lp_norm([3, 4], 2) == pytest.approx(5)
    assert lp_norm([-2, 1], np.inf) == 2
    with pytest.raises(ValueError):
        lp_norm([1.0], 0.5)
