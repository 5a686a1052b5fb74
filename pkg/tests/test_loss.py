import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from mixclust.errors import InvalidInputError
from mixclust.model import affinity_distance, dc_loss, dc_loss_and_grad, dc_loss_grad

shapes = st.tuples(st.integers(1, 40), st.integers(1, 8), st.integers(1, 4))


def random_pair(seed, L, K, C, one_hot=True):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((L, K))
    if one_hot:
        Y = np.eye(C)[rng.integers(0, C, L)]
    else:
        Y = rng.standard_normal((L, C))
    return V, Y


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**31), st.booleans())
def test_factored_matches_brute_force(shape, seed, one_hot):
    V, Y = random_pair(seed, *shape, one_hot=one_hot)
    brute = affinity_distance(V, Y)
    assert dc_loss(V, Y) == pytest.approx(brute, rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(shapes, st.integers(0, 2**31))
def test_nonnegative_and_zero_at_match(shape, seed):
    L, K, C = shape
    V, Y = random_pair(seed, L, K, C)
    assert dc_loss(V, Y) >= -1e-9
    # a perfect embedding is the target itself scaled to the same normalisation
    Vp = Y * (K / C) ** 0.25 if K == C else None
    if Vp is not None:
        assert dc_loss(Vp, Y) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(2, 6), st.integers(0, 2**31))
def test_rotation_and_permutation_invariance(L, K, seed):
    V, Y = random_pair(seed, L, K, 3)
    Q = ortho_group.rvs(K, random_state=seed % 2**32)
    perm = np.random.default_rng(seed).permutation(3)
    base = dc_loss(V, Y)
    assert dc_loss(V @ Q, Y) == pytest.approx(base, rel=1e-9, abs=1e-9)
    assert dc_loss(V, Y[:, perm]) == pytest.approx(base, rel=1e-12, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(shapes, st.integers(0, 2**31))
def test_gradient_matches_finite_differences(shape, seed):
    V, Y = random_pair(seed, *shape)
    g = dc_loss_grad(V, Y)
    eps = 1e-6
    rng = np.random.default_rng(seed)
    for _ in range(5):
        i, j = rng.integers(V.shape[0]), rng.integers(V.shape[1])
        Vp, Vm = V.copy(), V.copy()
        Vp[i, j] += eps
        Vm[i, j] -= eps
        fd = (dc_loss(Vp, Y) - dc_loss(Vm, Y)) / (2 * eps)
        assert g[i, j] == pytest.approx(fd, rel=1e-5, abs=1e-5)


@given(seed=st.integers(0, 2**31), one_hot=st.booleans())
@settings(max_examples=30, deadline=None)
def test_fused_matches_separate(seed, one_hot):
    V, Y = random_pair(seed, 40, 4, 3, one_hot)
    loss, grad = dc_loss_and_grad(V, Y)
    assert loss == pytest.approx(dc_loss(V, Y), rel=1e-12)
    np.testing.assert_allclose(grad, dc_loss_grad(V, Y), rtol=1e-10, atol=1e-12)


def test_known_value():
    V = np.array([[1.0, 0.0], [0.0, 1.0]])
    Y = np.array([[1.0], [1.0]])
    # VV^T/sqrt2 - YY^T = [[1/sqrt2 - 1, -1], [-1, 1/sqrt2 - 1]]
    expected = 2 * (1 / np.sqrt(2) - 1) ** 2 + 2
    assert dc_loss(V, Y) == pytest.approx(expected, rel=1e-12)


def test_row_mismatch():
    with pytest.raises(InvalidInputError):
        dc_loss(np.zeros((3, 2)), np.zeros((4, 2)))
