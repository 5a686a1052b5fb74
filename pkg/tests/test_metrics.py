import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixclust.errors import InvalidInputError
from mixclust.metrics import resolve_permutation, sdr


def test_perfect_and_scaled(rng):
    r = rng.standard_normal(1000)
    assert sdr(r, r) == 100.0
    assert sdr(3.5 * r, r) == 100.0


def test_known_noise_level(rng):
    r = rng.standard_normal(100_000)
    n = rng.standard_normal(100_000)
    n -= (n @ r) / (r @ r) * r
    n *= np.sqrt((r @ r) / (n @ n)) * 10 ** (-20 / 20)
    assert sdr(r + n, r) == pytest.approx(20.0, abs=1e-9)


def test_zero_estimate_and_errors(rng):
    r = rng.standard_normal(10)
    assert sdr(np.zeros(10), r) == -100.0
    with pytest.raises(InvalidInputError):
        sdr(r, np.zeros(10))
    with pytest.raises(InvalidInputError):
        sdr(r[:5], r)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_permutation_recovered(n, seed):
    rng = np.random.default_rng(seed)
    refs = [rng.standard_normal(500) for _ in range(n)]
    perm = rng.permutation(n)
    ests = [refs[p] + 0.01 * rng.standard_normal(500) for p in perm]
    got, sdrs = resolve_permutation(ests, refs)
    for i in range(n):
        assert perm[got[i]] == i
    assert np.all(sdrs > 30)


def test_too_many_sources(rng):
    refs = [rng.standard_normal(10) for _ in range(5)]
    with pytest.raises(InvalidInputError):
        resolve_permutation(refs, refs)
