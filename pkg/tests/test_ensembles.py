import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lossy_gbs.ensembles import rng, sample_ginibre, sample_haar_unitary
from lossy_gbs.errors import InvalidArgument


def test_same_seed_same_draw():
    assert np.array_equal(sample_ginibre(7, 3, 5), sample_ginibre(7, 3, 5))
    assert np.array_equal(sample_haar_unitary(7, 4), sample_haar_unitary(7, 4))


def test_keys_give_independent_streams():
    a = sample_ginibre(7, 3, 5, key=(0,))
    b = sample_ginibre(7, 3, 5, key=(1,))
    assert not np.allclose(a, b)
    # a substream does not depend on what was drawn before it
    sample_ginibre(7, 30, 30, key=(0,))
    assert np.array_equal(sample_ginibre(7, 3, 5, key=(1,)), b)


@given(st.integers(0, 2**64 - 1), st.integers(1, 8))
@settings(max_examples=30, deadline=None)
def test_haar_is_unitary(seed, dim):
    U = sample_haar_unitary(seed, dim)
    assert np.allclose(U.conj().T @ U, np.eye(dim), atol=1e-12)


def test_haar_second_moment():
    vals = [abs(sample_haar_unitary(11, 2, key=(i,))[0, 0]) ** 2 for i in range(10_000)]
    assert abs(np.mean(vals) - 0.5) <= 0.02


def test_haar_phase_is_uniform():
    # without the R-diagonal phase fix the first entry has a biased phase
    phases = np.array([np.angle(sample_haar_unitary(3, 3, key=(i,))[0, 0]) for i in range(4000)])
    assert abs(np.mean(np.cos(phases))) < 0.05
    assert abs(np.mean(np.sin(phases))) < 0.05


def test_ginibre_unit_complex_variance():
    X = sample_ginibre(5, 200, 200)
    assert abs(np.mean(np.abs(X) ** 2) - 1.0) < 0.02
    assert abs(np.mean(X.real**2) - 0.5) < 0.02
    assert abs(np.mean(X)) < 0.02


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_bad_seed(seed):
    with pytest.raises(InvalidArgument):
        rng(seed)


def test_bad_dimensions():
    with pytest.raises(InvalidArgument):
        sample_ginibre(0, 0, 3)
    with pytest.raises(InvalidArgument):
        sample_haar_unitary(0, 0)
