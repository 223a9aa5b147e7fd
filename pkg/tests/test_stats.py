import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import moment_formula
from lossy_gbs.ensembles import sample_haar_unitary
from lossy_gbs.errors import DomainError, InvalidArgument, SizeLimitError
from lossy_gbs.probabilities import GbsConfig
from lossy_gbs.stats import (
    analytic_moment,
    exact_tvd,
    hafnian_moment_mc,
    max_loss_for_beta,
    median_of_means,
    theorem3_threshold,
    tvd_bound_report,
)


@pytest.mark.parametrize("N,M", [(2, 4), (2, 10), (4, 32), (6, 20), (8, 100)])
def test_analytic_moment_matches_integer_formula(N, M):
    assert math.isclose(analytic_moment(N, M), moment_formula(N, M), rel_tol=1e-12)


def test_two_photon_moment_is_mode_count():
    for M in (2, 8, 50):
        assert math.isclose(analytic_moment(2, M), M, rel_tol=1e-12)


def test_two_photon_monte_carlo():
    rep = hafnian_moment_mc(2, 8, 4000, seed=1)
    assert abs(rep.z_score) < 4
    assert abs(rep.relative_deviation) < 0.1


def test_submatrix_variant():
    rep = hafnian_moment_mc(4, 16, 3000, seed=2, submatrix=True)
    assert rep.rows == 2 and rep.analytic == pytest.approx(16)
    assert abs(rep.z_score) < 4


def test_moment_guards():
    with pytest.raises(SizeLimitError):
        hafnian_moment_mc(10, 20, 200, 0)
    with pytest.raises(InvalidArgument):
        hafnian_moment_mc(4, 20, 10, 0)


def test_median_of_means_is_robust():
    vals = np.ones(100)
    vals[0] = 1e9
    assert median_of_means(vals, 20) == 1.0


def test_tvd_trivial_cases():
    U = sample_haar_unitary(0, 4)
    a, b = GbsConfig(4, 2, 0.3, 0.9), GbsConfig(4, 2, 0.3, 1.0)
    assert exact_tvd(U, b, b) == 0.0
    assert math.isclose(exact_tvd(U, a, b), exact_tvd(U, b, a))
    rep = tvd_bound_report(U, 0.3, 1.0, 2)
    assert rep.exact_tvd == 0.0 and rep.fidelity_bound == pytest.approx(0.0, abs=1e-7) and rep.lemma_bound == 0.0


@given(st.integers(0, 100), st.floats(0.05, 0.45), st.floats(0.85, 1.0))
@settings(max_examples=20, deadline=None)
def test_tvd_chain(seed, r, eta):
    rep = tvd_bound_report(sample_haar_unitary(seed, 4), r, eta, 2)
    assert rep.chain_holds


def test_tvd_precondition():
    with pytest.raises(DomainError):
        tvd_bound_report(sample_haar_unitary(0, 4), 1.0, 0.5, 2)


def test_beta_inversion():
    M, r, beta = 4, 0.3, 0.1
    loss = max_loss_for_beta(beta, M, r)
    assert math.isclose(math.sqrt(loss * M * math.sinh(r) ** 2), beta)


def test_threshold_examples():
    assert theorem3_threshold(0.3, 0.3, 10, 0.4) == 1.0
    assert math.isclose(theorem3_threshold(0.2, 0.1, 100, math.asinh(0.1)), 0.99)
    assert theorem3_threshold(0.9, 0.0, 1, 0.01) == 0.0
    with pytest.raises(InvalidArgument):
        theorem3_threshold(0.1, 0.2, 10, 0.3)


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.4), st.floats(0.0, 0.09))
@settings(max_examples=40, deadline=None)
def test_threshold_monotone(beta1, gap, extra):
    lo = theorem3_threshold(beta1 + gap, beta1, 20, 0.2)
    hi = theorem3_threshold(beta1 + gap + extra, beta1, 20, 0.2)
    assert hi <= lo
