"""Acceptance criteria 1-12.

Each test prints one ``[PASS]``/``[FAIL]`` line and asserts.  The lines are
also collected and repeated in the pytest terminal summary.  Run just this
file with ``pytest tests/test_acceptance.py -s`` to see them inline.
"""

import math
import time
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np

from conftest import ACCEPTANCE_LINES
from oracles import lagrange_at_one_exact, moment_formula, q_exact
from lossy_gbs.ensembles import rng, sample_ginibre, sample_haar_unitary
from lossy_gbs.extrapolation import (
    amplification_factor,
    lagrange_extrapolate,
    r_polynomial_direct,
    reduction_params,
    reduction_trials,
    series_coefficients,
    truncation_lemma_experiment,
)
from lossy_gbs.gaussian import a_prefactor
from lossy_gbs.hafnian import Outcome, haf_alternate_A_form, haf_enumerate, haf_fast, haf_lossy_block
from lossy_gbs.probabilities import (
    GbsConfig,
    enumerate_distribution,
    postselect_lower_bound_check,
    prob_no_postselect,
    prob_postselect_N,
    q_factor,
)
from lossy_gbs.stats import analytic_moment, hafnian_moment_mc, tvd_bound_report

# frozen from a 60-seed pilot: median-of-means relative deviation had sd 0.017, max 0.046
MOMENT_BAND = 0.08
# frozen lower guard for min_N Pr[N] sqrt(N); observed minimum 0.41429 at N = 2
PR_SQRT_N_FLOOR = 0.41


def report(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] #{number} {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def close(a, b, rel, abs_=0.0):
    return abs(a - b) <= max(rel * max(abs(a), abs(b)), abs_)


def test_01_hafnian_engines():
    start = time.perf_counter()
    worst, bad = 0.0, 0
    for i in range(200):
        n = 2 + 2 * (i % 6)
        g = rng(101, (i,))
        A = g.standard_normal((n, n)) + 1j * g.standard_normal((n, n))
        B = (A + A.T) / 2
        a, b = haf_fast(B), haf_enumerate(B)
        if not close(a, b, 1e-9, 1e-12):
            bad += 1
        worst = max(worst, abs(a - b) / max(abs(b), 1e-12))
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 60
    report(1, "hafnian engines agree", ok, f"200 matrices dim 2-12, worst rel diff {worst:.2e}, {elapsed:.1f}s")


def test_02_block_vs_covariance_route():
    worst, bad = 0.0, 0
    for i in range(20):
        M, N = (4, 6)[i % 2], (2, 4)[(i // 2) % 2]
        g = rng(202, (i,))
        U = sample_haar_unitary(202, M, key=(i, 1))
        S = Outcome(tuple(int(s) for s in g.integers(1, M + 1, size=N)))
        r, eta = float(g.uniform(0.1, 1.0)), float(g.uniform(0.1, 1.0))
        block = a_prefactor(r, eta) ** N * haf_lossy_block(U, S, r, eta)
        cov = haf_alternate_A_form(U, S, r, eta)
        if not close(block, cov, 1e-9):
            bad += 1
        worst = max(worst, abs(block - cov) / abs(cov))
    report(2, "block route equals A-matrix route", bad == 0, f"20 draws, worst rel diff {worst:.2e}")


GRID_3 = [(M, N, eta) for (M, N) in [(2, 2), (4, 2), (4, 4)] for eta in (1.0, 0.9, 0.7)]


def test_03_normalisation():
    worst = 0.0
    for i, (M, N, eta) in enumerate(GRID_3):
        U = sample_haar_unitary(303, M, key=(i,))
        total = math.fsum(p for _, p in enumerate_distribution(U, GbsConfig(M, N, 0.5, eta)))
        worst = max(worst, abs(total - 1.0))
    report(3, "post-selected distribution sums to one", worst <= 1e-9, f"9 grid points, worst |sum-1| {worst:.2e}")


def test_04_consistency_triangle():
    worst = 0.0
    for i, (M, N, eta) in enumerate(GRID_3):
        U = sample_haar_unitary(303, M, key=(i,))
        cfg = GbsConfig(M, N, 0.5, eta)
        pr = prob_postselect_N(cfg)
        for S, p in enumerate_distribution(U, cfg):
            q = prob_no_postselect(U, S, cfg)
            worst = max(worst, abs(p * pr - q) / max(q, 1e-300))
    report(4, "p_S Pr[N] = q_S", worst <= 1e-10, f"all outcomes on 9 grid points, worst rel diff {worst:.2e}")


Q_POINTS = [
    (8, 2, 0.4, 0.8, 4),
    (8, 2, 0.4, 0.8, 64),
    (4, 4, 0.6, 0.5, 10),
    (6, 2, 0.3, 0.9, 2),
    (100, 6, 0.2, 0.7, 20),
    (20, 4, 1.0, 0.3, 30),
    (2, 2, 0.8, 0.1, 15),
    (64, 4, 0.25, 0.95, 3),
    (216, 6, 0.17, 0.9, 8),
    (10, 0, 0.5, 0.5, 5),
]


def test_05_q_factor():
    exact_one = all(q_factor(GbsConfig(M, N, r, 1.0)).value == 1.0 for M, N, r, _, _ in Q_POINTS)
    ok, worst_ratio = exact_one, 0.0
    for M, N, r, eta, m in Q_POINTS:
        res = q_factor(GbsConfig(M, N, r, eta), m=m)
        err = abs(mpmath.mpf(res.value) - q_exact(M, N, r, eta, dps=64))
        # allow double rounding of the summed value on top of the truncation bound
        allowed = res.error_bound + 4e-16 * res.value
        ok &= err <= allowed
        worst_ratio = max(worst_ratio, float(err / allowed))
    report(5, "Q(1)=1 and truncation error within bound", ok, f"10 points vs 64-digit oracle, worst err/bound {worst_ratio:.3f}")


def test_06_series_identity():
    worst, bad = 0.0, 0
    for N in (2, 4, 6, 8):
        for i in range(20):
            X = sample_ginibre(606, N, 2 * N + 2, key=(N, i))
            r = 0.3
            poly = series_coefficients(X, r)
            for eta in (0.1, 0.4, 0.7, 0.9, 1.0):
                a, b = poly.evaluate(eta), r_polynomial_direct(X, r, eta)
                if not close(a, b, 1e-9):
                    bad += 1
                worst = max(worst, abs(a - b) / abs(b))
    report(6, "series expansion equals direct hafnian", bad == 0, f"N in 2..8, 400 evaluations, worst rel diff {worst:.2e}")


def test_07_moment_identity():
    start = time.perf_counter()
    exact = all(math.isclose(analytic_moment(2, M), M, rel_tol=1e-12) for M in (2, 4, 8, 32, 100))
    exact &= moment_formula(4, 32) == 3264 and math.isclose(analytic_moment(4, 32), 3264, rel_tol=1e-12)
    rep = hafnian_moment_mc(4, 32, 10_000, seed=707, blocks=20)
    elapsed = time.perf_counter() - start
    ok = exact and abs(rep.relative_deviation) <= MOMENT_BAND and elapsed < 300
    report(
        7,
        "squared-hafnian moment",
        ok,
        f"N=2 closed form exact; N=4 M=32 median-of-means {rep.median_of_means:.1f} vs {rep.analytic:.0f} "
        f"(dev {rep.relative_deviation:+.3f}, band {MOMENT_BAND}, z {rep.z_score:+.2f}), {elapsed:.1f}s",
    )


def test_08_truncation_lemma():
    parts, ok = [], True
    for l in (2, 4):
        params = reduction_params(6, 256, 0.5, 0.1, 0.25, l=l, delta=0.25)
        rep = truncation_lemma_experiment(params, 500, seed=808)
        ok &= rep["wilson_high"] < 0.25
        parts.append(f"l={l}: {rep['exceedances']}/500 exceed eps1={rep['eps1']:.3g}, Wilson95 upper {rep['wilson_high']:.4f}")
    report(8, "truncation error bound", ok, "; ".join(parts) + " (delta 0.25)")


def test_09_reduction_experiment():
    params = reduction_params(6, 500, 0.3, 0.1, 0.25)
    rep = reduction_trials(params, 100, seed=909)
    ok = rep["pass"] and rep["budget_respected"] and rep["hypotheses_held"] == 100
    report(
        9,
        "noisy-oracle reduction",
        ok,
        f"{rep['successes']}/100 within eps0*scale (Wilson95 lower {rep['wilson_low']:.3f} >= {rep['target']}), "
        f"budget respected in all {rep['hypotheses_held']} runs, l={params.l}, Delta={params.Delta:.4f}, "
        f"max err/scale {rep['max_error_over_scale']:.2e}",
    )


def test_10_amplification_bound():
    Delta = Fraction(10, 21)
    ok, parts = True, []
    for d in (2, 4, 8):
        xs = [-Delta + Fraction(2 * j, d) * Delta for j in range(d + 1)]
        bound = amplification_factor(d, float(Delta))
        worst = Fraction(0)
        for signs in product((-1, 1), repeat=d + 1):
            exact = abs(lagrange_at_one_exact(xs, [Fraction(s) for s in signs]))
            worst = max(worst, exact)
            got = lagrange_extrapolate([(float(x), s) for x, s in zip(xs, signs)])
            # float nodes carry rounding that the large weights amplify (3e-12 at d=8)
            ok &= math.isclose(abs(got.value), float(exact), rel_tol=1e-10)
        ok &= float(worst) < bound
        parts.append(f"d={d}: worst {float(worst):.4g} < {bound:.4g}")
    report(10, "equispaced extrapolation bound", ok, "; ".join(parts) + " (unit node error, all sign patterns)")


def test_11_tvd_chain():
    ok, tight = True, 0.0
    U = sample_haar_unitary(1111, 4)
    for r in (0.2, 0.4):
        for eta in (0.9, 0.95, 0.99):
            rep = tvd_bound_report(U, r, eta, 2)
            ok &= rep.chain_holds
            tight = max(tight, rep.exact_tvd / rep.fidelity_bound)
    report(11, "TVD <= sqrt(1-F) <= sqrt((1-eta) M sinh^2 r)", ok, f"6 grid points, max TVD/sqrt(1-F) {tight:.4f}")


def test_12_postselection_guard():
    rows = postselect_lower_bound_check(range(2, 13, 2))
    worst = min(rows, key=lambda r: r["pr_N_sqrt_N"])
    ok = worst["pr_N_sqrt_N"] >= PR_SQRT_N_FLOOR
    report(12, "Pr[N] sqrt(N) guard", ok, f"min {worst['pr_N_sqrt_N']:.5f} at N={worst['N']} >= frozen {PR_SQRT_N_FLOOR}")


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s"]))
