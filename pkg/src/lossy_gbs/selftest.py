"""Quick sanity checks with known answers, run by the ``selftest`` command."""

from __future__ import annotations

import math

import numpy as np

from .ensembles import sample_ginibre, sample_haar_unitary
from .extrapolation import lagrange_extrapolate, node_grid, r_polynomial_direct, series_coefficients
from .gaussian import apply_loss, squeezed_vacuum_cov
from .hafnian import haf_enumerate, haf_fast
from .probabilities import GbsConfig, enumerate_distribution, q_factor
from .stats import theorem3_threshold


def _close(a, b, rel=1e-9, abs_=1e-12) -> bool:
    return abs(a - b) <= max(rel * max(abs(a), abs(b)), abs_)


def run_selftest() -> dict[str, dict]:
    checks = {}

    def record(name, ok, **detail):
        checks[name] = {"pass": bool(ok), **detail}

    ones = np.ones((4, 4))
    record("haf_ones_4", _close(haf_enumerate(ones).real, 3.0) and _close(haf_fast(ones).real, 3.0))
    record("haf_empty", haf_enumerate(np.zeros((0, 0))) == 1)

    cov = squeezed_vacuum_cov(0.3, 2)
    record("loss_eta_1_identity", np.allclose(apply_loss(cov, 1.0), cov))
    record("loss_eta_0_vacuum", np.allclose(apply_loss(cov, 0.0), 0.5 * np.eye(4)))

    q = q_factor(GbsConfig(8, 2, 0.4, 1.0))
    record("Q_at_eta_1", q.value == 1.0 and q.error_bound == 0.0, Q=q.value)

    U = sample_haar_unitary(0, 4)
    total = math.fsum(p for _, p in enumerate_distribution(U, GbsConfig(4, 2, 0.3, 0.9)))
    record("normalisation_M4_N2", _close(total, 1.0), total=total)

    X = sample_ginibre(0, 4, 6)
    truth = abs(haf_enumerate(X @ X.T)) ** 2
    record("R_at_eta_1", _close(r_polynomial_direct(X, 0.3, 1.0), truth))
    poly = series_coefficients(X, 0.3)
    record("truncate_keeps_c0", _close(poly.truncate(0).evaluate(0.5), truth))

    eps = 1e-3
    ext = lagrange_extrapolate(list(zip(node_grid(2, 0.5), [0.0, 0.0, eps])), eps_node=eps)
    record("lagrange_three_eps", _close(ext.value, 3 * eps) and abs(ext.value) <= ext.bound, value=ext.value)

    record("threshold_equal_betas", theorem3_threshold(0.1, 0.1, 10, 0.5) == 1.0)
    return checks
