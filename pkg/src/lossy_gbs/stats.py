"""Monte Carlo moment checks and loss-induced distance bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .ensembles import sample_ginibre
from .errors import DomainError, InvalidArgument, SizeLimitError
from .extrapolation import log_scale
from .gaussian import gaussian_infidelity_pure, lossy_output_cov
from .hafnian import haf_enumerate
from .probabilities import GbsConfig, enumerate_distribution

__all__ = [
    "MomentReport",
    "TvdReport",
    "analytic_moment",
    "median_of_means",
    "hafnian_moment_mc",
    "exact_tvd",
    "tvd_bound_report",
    "max_loss_for_beta",
    "theorem3_threshold",
]

MOMENT_MAX_N = 8


def analytic_moment(N: int, M: int) -> float:
    """``E |Haf(X X^T)|^2 = C(M/2+N/2-1, N/2) N!`` for ``N x M`` Ginibre ``X``."""
    return 1.0 if N == 0 else math.exp(log_scale(M, N))


def median_of_means(values, blocks: int) -> float:
    values = np.asarray(values, dtype=float)
    if blocks < 1 or blocks > values.size:
        raise InvalidArgument(f"need 1 <= blocks <= samples, got {blocks}")
    return float(np.median([chunk.mean() for chunk in np.array_split(values, blocks)]))


@dataclass(frozen=True)
class MomentReport:
    N: int
    M: int
    samples: int
    rows: int
    empirical_mean: float
    median_of_means: float
    analytic: float
    standard_error: float
    z_score: float
    relative_deviation: float

    def as_dict(self) -> dict:
        return asdict(self)


def hafnian_moment_mc(N: int, M: int, samples: int, seed: int, blocks: int = 20, submatrix: bool = False) -> MomentReport:
    """Sample ``|Haf(X X^T)|^2`` over fresh Ginibre draws, one substream per sample.

    ``submatrix=True`` keeps only the first ``N-2`` rows of each draw, which
    must reproduce the formula at ``N-2``.  ``relative_deviation`` compares
    the median of means with the analytic value.
    """
    if N < 2 or N % 2:
        raise InvalidArgument(f"N must be a positive even integer, got {N}")
    if N > MOMENT_MAX_N:
        raise SizeLimitError(f"moment sampling is limited to N <= {MOMENT_MAX_N}, got {N}")
    if samples < 100:
        raise InvalidArgument(f"need at least 100 samples, got {samples}")
    rows = N - 2 if submatrix else N
    vals = np.empty(samples)
    for i in range(samples):
        X = sample_ginibre(seed, N, M, key=(i,))[:rows]
        vals[i] = abs(haf_enumerate(X @ X.T)) ** 2
    analytic = analytic_moment(rows, M)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    mom = median_of_means(vals, blocks)
    z = (mean - analytic) / se if se > 0 else 0.0
    return MomentReport(N, M, samples, rows, mean, mom, analytic, se, z, mom / analytic - 1.0)


def exact_tvd(U, cfg_a: GbsConfig, cfg_b: GbsConfig) -> float:
    """Total variation distance between two post-selected ``N``-photon distributions."""
    if (cfg_a.M, cfg_a.N) != (cfg_b.M, cfg_b.N):
        raise InvalidArgument("configs must share M and N")
    pa = enumerate_distribution(U, cfg_a)
    pb = enumerate_distribution(U, cfg_b)
    return 0.5 * math.fsum(abs(a - b) for (_, a), (_, b) in zip(pa, pb))


@dataclass(frozen=True)
class TvdReport:
    eta: float
    r: float
    M: int
    N: int
    exact_tvd: float
    fidelity: float
    fidelity_bound: float
    lemma_bound: float
    tvd_below_fidelity: bool
    fidelity_below_loss_bound: bool

    @property
    def chain_holds(self) -> bool:
        return self.tvd_below_fidelity and self.fidelity_below_loss_bound

    def as_dict(self) -> dict:
        d = asdict(self)
        d["chain_holds"] = self.chain_holds
        return d


def tvd_bound_report(U, r: float, eta: float, N: int) -> TvdReport:
    """Exact post-selected TVD against ``sqrt(1-F)`` and ``sqrt((1-eta) M sinh^2 r)``.

    ``F`` is the fidelity between the lossless and lossy Gaussian output
    states at the same squeezing ``r``.
    """
    U = np.asarray(U, dtype=complex)
    M = U.shape[0]
    load = (1.0 - eta) * M * math.sinh(r) ** 2
    if not load < 1.0:
        raise DomainError(f"(1-eta) M sinh^2 r = {load:.4g} must be below 1 for the fidelity bound")
    ideal = lossy_output_cov(U, r, 1.0)
    lossy = lossy_output_cov(U, r, eta)
    infid = max(gaussian_infidelity_pure(ideal, lossy), 0.0)
    tvd = exact_tvd(U, GbsConfig(M, N, r, eta), GbsConfig(M, N, r, 1.0))
    fb = math.sqrt(infid)
    lb = math.sqrt(load)
    # compare squares where rounding is additive
    slack = 1e-12
    return TvdReport(eta, r, M, N, tvd, 1.0 - infid, fb, lb, tvd <= fb + slack, infid <= load + slack)


def max_loss_for_beta(beta: float, M: int, r: float) -> float:
    """Largest ``1 - eta`` with ``sqrt((1-eta) M sinh^2 r) <= beta``."""
    return beta**2 / (M * math.sinh(r) ** 2)


def theorem3_threshold(beta0: float, beta1: float, M: int, r: float) -> float:
    """Smallest ``eta`` with ``(1-eta) M sinh^2 r <= (beta0 - beta1)^2``, clamped to ``[0, 1]``."""
    if not 0.0 <= beta1 <= beta0 < 1.0:
        raise InvalidArgument(f"need 0 <= beta1 <= beta0 < 1, got beta0={beta0}, beta1={beta1}")
    s2 = M * math.sinh(r) ** 2
    if s2 == 0.0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - (beta0 - beta1) ** 2 / s2))
