"""Output probabilities of lossy Gaussian boson sampling.

Setting: ``M`` single-mode squeezed vacua with common squeezing ``r``, uniform
transmission ``eta`` applied at the input, an ``M``-mode interferometer ``U``
and photon counting on every mode.  ``N`` is the total detected photon number.

Large binomial prefactors are carried in log space; the hypergeometric
series is summed with ``math.fsum`` (all its terms are non-negative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations_with_replacement

import numpy as np

from .errors import DomainError, InvalidArgument, SizeLimitError
from .gaussian import check_unitary
from .hafnian import Outcome, haf_lossy_block

__all__ = [
    "GbsConfig",
    "QFactorResult",
    "log_binom",
    "hyp2f1_partial",
    "q_factor",
    "q_upper_bound_check",
    "prob_postselect_N",
    "photon_number_pmf",
    "prob_no_postselect",
    "prob_postselected",
    "outcomes",
    "enumerate_distribution",
    "postselect_lower_bound_check",
    "ENUMERATION_LIMIT",
]

ENUMERATION_LIMIT = 100_000
MAX_SERIES_TERMS = 1 << 16


@dataclass(frozen=True)
class GbsConfig:
    """Mode count ``M``, photon number ``N``, squeezing ``r``, transmission ``eta``."""

    M: int
    N: int
    r: float
    eta: float

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise InvalidArgument(f"M must be a positive even integer, got {self.M}")
        if self.N < 0 or self.N % 2:
            raise InvalidArgument(f"N must be a non-negative even integer, got {self.N}")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidArgument(f"eta must lie in [0, 1], got {self.eta}")
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise InvalidArgument(f"r must be finite and non-negative, got {self.r}")

    @classmethod
    def auto_r(cls, M: int, N: int, eta: float) -> "GbsConfig":
        """Pick ``r`` so that ``N`` is the mean output photon number, ``N = eta M sinh^2 r``."""
        if eta <= 0:
            raise DomainError("auto-r needs eta > 0")
        return cls(M, N, math.asinh(math.sqrt(N / (eta * M))), eta)

    def with_eta(self, eta: float) -> "GbsConfig":
        return replace(self, eta=eta)

    @property
    def z(self) -> float:
        """Argument ``(1-eta)^2 tanh^2 r`` of the hypergeometric factor."""
        return (1.0 - self.eta) ** 2 * math.tanh(self.r) ** 2


@dataclass(frozen=True)
class QFactorResult:
    value: float
    terms: int
    error_bound: float
    bound_kind: str


def log_binom(n: int, k: int) -> float:
    return math.log(math.comb(n, k))


def _hyp_params(M: int, N: int) -> tuple[float, float, float]:
    return (M + N) / 2, (N + 1) / 2, 0.5


def _ratio_sup(a: float, b: float, c: float, n0: int) -> float:
    """Upper bound on ``(a+n)(b+n)/((c+n)(n+1))`` over ``n >= n0``.

    Each factor ``(p+n)/(q+n)`` is monotone in ``n`` and tends to 1.
    """
    f1 = max((a + n0) / (c + n0), 1.0)
    f2 = max((b + n0) / (1.0 + n0), 1.0)
    return f1 * f2


def hyp2f1_partial(a: float, b: float, c: float, z: float, m: int) -> tuple[float, float]:
    """Partial sum of ``2F1(a, b; c; z)`` through ``n = m`` and the first omitted term."""
    term = 1.0
    terms = [term]
    for n in range(m + 1):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        if n < m:
            terms.append(term)
    return math.fsum(terms), term


def _tail_bounds(cfg: GbsConfig, m: int, next_term: float) -> dict[str, float]:
    """Rigorous bounds on the omitted tail ``sum_{n>m}`` of the series."""
    a, b, c = _hyp_params(cfg.M, cfg.N)
    z = cfg.z
    bounds: dict[str, float] = {}
    if z == 0.0:
        return {"ratio-geometric": 0.0}
    rho = z * _ratio_sup(a, b, c, m + 1)
    if rho < 1.0:
        bounds["ratio-geometric"] = next_term / (1.0 - rho)
    # coefficient < 2^n for n > m and tanh^2 r <= N/(eta M)  =>  tail < z_g^{m+1}/(1-z_g)
    if cfg.eta > 0 and cfg.N > 0:
        z_g = 2.0 * (1.0 - cfg.eta) ** 2 * cfg.N / (cfg.eta * cfg.M)
        n0 = m + 1
        log_coeff = (
            math.lgamma(a + n0) - math.lgamma(a) + math.lgamma(b + n0) - math.lgamma(b)
            - math.lgamma(c + n0) + math.lgamma(c) - math.lgamma(n0 + 1)
        )
        tied = math.tanh(cfg.r) ** 2 <= cfg.N / (cfg.eta * cfg.M) * (1 + 1e-12)
        if tied and z_g < 1.0 and log_coeff <= n0 * math.log(2.0) and _ratio_sup(a, b, c, n0) <= 2.0:
            bounds["closed-form-geometric"] = z_g**n0 / (1.0 - z_g)
    return bounds


def q_factor(cfg: GbsConfig, m: int | None = None, tol: float = 1e-16) -> QFactorResult:
    """``Q(eta) = (1 - z)^{M/2+N} 2F1((M+N)/2, (N+1)/2; 1/2; z)``, ``z = (1-eta)^2 tanh^2 r``.

    With ``m`` given, the series is cut after ``n = m``.  Otherwise ``m`` is
    doubled until the tail bound drops below ``1e-3 * tol * Q``.  The
    reported ``error_bound`` is the smallest valid geometric tail bound times
    the prefactor.
    """
    z = cfg.z
    if z >= 1.0:
        raise DomainError(f"hypergeometric argument z = {z} is outside the unit disc")
    a, b, c = _hyp_params(cfg.M, cfg.N)
    log_pref = (cfg.M / 2 + cfg.N) * math.log1p(-z)
    pref = math.exp(log_pref)

    def evaluate(k: int) -> QFactorResult:
        partial, nxt = hyp2f1_partial(a, b, c, z, k)
        bounds = _tail_bounds(cfg, k, nxt)
        if bounds:
            kind = min(bounds, key=bounds.get)
            err = pref * bounds[kind]
        else:
            kind, err = "none", math.inf
        return QFactorResult(pref * partial, k, err, kind)

    if m is not None:
        if m < 0:
            raise InvalidArgument(f"term count must be non-negative, got {m}")
        return evaluate(m)
    k = 16
    while True:
        res = evaluate(k)
        if res.error_bound <= 1e-3 * tol * res.value or k >= MAX_SERIES_TERMS:
            return res
        k *= 2


def q_upper_bound_check(cfg: GbsConfig, C: float = 4.0) -> tuple[float, float]:
    """Return ``(Q(eta), C sqrt(N) e^{(1-eta) N})``."""
    return q_factor(cfg).value, C * math.sqrt(cfg.N) * math.exp((1.0 - cfg.eta) * cfg.N)


def _log_postselect_prefactor(cfg: GbsConfig) -> float:
    """log of ``eta^N tanh^N r / cosh^M r * C(M/2+N/2-1, N/2)``."""
    M, N = cfg.M, cfg.N
    out = -M * math.log(math.cosh(cfg.r)) + log_binom(M // 2 + N // 2 - 1, N // 2)
    if N:
        out += N * (math.log(cfg.eta) + math.log(math.tanh(cfg.r)))
    return out


def prob_postselect_N(cfg: GbsConfig) -> float:
    """Probability ``Pr[N]`` of detecting exactly ``N`` photons (even ``N``)."""
    if cfg.N > 0 and (cfg.eta == 0.0 or cfg.r == 0.0):
        return 0.0
    a, b, c = _hyp_params(cfg.M, cfg.N)
    q = q_factor(cfg)
    hyp = q.value / math.exp((cfg.M / 2 + cfg.N) * math.log1p(-cfg.z))
    return math.exp(_log_postselect_prefactor(cfg)) * hyp


def photon_number_pmf(M: int, r: float, eta: float, n: int, tail_tol: float = 1e-18) -> float:
    """``Pr[n]`` for any integer ``n`` by direct summation over input photon numbers.

    Input pair counts ``k`` follow a negative binomial law; each of the ``2k``
    photons survives independently with probability ``eta``.
    """
    if n < 0:
        return 0.0
    t2 = math.tanh(r) ** 2
    log_vac = -M * math.log(math.cosh(r))
    if t2 == 0.0 or eta == 0.0:
        return 1.0 if n == 0 else 0.0
    terms = []
    k = (n + 1) // 2
    while True:
        log_in = log_vac + k * math.log(t2) + log_binom(M // 2 + k - 1, k)
        if eta == 1.0:
            log_loss = 0.0 if 2 * k == n else -math.inf
        else:
            log_loss = math.log(math.comb(2 * k, n)) + n * math.log(eta) + (2 * k - n) * math.log1p(-eta)
        term = math.exp(log_in + log_loss) if log_loss > -math.inf else 0.0
        terms.append(term)
        if k > n and term <= tail_tol * math.fsum(terms):
            break
        if eta == 1.0 and 2 * k >= n:
            break
        k += 1
    return math.fsum(terms)


def _check_outcome(U, S, cfg: GbsConfig) -> tuple[np.ndarray, Outcome]:
    U = check_unitary(U)
    S = S if isinstance(S, Outcome) else Outcome(tuple(S))
    if U.shape[0] != cfg.M:
        raise InvalidArgument(f"U has {U.shape[0]} modes, config says M = {cfg.M}")
    if S.photon_count != cfg.N:
        raise InvalidArgument(f"outcome {S} has {S.photon_count} photons, config says N = {cfg.N}")
    if S.modes and S.modes[-1] > cfg.M:
        raise InvalidArgument(f"outcome {S} addresses a mode beyond M = {cfg.M}")
    return U, S


def _real_haf(h: complex) -> float:
    # the block hafnian is real; anything beyond rounding noise means a bad input
    if abs(h.imag) > 1e-9 * max(abs(h.real), 1.0):
        raise ArithmeticError(f"hafnian of the lossy block has imaginary residue {h.imag:.3e}")
    return h.real


def prob_no_postselect(U, S, cfg: GbsConfig) -> float:
    """``q_S``: probability of outcome ``S`` with no conditioning on the photon number.

    ``q_S = eta^N tanh^N r / (cosh^M r (1 - z)^{M/2+N}) Haf(block) / mu(S)``.
    """
    U, S = _check_outcome(U, S, cfg)
    if cfg.N == 0:
        return math.exp(-cfg.M * math.log(math.cosh(cfg.r)) - cfg.M / 2 * math.log1p(-cfg.z))
    if cfg.eta == 0.0 or cfg.r == 0.0:
        return 0.0
    h = _real_haf(haf_lossy_block(U, S, cfg.r, cfg.eta))
    log_pref = (
        cfg.N * (math.log(cfg.eta) + math.log(math.tanh(cfg.r)))
        - cfg.M * math.log(math.cosh(cfg.r))
        - (cfg.M / 2 + cfg.N) * math.log1p(-cfg.z)
    )
    return math.exp(log_pref) * h / S.mu


def _postselect_norm(cfg: GbsConfig, q: float | None = None) -> float:
    """``C(M/2+N/2-1, N/2) * Q(eta)``."""
    if cfg.N > 0 and cfg.eta == 0.0:
        raise DomainError("post-selected probability is undefined at eta = 0 (Pr[N] = 0)")
    q = q_factor(cfg).value if q is None else q
    return math.exp(log_binom(cfg.M // 2 + cfg.N // 2 - 1, cfg.N // 2)) * q


def prob_postselected(U, S, cfg: GbsConfig, q: float | None = None) -> float:
    """``p_S(eta, U)``: probability of ``S`` conditioned on detecting ``N`` photons.

    ``p_S = Haf(block) / (mu(S) C(M/2+N/2-1, N/2) Q(eta))``.  Pass ``q`` to reuse
    a precomputed ``Q(eta)``.
    """
    U, S = _check_outcome(U, S, cfg)
    norm = _postselect_norm(cfg, q)
    return _real_haf(haf_lossy_block(U, S, cfg.r, cfg.eta)) / (S.mu * norm)


def outcomes(M: int, N: int):
    """All ``N``-photon outcomes over ``M`` modes in lexicographic order."""
    count = math.comb(M + N - 1, N)
    if count > ENUMERATION_LIMIT:
        raise SizeLimitError(f"{count} outcomes exceed the enumeration limit {ENUMERATION_LIMIT}")
    return [Outcome(s) for s in combinations_with_replacement(range(1, M + 1), N)]


def enumerate_distribution(U, cfg: GbsConfig) -> list[tuple[Outcome, float]]:
    """Every ``N``-photon outcome with its post-selected probability."""
    q = q_factor(cfg).value
    return [(S, prob_postselected(U, S, cfg, q=q)) for S in outcomes(cfg.M, cfg.N)]


def postselect_lower_bound_check(N_values, gamma: int = 3, loss_rule=None) -> list[dict]:
    """Tabulate ``Pr[N] sqrt(N)`` with ``M = N^gamma`` and ``r`` from ``N = eta M sinh^2 r``.

    ``loss_rule(N)`` returns ``1 - eta``; the default is ``1/(12 sqrt(N))``.
    """
    loss_rule = loss_rule or (lambda N: 1.0 / (12.0 * math.sqrt(N)))
    rows = []
    for N in N_values:
        M = N**gamma
        eta = 1.0 - loss_rule(N)
        cfg = GbsConfig.auto_r(M, N, eta)
        p = prob_postselect_N(cfg)
        rows.append({"N": N, "M": M, "eta": eta, "r": cfg.r, "pr_N": p, "pr_N_sqrt_N": p * math.sqrt(N)})
    return rows
