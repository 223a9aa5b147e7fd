"""Recovering ideal hafnian probabilities from noisy lossy-GBS estimates.

``R_X(eta) = Haf([[X X^T, (1-eta) M tanh r I], [(1-eta) M tanh r I, X* X^dag]])``
is a polynomial in ``(1-eta)`` whose constant term is ``P(X) = |Haf(X X^T)|^2``.
An oracle that estimates ``P(eta, X) = R_X(eta) / Q(eta)`` on a window of
transmission rates below one can therefore be extrapolated to ``eta = 1``.

All logs are natural logs.  ``scale`` always means
``C(M/2+N/2-1, N/2) N!``, the mean of ``|Haf(X X^T)|^2`` over Ginibre ``X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import mpmath
import numpy as np
from scipy.stats import binomtest

from .ensembles import rng, sample_ginibre
from .errors import InvalidArgument, SizeLimitError
from .hafnian import haf_enumerate, hafnian
from .probabilities import GbsConfig, log_binom, q_factor

__all__ = [
    "RPolynomial",
    "ReductionParams",
    "OracleEstimate",
    "ExtrapolationResult",
    "log_scale",
    "r_polynomial_direct",
    "series_coefficients",
    "expected_coefficients",
    "reduction_params",
    "g_map",
    "node_grid",
    "noisy_oracle",
    "amplification_factor",
    "lagrange_extrapolate",
    "truncation_lemma_experiment",
    "reduction_experiment",
    "reduction_trials",
    "wilson_interval",
]

DIRECT_MAX_N = 12
SERIES_MAX_N = 10
EXTENDED_PRECISION_DEGREE = 20


def log_scale(M: int, N: int) -> float:
    """log of ``C(M/2+N/2-1, N/2) N!``."""
    return log_binom(M // 2 + N // 2 - 1, N // 2) + math.lgamma(N + 1)


def _check_X(X, limit: int) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise InvalidArgument(f"X must be a matrix, got shape {X.shape}")
    N = X.shape[0]
    if N % 2:
        raise InvalidArgument(f"X needs an even number of rows, got {N}")
    if N > limit:
        raise SizeLimitError(f"N = {N} exceeds the limit {limit} for this evaluation")
    return X


def r_polynomial_direct(X, r: float, eta: float) -> float:
    """``R_X(eta)`` as one ``2N x 2N`` hafnian."""
    X = _check_X(X, DIRECT_MAX_N)
    N, M = X.shape
    B = X @ X.T
    off = (1.0 - eta) * M * math.tanh(r) * np.eye(N)
    h = hafnian(np.block([[B, off], [off, B.conj()]]))
    if abs(h.imag) > 1e-10 * max(abs(h.real), 1.0):
        raise ArithmeticError(f"R_X has imaginary residue {h.imag:.3e}")
    return h.real


@dataclass(frozen=True)
class RPolynomial:
    """``R_X`` as coefficients of powers of ``(1 - eta)``; odd entries are zero."""

    N: int
    coefficients: tuple[float, ...]

    def evaluate(self, eta: float) -> float:
        u = 1.0 - eta
        return math.fsum(c * u**k for k, c in enumerate(self.coefficients) if c)

    def truncate(self, l: int) -> "RPolynomial":
        """Keep powers up to ``(1-eta)^l``."""
        if l % 2 or l < 0 or l > self.N:
            raise InvalidArgument(f"truncation degree must be even and within [0, {self.N}], got {l}")
        return RPolynomial(self.N, tuple(c if k <= l else 0.0 for k, c in enumerate(self.coefficients)))

    def tail(self, l: int, eta: float) -> float:
        """``R_X(eta) - R_X^(l)(eta)``, summed from the dropped terms only."""
        u = 1.0 - eta
        return math.fsum(c * u**k for k, c in enumerate(self.coefficients) if k > l and c)

    @property
    def c0(self) -> float:
        return self.coefficients[0]


def series_coefficients(X, r: float) -> RPolynomial:
    """``c_{2n} = (M tanh r)^{2n} sum_{|J| = N-2n} |Haf((X X^T)_J)|^2``."""
    X = _check_X(X, SERIES_MAX_N)
    N, M = X.shape
    B = X @ X.T
    mt = M * math.tanh(r)
    coeffs = [0.0] * (N + 1)
    for n in range(N // 2 + 1):
        size = N - 2 * n
        if size == 0:
            total = 1.0
        else:
            total = math.fsum(abs(haf_enumerate(B[np.ix_(J, J)])) ** 2 for J in combinations(range(N), size))
        coeffs[2 * n] = mt ** (2 * n) * total
    return RPolynomial(N, tuple(coeffs))


def expected_coefficients(N: int, M: int, r: float) -> list[float]:
    """Ginibre averages of the ``c_{2n}``, from the squared-hafnian moment formula."""
    mt = M * math.tanh(r)
    out = [0.0] * (N + 1)
    for n in range(N // 2 + 1):
        size = N - 2 * n
        moment = math.exp(log_scale(M, size)) if size else 1.0
        out[2 * n] = mt ** (2 * n) * math.comb(N, size) * moment
    return out


@dataclass(frozen=True)
class ReductionParams:
    N: int
    M: int
    k_star: float
    k_max: float
    eta_star: float
    eta_min: float
    r: float
    eps0: float
    delta0: float
    Delta: float
    Delta_nominal: float
    Delta_upper: float
    chi: float
    l_formula: float
    l: int
    l_capped: bool
    delta: float
    eps1: float
    eps1_formula: float
    q_max: float
    q_envelope: float
    eps: float
    eps_prime: float
    blowup: float
    amplification: float
    alpha: float
    log_scale: float
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def scale(self) -> float:
        return math.exp(self.log_scale)

    @property
    def budget(self) -> float:
        """``eps' e^{l(1+log 1/Delta)} scale``."""
        return self.eps_prime * self.blowup * self.scale

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["warnings"] = list(self.warnings)
        d["scale"] = self.scale
        d["budget"] = self.budget
        return d


def _eta_of_k(N: int, k: float) -> float:
    return N / (N + k)


def amplification_factor(d: int, Delta: float) -> float:
    """``exp[d(1 + log 1/Delta)] / sqrt(2 pi d)``."""
    return math.exp(d * (1.0 + math.log(1.0 / Delta))) / math.sqrt(2.0 * math.pi * d)


def reduction_params(
    N: int,
    M: int,
    k_star: float,
    eps0: float,
    delta0: float,
    l: int | None = None,
    delta: float | None = None,
) -> ReductionParams:
    """Derive the full interpolation schedule from ``(N, M, k*, eps0, delta0)``.

    ``k_max = 3 k*``; ``Delta`` is ``(20/21)(k_max-k*)/(k_max+k*)`` unless that
    overshoots the range condition, in which case the range bound is used.
    ``l`` comes from the degree formula, is rounded up to even and capped at
    ``N``; pass ``l`` to override.  ``delta`` solves
    ``delta0 = 1 - (1-2 delta)^{l+1}`` unless given.
    ``r`` is fixed by ``sinh^2 r = N / (eta* M)`` across the whole window.
    """
    if N < 2 or N % 2:
        raise InvalidArgument(f"N must be a positive even integer, got {N}")
    if M < 2 or M % 2:
        raise InvalidArgument(f"M must be a positive even integer, got {M}")
    if not k_star > 0:
        raise InvalidArgument(f"k* must be positive, got {k_star}")
    if not (0 < eps0 and 0 < delta0 < 1):
        raise InvalidArgument(f"need eps0 > 0 and 0 < delta0 < 1, got {eps0}, {delta0}")
    warnings = []
    k_max = 3.0 * k_star
    eta_star, eta_min = _eta_of_k(N, k_star), _eta_of_k(N, k_max)
    r = math.asinh(math.sqrt(N / (eta_star * M)))
    ratio = (k_max - k_star) / (k_max + k_star)
    Delta_nominal = 20.0 / 21.0 * ratio
    # largest Delta with g(-Delta) >= eta_min and g(Delta) <= eta*
    Delta_upper = ratio / (1.0 + 2.0 * k_max * k_star / (N * (k_max + k_star)))
    Delta = min(Delta_nominal, Delta_upper)
    if k_max * k_star / N > 1.0 / 40.0:
        warnings.append(f"k_max k*/N = {k_max * k_star / N:.4g} > 1/40")
    if Delta < Delta_nominal:
        warnings.append(f"Delta lowered to the range bound {Delta_upper:.6g}")
    L = N / (eps0 * delta0)
    logL = math.log(L)
    if logL <= 1.0:
        raise InvalidArgument(f"log(N/(eps0 delta0)) = {logL:.3g} must exceed 1")
    if logL < math.e:
        warnings.append(f"log(N/(eps0 delta0)) = {logL:.3g} < e; the chi condition may fail")
    chi = math.exp(math.log(logL) / logL)
    l_formula = math.e**2 / Delta * chi * k_max + logL
    if l is None:
        l = 2 * math.ceil(l_formula / 2)
        l_capped = l >= N
        if l_capped:
            warnings.append(f"degree {l} capped at N = {N}; truncation is exact")
            l = N
    else:
        if l % 2 or l < 2 or l > N:
            raise InvalidArgument(f"l must be even within [2, {N}], got {l}")
        l_capped = l == N
    if l <= k_max:
        warnings.append(f"l = {l} does not exceed k_max = {k_max:.4g}")
    if delta is None:
        delta = (1.0 - (1.0 - delta0) ** (1.0 / (l + 1))) / 2.0
    eps1_formula = N * k_max**l / (2.0 * delta * math.factorial(l))
    eps1 = 0.0 if l_capped else eps1_formula
    xs = node_grid(l, Delta)
    slope = _g_slope(N, k_star, k_max)
    q_max = max(q_factor(GbsConfig(M, N, r, min(slope * (x - 1.0) + 1.0, 1.0))).value for x in xs)
    q_envelope = 4.0 * math.sqrt(N) * math.exp((1.0 - eta_min) * N)
    blowup = math.exp(l * (1.0 + math.log(1.0 / Delta)))
    eps = (eps0 / blowup - eps1) / q_max
    if eps <= 0:
        warnings.append("eps1 exceeds the interpolation budget; oracle error eps clamped to 0")
        eps = 0.0
    alpha = 6.0 * (1.0 + math.log(2.1)) * math.e**2 * chi + 3.0
    return ReductionParams(
        N=N, M=M, k_star=k_star, k_max=k_max, eta_star=eta_star, eta_min=eta_min, r=r,
        eps0=eps0, delta0=delta0, Delta=Delta, Delta_nominal=Delta_nominal, Delta_upper=Delta_upper,
        chi=chi, l_formula=l_formula, l=l, l_capped=l_capped, delta=delta, eps1=eps1,
        eps1_formula=eps1_formula, q_max=q_max, q_envelope=q_envelope, eps=eps,
        eps_prime=q_max * eps + eps1, blowup=blowup, amplification=amplification_factor(l, Delta), alpha=alpha,
        log_scale=log_scale(M, N), warnings=tuple(warnings),
    )


def _g_slope(N: int, k_star: float, k_max: float) -> float:
    return (N * (k_max + k_star) + 2.0 * k_max * k_star) / (2.0 * (N + k_max) * (N + k_star))


def g_map(x: float, params: ReductionParams) -> float:
    """Affine map with ``g(1) = 1`` sending ``[-Delta, Delta]`` into ``[eta_min, eta*]``."""
    tol = 1e-12
    if x != 1.0 and not -params.Delta - tol <= x <= params.Delta + tol:
        raise InvalidArgument(f"x = {x} lies outside [-Delta, Delta] U {{1}}")
    if x == 1.0:
        return 1.0
    return _g_slope(params.N, params.k_star, params.k_max) * (x - 1.0) + 1.0


def node_grid(d: int, Delta: float) -> list[float]:
    """``x_j = -Delta + 2 j Delta / d`` for ``j = 0..d``."""
    if d < 1:
        raise InvalidArgument(f"need at least degree 1, got {d}")
    return [-Delta + 2.0 * j * Delta / d for j in range(d + 1)]


@dataclass(frozen=True)
class OracleEstimate:
    eta: float
    value: float
    injected_noise: float


def noisy_oracle(
    X,
    params: ReductionParams,
    eta: float,
    eps: float,
    noise_seed: int,
    mode: str = "uniform",
    node_index: int = 0,
) -> OracleEstimate:
    """Estimate of ``P(eta, X)`` within ``eps * scale``.

    ``uniform`` adds a draw from ``[-eps scale, eps scale]`` keyed on
    ``(noise_seed, node_index)``.  ``adversarial`` adds ``+-eps scale`` with
    the sign alternating in ``node_index``.
    """
    tol = 1e-12
    if not params.eta_min - tol <= eta <= params.eta_star + tol:
        raise InvalidArgument(f"eta = {eta} outside [{params.eta_min}, {params.eta_star}]")
    if eps < 0:
        raise InvalidArgument(f"eps must be non-negative, got {eps}")
    cfg = GbsConfig(params.M, params.N, params.r, eta)
    exact = r_polynomial_direct(X, params.r, eta) / q_factor(cfg).value
    amp = eps * params.scale
    if mode == "uniform":
        noise = float(rng(noise_seed, (node_index,)).uniform(-amp, amp)) if amp else 0.0
    elif mode == "adversarial":
        noise = amp if node_index % 2 == 0 else -amp
    else:
        raise InvalidArgument(f"unknown noise mode {mode!r}")
    return OracleEstimate(eta, exact + noise, noise)


@dataclass(frozen=True)
class ExtrapolationResult:
    value: float
    lebesgue: float
    bound: float | None


def _check_equispaced(xs) -> tuple[int, float]:
    d = len(xs) - 1
    if d < 1:
        raise InvalidArgument("need at least two nodes")
    Delta = -xs[0]
    if not 0 < Delta < 1:
        raise InvalidArgument(f"nodes must span [-Delta, Delta] with 0 < Delta < 1, got first node {xs[0]}")
    expected = node_grid(d, Delta)
    if max(abs(a - b) for a, b in zip(xs, expected)) > 1e-12 * max(Delta, 1.0):
        raise InvalidArgument("nodes are not equally spaced over [-Delta, Delta]")
    return d, Delta


def _basis_at_one(xs, d: int, extended: bool) -> list:
    """Lagrange basis values ``l_j(1)`` via barycentric weights ``(-1)^j C(d, j)``."""
    if extended:
        with mpmath.workdps(60):
            # rebuild the ideal grid; float nodes are only equispaced to rounding
            Delta = -mpmath.mpf(xs[0])
            grid = [-Delta + 2 * j * Delta / d for j in range(d + 1)]
            terms = [(-1) ** j * math.comb(d, j) / (1 - x) for j, x in enumerate(grid)]
            total = mpmath.fsum(terms)
            return [t / total for t in terms]
    terms = [(-1) ** j * math.comb(d, j) / (1.0 - x) for j, x in enumerate(xs)]
    total = math.fsum(terms)
    return [t / total for t in terms]


def lagrange_extrapolate(nodes, eps_node: float | None = None) -> ExtrapolationResult:
    """Value at ``x = 1`` of the degree-``d`` interpolant through ``d+1`` equispaced nodes.

    ``nodes`` is a sequence of ``(x_j, y_j)``.  ``lebesgue`` is
    ``sum_j |l_j(1)|``, the worst-case amplification of node errors.  With
    ``eps_node`` the equispaced extrapolation bound ``eps exp[d(1+log 1/Delta)]/sqrt(2 pi d)`` is
    returned too.  Degrees above 20 are evaluated at extended precision.
    """
    xs = [float(x) for x, _ in nodes]
    ys = [float(y) for _, y in nodes]
    d, Delta = _check_equispaced(xs)
    extended = d > EXTENDED_PRECISION_DEGREE
    basis = _basis_at_one(xs, d, extended)
    if extended:
        with mpmath.workdps(60):
            value = float(mpmath.fsum(b * y for b, y in zip(basis, ys)))
            lebesgue = float(mpmath.fsum(abs(b) for b in basis))
    else:
        value = math.fsum(b * y for b, y in zip(basis, ys))
        lebesgue = math.fsum(abs(b) for b in basis)
    bound = None if eps_node is None else eps_node * amplification_factor(d, Delta)
    return ExtrapolationResult(value, lebesgue, bound)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def truncation_lemma_experiment(params: ReductionParams, trials: int, seed: int, eta: float | None = None) -> dict:
    """Monte Carlo check of the truncation bound ``eps1 = N k_max^l / (2 delta l!)``.

    At ``eta`` (default ``eta_min``) with ``sinh^2 r = N/(eta M)``, counts the
    Ginibre draws whose dropped tail exceeds ``eps1 * scale``.
    """
    N, M, l = params.N, params.M, params.l
    if N > 8:
        raise SizeLimitError(f"exact tail evaluation is limited to N <= 8, got {N}")
    if trials < 1:
        raise InvalidArgument(f"need at least one trial, got {trials}")
    eta = params.eta_min if eta is None else eta
    if eta < params.eta_min - 1e-12 or eta > 1.0:
        raise InvalidArgument(f"eta = {eta} below eta_min = {params.eta_min}")
    r = math.asinh(math.sqrt(N / (eta * M)))
    threshold = params.eps1_formula * params.scale
    tails = []
    for t in range(trials):
        X = sample_ginibre(seed, N, M, key=(t,))
        tails.append(series_coefficients(X, r).tail(l, eta) / params.scale)
    exceed = sum(1 for x in tails if x * params.scale > threshold)
    low, high = wilson_interval(exceed, trials)
    u = 1.0 - eta
    mean_tail = math.fsum(c * u**k for k, c in enumerate(expected_coefficients(N, M, r)) if k > l) / params.scale
    return {
        "N": N, "M": M, "l": l, "eta": eta, "r": r, "delta": params.delta, "eps1": params.eps1_formula,
        "trials": trials, "exceedances": exceed, "fraction": exceed / trials,
        "wilson_low": low, "wilson_high": high,
        "tail_p95": float(np.percentile(tails, 95)), "tail_max": max(tails),
        "expected_tail": mean_tail, "markov_bound": mean_tail / params.eps1_formula,
        "pass": high < params.delta,
    }


def reduction_experiment(X, params: ReductionParams, noise_seed: int, mode: str = "uniform", eps: float | None = None) -> dict:
    """Query the oracle on the ``l+1`` node grid, undo ``Q``, extrapolate to ``eta = 1``.

    ``success`` means the estimate lands within ``eps0 * scale`` of ``P(X)``.
    ``within_budget`` compares against ``eps' e^{l(1+log 1/Delta)} scale`` and
    ``hypotheses_hold`` records whether every node met its oracle bound and
    the truncation tail at every node stayed within ``eps1 * scale``.
    """
    X = _check_X(X, SERIES_MAX_N)
    if X.shape != (params.N, params.M):
        raise InvalidArgument(f"X has shape {X.shape}, expected {(params.N, params.M)}")
    eps = params.eps if eps is None else eps
    scale = params.scale
    xs = node_grid(params.l, params.Delta)
    poly = series_coefficients(X, params.r)
    ys, records = [], []
    hypotheses = True
    for j, x in enumerate(xs):
        eta = min(g_map(x, params), params.eta_star)
        est = noisy_oracle(X, params, eta, eps, noise_seed, mode=mode, node_index=j)
        q = q_factor(GbsConfig(params.M, params.N, params.r, eta)).value
        y = est.value * q
        tail = poly.tail(params.l, eta)
        hypotheses &= abs(est.injected_noise) <= eps * scale * (1 + 1e-12)
        hypotheses &= tail <= params.eps1 * scale * (1 + 1e-12) + 1e-12 * scale
        ys.append(y)
        records.append({"x": x, "eta": eta, "Q": q, "oracle": est.value, "noise": est.injected_noise, "y": y})
    ext = lagrange_extrapolate(list(zip(xs, ys)), eps_node=params.eps_prime * scale)
    truth = abs(haf_enumerate(X @ X.T)) ** 2
    error = abs(ext.value - truth)
    budget = params.budget
    return {
        "estimate": ext.value, "truth": truth, "error": error, "error_over_scale": error / scale,
        "amplification_bound": ext.bound, "budget": budget, "lebesgue": ext.lebesgue,
        "success": error <= params.eps0 * scale, "within_budget": error <= budget,
        "hypotheses_hold": bool(hypotheses), "c0_matches": abs(poly.c0 - truth) <= 1e-9 * max(truth, scale),
        "nodes": records,
    }


def reduction_trials(params: ReductionParams, trials: int, seed: int, mode: str = "uniform", eps: float | None = None) -> dict:
    """Run ``reduction_experiment`` on ``trials`` Ginibre draws keyed on ``(seed, t)``."""
    runs = []
    for t in range(trials):
        X = sample_ginibre(seed, params.N, params.M, key=(0, t))
        rep = reduction_experiment(X, params, noise_seed=_noise_seed(seed, t), mode=mode, eps=eps)
        runs.append(rep)
    wins = sum(r["success"] for r in runs)
    low, high = wilson_interval(wins, trials)
    held = [r for r in runs if r["hypotheses_hold"]]
    return {
        "trials": trials, "successes": wins, "fraction": wins / trials, "wilson_low": low, "wilson_high": high,
        "target": 1.0 - params.delta0, "pass": low >= 1.0 - params.delta0,
        "budget_respected": all(r["within_budget"] for r in held), "hypotheses_held": len(held),
        "max_error_over_scale": max(r["error_over_scale"] for r in runs),
        "runs": [{k: v for k, v in r.items() if k != "nodes"} for r in runs],
    }


def _noise_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(1, trial)).generate_state(1, dtype=np.uint64)[0])
