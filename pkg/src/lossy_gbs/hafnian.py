"""Exact hafnians and the outcome-indexed submatrices of lossy GBS.

Two independent engines are provided:

``haf_enumerate``
    Sum over perfect matchings by pairing the lowest unmatched index with
    every partner, memoised on the set of remaining indices.  Cost grows
    like ``2^n n``; guarded at ``n <= 16``.
``haf_fast``
    Power-trace inclusion-exclusion formula: for every subset ``Z`` of the
    ``n/2`` index pairs, the power traces of ``(X B)_Z`` give the matching
    generating function.  ``O(n^3 2^{n/2})``; guarded at ``n <= 32``.

Neither kernel applies outcome multiplicities; that is done by the
probability layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import InvalidArgument, SizeLimitError
from .gaussian import a_matrix_from_cov, check_unitary, lossy_output_cov

__all__ = [
    "Outcome",
    "as_symmetric",
    "haf_enumerate",
    "haf_fast",
    "hafnian",
    "sub_symmetric",
    "coincidence_matrix",
    "build_lossy_block",
    "haf_lossy_block",
    "haf_alternate_A_form",
    "ENUMERATE_MAX_DIM",
    "FAST_MAX_DIM",
]

ENUMERATE_MAX_DIM = 16
FAST_MAX_DIM = 32


@dataclass(frozen=True)
class Outcome:
    """An N-photon detection event as a sorted multiset of 1-based mode labels."""

    modes: tuple[int, ...]

    def __post_init__(self):
        modes = tuple(sorted(int(s) for s in self.modes))
        if modes and modes[0] < 1:
            raise InvalidArgument(f"mode labels are 1-based, got {modes}")
        object.__setattr__(self, "modes", modes)

    @property
    def photon_count(self) -> int:
        return len(self.modes)

    @property
    def indices(self) -> list[int]:
        """0-based row/column indices."""
        return [s - 1 for s in self.modes]

    @property
    def multiplicities(self) -> list[int]:
        counts: dict[int, int] = {}
        for s in self.modes:
            counts[s] = counts.get(s, 0) + 1
        return list(counts.values())

    @property
    def mu(self) -> int:
        """Product of the factorials of the mode multiplicities."""
        return math.prod(math.factorial(c) for c in self.multiplicities)

    @property
    def collision_free(self) -> bool:
        return self.mu == 1

    def __str__(self):
        return "(" + ",".join(str(s) for s in self.modes) + ")"


def _as_outcome(S) -> Outcome:
    return S if isinstance(S, Outcome) else Outcome(tuple(S))


def as_symmetric(B) -> np.ndarray:
    """Validate a square matrix and return its symmetric part."""
    B = np.asarray(B, dtype=complex)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {B.shape}")
    return (B + B.T) / 2


def _check_even(n: int) -> None:
    if n % 2:
        raise InvalidArgument(f"hafnian needs an even dimension, got {n}")


def haf_enumerate(B) -> complex:
    """Hafnian by explicit recursion over perfect matchings.

    The lowest unmatched index is paired with each remaining index in turn;
    partial sums are cached per remaining index set, so each distinct
    sub-problem is evaluated once in a fixed order.
    """
    B = as_symmetric(B)
    n = B.shape[0]
    _check_even(n)
    if n > ENUMERATE_MAX_DIM:
        raise SizeLimitError(f"haf_enumerate is limited to dim <= {ENUMERATE_MAX_DIM}, got {n}")
    if n == 0:
        return 1.0 + 0j
    entries = B.tolist()

    @lru_cache(maxsize=None)
    def rest(mask: int) -> complex:
        if mask == 0:
            return 1.0 + 0j
        i = (mask & -mask).bit_length() - 1
        mask ^= 1 << i
        total = 0j
        m = mask
        row = entries[i]
        while m:
            low = m & -m
            j = low.bit_length() - 1
            total += row[j] * rest(mask ^ low)
            m ^= low
        return total

    return complex(rest((1 << n) - 1))


def _matching_coefficient(traces: np.ndarray, m: int) -> np.ndarray:
    """Coefficient of ``t^m`` in ``exp(sum_k traces[k-1] t^k / (2k))`` (batched)."""
    batch = traces.shape[0]
    h = np.zeros((batch, m + 1), dtype=complex)
    h[:, 0] = 1.0
    for k in range(1, m + 1):
        acc = np.zeros(batch, dtype=complex)
        for j in range(1, k + 1):
            acc += traces[:, j - 1] * h[:, k - j]
        h[:, k] = acc / (2 * k)
    return h[:, m]


def haf_fast(B) -> complex:
    """Hafnian via the power-trace inclusion-exclusion formula.

    ``haf(B) = sum_Z (-1)^{m-|Z|} f((X B)_Z)`` where ``m = n/2``, ``Z`` runs over
    subsets of the index pairs ``(i, i+m)``, ``X`` swaps the two halves and
    ``f(C)`` is the ``t^m`` coefficient of ``exp(sum_k tr(C^k) t^k / 2k)``.
    Subsets of equal size are diagonalised as one stacked batch.
    """
    B = as_symmetric(B)
    n = B.shape[0]
    _check_even(n)
    if n > FAST_MAX_DIM:
        raise SizeLimitError(f"haf_fast is limited to dim <= {FAST_MAX_DIM}, got {n}")
    m = n // 2
    if m == 0:
        return 1.0 + 0j
    XB = np.concatenate([B[m:], B[:m]], axis=0)
    powers = np.arange(1, m + 1)
    total = 0j
    for size in range(1, m + 1):
        subsets = np.array(list(combinations(range(m), size)), dtype=int)
        idx = np.concatenate([subsets, subsets + m], axis=1)
        blocks = XB[idx[:, :, None], idx[:, None, :]]
        eig = np.linalg.eigvals(blocks)
        traces = np.sum(eig[:, :, None] ** powers[None, None, :], axis=1)
        coeffs = _matching_coefficient(traces, m)
        total += (-1) ** (m - size) * math.fsum(coeffs.real) + 1j * (-1) ** (m - size) * math.fsum(coeffs.imag)
    return complex(total)


def hafnian(B) -> complex:
    """Dispatch to an exact engine by size.

    The matching recursion is both faster and better conditioned up to its
    guard; the power-trace sum loses a few digits to alternating-sign
    cancellation and is only used beyond it.
    """
    n = np.shape(B)[0]
    return haf_enumerate(B) if n <= ENUMERATE_MAX_DIM else haf_fast(B)


def sub_symmetric(B, S) -> np.ndarray:
    """Rows and columns of ``B`` picked by the outcome ``S`` (repeats allowed)."""
    B = np.asarray(B)
    S = _as_outcome(S)
    idx = S.indices
    if idx and max(idx) >= B.shape[0]:
        raise InvalidArgument(f"outcome {S} addresses mode beyond dimension {B.shape[0]}")
    return B[np.ix_(idx, idx)]


def coincidence_matrix(S) -> np.ndarray:
    """``E[i, j] = 1`` when photons ``i`` and ``j`` sit in the same mode.

    Equal to the identity for collision-free outcomes.
    """
    idx = np.asarray(_as_outcome(S).indices)
    return (idx[:, None] == idx[None, :]).astype(float)


def build_lossy_block(U, S, r: float, eta: float) -> np.ndarray:
    """``[[(U U^T)_S, (1-eta) tanh r E], [(1-eta) tanh r E, (U* U^dag)_S]]``.

    ``E`` is the coincidence matrix of ``S``; it reduces to ``I_N`` when no
    mode is occupied twice, and is what repeating rows/columns of the full
    ``A`` matrix produces otherwise.
    """
    U = check_unitary(U)
    S = _as_outcome(S)
    if S.photon_count % 2:
        raise InvalidArgument(f"photon number must be even, got {S.photon_count}")
    top = sub_symmetric(U @ U.T, S)
    off = (1.0 - eta) * np.tanh(r) * coincidence_matrix(S)
    block = np.block([[top, off], [off, top.conj()]])
    return (block + block.T) / 2


def haf_lossy_block(U, S, r: float, eta: float) -> complex:
    return hafnian(build_lossy_block(U, S, r, eta))


def haf_alternate_A_form(U, S, r: float, eta: float) -> complex:
    """``Haf(A_{S+S})`` with ``A`` taken through the numerical covariance pipeline.

    Rows/columns ``j`` and ``j + M`` of ``A`` are kept for every ``j`` in ``S``.
    """
    U = check_unitary(U)
    S = _as_outcome(S)
    M = U.shape[0]
    A = a_matrix_from_cov(lossy_output_cov(U, r, eta))
    idx = S.indices + [j + M for j in S.indices]
    if S.indices and max(S.indices) >= M:
        raise InvalidArgument(f"outcome {S} addresses mode beyond {M}")
    return hafnian(as_symmetric(A[np.ix_(idx, idx)]))
