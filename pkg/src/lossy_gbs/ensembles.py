"""Seeded random matrix ensembles: complex Ginibre and Haar unitaries.

Every draw comes from a Philox (counter-based) generator keyed by
``SeedSequence(seed, spawn_key=key)``.  A substream is therefore a pure
function of ``(seed, key)``: it does not depend on how many other streams
were consumed before it, nor on thread scheduling.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

__all__ = ["rng", "sample_ginibre", "sample_haar_unitary"]


def rng(seed: int, key: tuple[int, ...] = ()) -> np.random.Generator:
    """Return the Philox generator for substream ``key`` of ``seed``."""
    if seed < 0 or seed >= 2**64:
        raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _ginibre(gen: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    # real and imaginary parts each have variance 1/2, so E|X_ij|^2 = 1
    z = gen.standard_normal((rows, 2 * cols))
    return (z[:, :cols] + 1j * z[:, cols:]) / np.sqrt(2.0)


def sample_ginibre(seed: int, rows: int, cols: int, key: tuple[int, ...] = ()) -> np.ndarray:
    """Draw an ``rows x cols`` matrix of i.i.d. standard complex normals.

    Each entry has independent real and imaginary parts of variance 1/2,
    i.e. unit complex variance ``E|X_ij|^2 = 1``.
    """
    if rows < 1 or cols < 1:
        raise InvalidArgument(f"dimensions must be positive, got {rows}x{cols}")
    return _ginibre(rng(seed, key), rows, cols)


def sample_haar_unitary(seed: int, dim: int, key: tuple[int, ...] = ()) -> np.ndarray:
    """Draw a Haar-distributed ``dim x dim`` unitary.

    QR-decomposes a Ginibre matrix and multiplies each column of ``Q`` by the
    phase of the matching diagonal entry of ``R``.  Without that correction
    the LAPACK sign convention biases the result away from Haar measure.
    """
    if dim < 1:
        raise InvalidArgument(f"dim must be positive, got {dim}")
    z = _ginibre(rng(seed, key), dim, dim)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    phases = d / np.abs(d)
    return q * phases[np.newaxis, :]
