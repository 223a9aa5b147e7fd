"""Zero-mean Gaussian states in covariance-matrix form.

Conventions
-----------
* Quadrature ordering is ``(x_1..x_M, p_1..p_M)`` ("xp basis") and the
  vacuum covariance is ``I/2``.
* The complex basis is ``xi = (a_1..a_M, a_1^dag..a_M^dag)`` with
  ``a = (x + i p)/sqrt(2)``, so ``Sigma = W sigma W^dag``.
* A passive interferometer ``U`` maps ``a -> U a``.

Loss is always applied at the input: a uniform beam-splitter loss channel
commutes with any passive linear-optical network.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "squeezed_vacuum_cov",
    "apply_loss",
    "passive_symplectic",
    "evolve",
    "lossy_output_cov",
    "to_complex_basis",
    "q_representation_det",
    "q_det_closed_form",
    "a_matrix_from_cov",
    "a_prefactor",
    "build_A_matrix",
    "symplectic_eigenvalues",
    "satisfies_uncertainty",
    "is_pure",
    "gaussian_infidelity_pure",
    "gaussian_fidelity_pure",
    "fidelity_closed_form",
    "check_unitary",
]

PURITY_TOL = 1e-8


def check_unitary(U, tol: float = 1e-10) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {U.shape}")
    resid = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if resid > tol:
        raise InvalidArgument(f"matrix is not unitary (residual {resid:.3e} > {tol:.0e})")
    return U


def _check_eta(eta: float) -> float:
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgument(f"transmission rate must lie in [0, 1], got {eta}")
    return float(eta)


def squeezed_vacuum_cov(r: float, modes: int) -> np.ndarray:
    """Covariance of ``modes`` identical p-squeezed vacua.

    Returns ``diag(e^{2r}/2 I_M, e^{-2r}/2 I_M)``.
    """
    if r < 0:
        raise InvalidArgument(f"squeezing must be non-negative, got {r}")
    if modes < 1:
        raise InvalidArgument(f"need at least one mode, got {modes}")
    return np.diag(np.concatenate([np.full(modes, np.exp(2 * r) / 2), np.full(modes, np.exp(-2 * r) / 2)]))


def apply_loss(cov: np.ndarray, eta: float) -> np.ndarray:
    """Uniform beam-splitter loss: ``eta * sigma + (1 - eta) I/2``."""
    eta = _check_eta(eta)
    cov = np.asarray(cov, dtype=float)
    return eta * cov + (1.0 - eta) * 0.5 * np.eye(cov.shape[0])


def passive_symplectic(U) -> np.ndarray:
    """Real orthogonal symplectic matrix of the interferometer ``U`` in the xp basis."""
    U = np.asarray(U, dtype=complex)
    re, im = U.real, U.imag
    return np.block([[re, -im], [im, re]])


def evolve(cov: np.ndarray, U) -> np.ndarray:
    S = passive_symplectic(U)
    return S @ cov @ S.T


def lossy_output_cov(U, r: float, eta: float) -> np.ndarray:
    """xp covariance after squeezing, input loss and the interferometer ``U``."""
    U = check_unitary(U)
    return evolve(apply_loss(squeezed_vacuum_cov(r, U.shape[0]), eta), U)


def _w_matrix(modes: int) -> np.ndarray:
    eye = np.eye(modes)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]]) / np.sqrt(2.0)


def to_complex_basis(cov: np.ndarray) -> np.ndarray:
    """Convert an xp covariance to the ``(a, a^dag)`` basis."""
    W = _w_matrix(cov.shape[0] // 2)
    return W @ cov @ W.conj().T


def q_representation_det(cov: np.ndarray) -> float:
    """``det(sigma + I/2)``; basis independent because ``W`` is unitary."""
    cov = np.asarray(cov)
    sign, logdet = np.linalg.slogdet(cov + 0.5 * np.eye(cov.shape[0]))
    return float(np.real(sign) * np.exp(logdet))


def q_det_closed_form(r: float, eta: float, modes: int) -> float:
    """``cosh^{2M} r (1 - (1-eta)^2 tanh^2 r)^M`` for the lossy squeezed input."""
    z = (1.0 - eta) ** 2 * np.tanh(r) ** 2
    return float(np.cosh(r) ** (2 * modes) * (1.0 - z) ** modes)


def a_matrix_from_cov(cov: np.ndarray) -> np.ndarray:
    """``A = X_{2M} (I - Sigma_Q^{-1})`` computed numerically from an xp covariance."""
    dim = cov.shape[0]
    m = dim // 2
    sigma_q = to_complex_basis(cov) + 0.5 * np.eye(dim)
    X = np.block([[np.zeros((m, m)), np.eye(m)], [np.eye(m), np.zeros((m, m))]])
    return X @ (np.eye(dim) - np.linalg.inv(sigma_q))


def a_prefactor(r: float, eta: float) -> float:
    """``eta tanh r / (1 - (1-eta)^2 tanh^2 r)``."""
    t = np.tanh(r)
    return float(eta * t / (1.0 - (1.0 - eta) ** 2 * t**2))


def build_A_matrix(U, r: float, eta: float) -> np.ndarray:
    """Closed-form ``A`` for the lossy squeezed state sent through ``U``.

    ``A = c [[U* U^dag, (1-eta) tanh r I], [(1-eta) tanh r I, U U^T]]``
    with ``c = eta tanh r / (1 - (1-eta)^2 tanh^2 r)``.
    """
    U = check_unitary(U)
    eta = _check_eta(eta)
    m = U.shape[0]
    off = (1.0 - eta) * np.tanh(r) * np.eye(m)
    uut = U @ U.T
    A = a_prefactor(r, eta) * np.block([[uut.conj(), off], [off, uut]])
    return (A + A.T) / 2


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    m = cov.shape[0] // 2
    omega = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
    ev = np.abs(np.linalg.eigvals(1j * omega @ cov))
    return np.sort(ev)[::2]


def satisfies_uncertainty(cov: np.ndarray, tol: float = 1e-10) -> bool:
    """Check ``sigma + (i/2) Omega >= 0``."""
    m = cov.shape[0] // 2
    omega = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
    return bool(np.min(np.linalg.eigvalsh(cov + 0.5j * omega)) >= -tol)


def is_pure(cov: np.ndarray, tol: float = PURITY_TOL) -> bool:
    return bool(np.all(np.abs(symplectic_eigenvalues(cov) - 0.5) <= tol))


def gaussian_infidelity_pure(cov_pure: np.ndarray, cov_mixed: np.ndarray) -> float:
    """``1 - F`` for zero-mean states, accurate even when ``F`` is close to 1.

    ``F = 1/sqrt(det(sigma_p + sigma_m))`` and ``det(2 sigma_p) = 1`` for a pure
    state, so ``log det = sum log1p(lambda)`` over the eigenvalues of
    ``(2 sigma_p)^{-1} (sigma_m - sigma_p)``.
    """
    if not is_pure(cov_pure):
        raise InvalidArgument("first covariance must describe a pure state")
    cov_pure = np.asarray(cov_pure, dtype=float)
    K = np.linalg.solve(2.0 * cov_pure, np.asarray(cov_mixed, dtype=float) - cov_pure)
    logdet = float(np.sum(np.log1p(np.linalg.eigvals(K))).real)
    return float(-np.expm1(-0.5 * logdet))


def gaussian_fidelity_pure(cov_pure: np.ndarray, cov_mixed: np.ndarray) -> float:
    """Fidelity ``1/sqrt(det(sigma_pure + sigma_mixed))`` of zero-mean states.

    Only valid when the first argument is pure.
    """
    return 1.0 - gaussian_infidelity_pure(cov_pure, cov_mixed)


def fidelity_closed_form(r: float, eta: float, modes: int) -> float:
    """Per-mode product form of the squeezed-vs-lossy-squeezed fidelity."""
    e2 = np.exp(2 * r)
    per_mode = ((1 + eta) * e2 + 1 - eta) * ((1 + eta) / e2 + 1 - eta) / 4
    return float(per_mode ** (-modes / 2))
