"""Dense Hermitian matrix analysis: spectra, log/exp, entropies, partial traces.

Entropies are computed in nats internally and reported in bits.
"""
from __future__ import annotations

from typing import Iterable, NamedTuple

import numpy as np

from .operator_basis import full_table, num_qubits, pauli_moments

LN2 = np.log(2.0)
HERM_TOL = 1e-10
TRACE_TOL = 1e-9
PSD_TOL = 1e-10
FULL_RANK_TOL = 1e-12
MAX_SPREAD = 1400.0


class NotHermitian(ValueError):
    pass


class InvalidState(ValueError):
    pass


class NotFullRank(ValueError):
    pass


class SupportViolation(ValueError):
    """The first state has weight outside the support of the second."""


class OverflowGuard(FloatingPointError):
    """Eigenvalue spread too large for a well-defined Gibbs state."""


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def apply(self, f) -> np.ndarray:
        u = self.eigenvectors
        return (u * f(self.eigenvalues)) @ u.conj().T


def hermiticity_error(mat: np.ndarray) -> float:
    return float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0


def eig_hermitian(mat: np.ndarray, tol: float = HERM_TOL) -> SpectralDecomposition:
    """Ascending eigenvalues and unitary eigenvectors of a Hermitian matrix."""
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {mat.shape}")
    err = hermiticity_error(mat)
    if err > tol * max(1.0, float(np.max(np.abs(mat)))):
        raise NotHermitian(f"matrix is not Hermitian (max |M - M^dag| = {err:.3g})")
    w, u = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return SpectralDecomposition(w, u)


def validate_state(rho: np.ndarray) -> np.ndarray:
    """Check Hermiticity, unit trace and PSD; return ``rho`` as a complex array."""
    rho = np.asarray(rho, dtype=np.complex128)
    num_qubits(rho)
    err = hermiticity_error(rho)
    if err > HERM_TOL:
        raise InvalidState(f"density matrix is not Hermitian (error {err:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidState(f"density matrix has trace {tr:.12g}")
    lmin = np.linalg.eigvalsh(rho)[0]
    if lmin < -PSD_TOL:
        raise InvalidState(f"density matrix has negative eigenvalue {lmin:.3g}")
    return rho


def maximally_mixed(n: int) -> np.ndarray:
    d = 2**n
    return np.eye(d, dtype=np.complex128) / d


def _entropy_nats(p: np.ndarray) -> float:
    p = np.clip(p, 0.0, None)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def vn_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in bits; eigenvalues below zero are clipped."""
    w = eig_hermitian(rho).eigenvalues
    if w[0] < -PSD_TOL:
        raise InvalidState(f"negative eigenvalue {w[0]:.3g}")
    return _entropy_nats(w) / LN2


def rel_entropy(rho: np.ndarray, sigma: np.ndarray, log_sigma: np.ndarray | None = None) -> float:
    """Quantum relative entropy S(rho || sigma) in bits, evaluated on supports.

    When ``log_sigma`` (the exact matrix logarithm of sigma, e.g. ``H - ln Z``
    for a Gibbs state) is given it is used directly; this keeps precision when
    sigma has eigenvalues far below machine epsilon.  Otherwise raises
    :class:`SupportViolation` when rho has weight (> 1e-10) on an eigenvector
    of sigma with eigenvalue below 1e-12.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    sigma = np.asarray(sigma, dtype=np.complex128)
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    w_rho = eig_hermitian(rho).eigenvalues
    if log_sigma is not None:
        cross = float(np.real(np.vdot(np.asarray(log_sigma).conj().T, rho)))
    else:
        s, v = eig_hermitian(sigma)
        # diagonal of rho in sigma's eigenbasis
        weights = np.einsum("ki,kl,li->i", v.conj(), rho, v).real
        null = s < FULL_RANK_TOL
        if np.any(weights[null] > 1e-10):
            raise SupportViolation(
                f"rho has weight {weights[null].max():.3g} outside the support of sigma"
            )
        cross = float(np.sum(weights[~null] * np.log(s[~null])))
    val = (-_entropy_nats(w_rho) - cross) / LN2
    return max(val, 0.0) if val > -1e-9 else val


def partial_trace(rho: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Reduced state on the 1-based parties in ``keep`` (order preserved)."""
    rho = np.asarray(rho)
    n = num_qubits(rho)
    keep = sorted(set(int(i) for i in keep))
    if not keep or keep[0] < 1 or keep[-1] > n:
        raise ValueError(f"keep set must be a nonempty subset of 1..{n}, got {keep}")
    k = len(keep)
    tensor = rho.reshape((2,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(1, n + 1):
        if i not in keep:
            col[i - 1] = row[i - 1]
    out = [row[i - 1] for i in keep] + [col[i - 1] for i in keep]
    sub = "".join(row) + "".join(col) + "->" + "".join(out)
    return np.einsum(sub, tensor).reshape(2**k, 2**k)


def log_coefficients(rho: np.ndarray) -> np.ndarray:
    """Coefficients ``<O_a | ln rho> = Tr(O_a ln rho) / d`` for every code ``a``.

    Returns an array of length ``4**n`` indexed by code; entry 0 is the
    identity coefficient ``Tr(ln rho) / d``.
    """
    n = num_qubits(rho)
    spec = eig_hermitian(rho)
    if spec.eigenvalues[0] < FULL_RANK_TOL:
        raise NotFullRank(f"minimum eigenvalue {spec.eigenvalues[0]:.3g} below {FULL_RANK_TOL}")
    log_rho = spec.apply(np.log)
    return pauli_moments(log_rho, full_table(n), imag_tol=1e-8) / 2**n


def gibbs_state(h: np.ndarray, spec: SpectralDecomposition | None = None):
    """Normalised ``exp(H) / Tr exp(H)`` and ``ln Tr exp(H)``.

    Raises :class:`OverflowGuard` when the eigenvalue spread exceeds 1400.
    """
    if spec is None:
        spec = eig_hermitian(h)
    lam = spec.eigenvalues
    spread = lam[-1] - lam[0]
    if not np.isfinite(spread) or spread > MAX_SPREAD:
        raise OverflowGuard(f"eigenvalue spread {spread:.4g} exceeds {MAX_SPREAD}")
    shifted = np.exp(lam - lam[-1])
    z = shifted.sum()
    p = shifted / z
    u = spec.eigenvectors
    rho = (u * p) @ u.conj().T
    return rho, float(lam[-1] + np.log(z))


def marginal_entropies(rho: np.ndarray) -> list[float]:
    """Single-party entropies S(rho^(i)) in bits, i = 1..n."""
    n = num_qubits(rho)
    return [vn_entropy(partial_trace(rho, [i])) for i in range(1, n + 1)]
