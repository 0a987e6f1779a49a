"""Independent checks: classical iterative proportional fitting on diagonal
states and closed forms for two parties.

Nothing here touches the quantum solver, so agreement is a genuine
cross-validation.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from .matrix_core import NotFullRank, eig_hermitian, partial_trace, vn_entropy
from .operator_basis import ShapeError, SystemShape, num_qubits

IPF_FLOOR = 1e-9


class NotDiagonal(ValueError):
    pass


class IPFNotConverged(RuntimeError):
    pass


def _check_distribution(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    SystemShape.from_dim(len(p))
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    return p


def diagonal_embedding(p: np.ndarray) -> np.ndarray:
    """Diagonal density matrix of a distribution over n bits (bit 1 most significant)."""
    return np.diag(_check_distribution(p)).astype(np.complex128)


def diagonal_extraction(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho)
    num_qubits(rho)
    off = rho - np.diag(np.diag(rho))
    if np.max(np.abs(off)) > tol:
        raise NotDiagonal(f"off-diagonal magnitude {np.max(np.abs(off)):.3g} exceeds {tol}")
    return np.diag(rho).real.copy()


def _marginal(q: np.ndarray, keep: tuple[int, ...], n: int) -> np.ndarray:
    drop = tuple(i for i in range(n) if i not in keep)
    return q.sum(axis=drop, keepdims=True)


def ipf_maxent(p: np.ndarray, m: int, tol: float = 1e-12, max_cycles: int = 100_000) -> np.ndarray:
    """Maximum-entropy distribution sharing every m-variable marginal of ``p``.

    Starts from uniform and cyclically rescales onto each m-subset marginal
    until the largest marginal mismatch is at most ``tol``.  ``p`` is first
    mixed with the uniform distribution at weight 1e-9 so every entry is
    positive.
    """
    p = _check_distribution(p)
    n = SystemShape.from_dim(len(p)).n
    if not 1 <= m <= n:
        raise ShapeError(f"level {m} out of range for n={n}")
    p = (1.0 - IPF_FLOOR) * p + IPF_FLOOR / len(p)
    shape = (2,) * n
    target = p.reshape(shape)
    subsets = list(combinations(range(n), m))
    margins = [_marginal(target, s, n) for s in subsets]
    q = np.full(shape, 1.0 / len(p))
    for _ in range(max_cycles):
        for s, mt in zip(subsets, margins):
            q = q * (mt / _marginal(q, s, n))
        err = max(np.max(np.abs(_marginal(q, s, n) - mt)) for s, mt in zip(subsets, margins))
        if err <= tol:
            return q.ravel()
    raise IPFNotConverged(f"IPF did not reach {tol} in {max_cycles} cycles (error {err:.3g})")


def mutual_information_check(rho: np.ndarray) -> float:
    """S(rho_A) + S(rho_B) - S(rho_AB) in bits for a full-rank two-qubit state."""
    if num_qubits(rho) != 2:
        raise ShapeError("mutual information check needs exactly two qubits")
    if eig_hermitian(rho).eigenvalues[0] < 1e-12:
        raise NotFullRank("two-qubit state is not full rank")
    return (vn_entropy(partial_trace(rho, [1])) + vn_entropy(partial_trace(rho, [2]))
            - vn_entropy(rho))


def random_distribution(n: int, seed: int) -> np.ndarray:
    """Strictly positive random distribution on n bits (Dirichlet(1))."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(2**n))
