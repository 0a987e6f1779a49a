"""Pauli-string indexing, moments, and operator synthesis for n qubits.

A Pauli string is labelled by base-4 digits ``(a_1, ..., a_n)`` with
0 = I, 1 = X, 2 = Y, 3 = Z.  Party 1 is the leftmost tensor factor, the most
significant base-4 digit of the integer code, and the most significant bit of
the computational-basis index.

Every Pauli string is a signed (phased) permutation matrix::

    O |k> = i**n_y * (-1)**popcount(k & zmask) |k ^ xmask>

so moments and synthesis run in O(d) per string without forming matrices.
Under ``<A|B> = Tr(A^dag B) / d`` the unnormalised strings are orthonormal.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

PAULI_LETTERS = "IXYZ"
DEFAULT_MAX_QUBITS = 5
HARD_MAX_QUBITS = 6
IMAG_TOL = 1e-10


class ShapeError(ValueError):
    """Invalid qubit count, matrix shape, or index."""


def max_qubits() -> int:
    """Configured qubit cap (``IRRCORR_MAX_QUBITS`` overrides the default 5)."""
    raw = os.environ.get("IRRCORR_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ShapeError(f"IRRCORR_MAX_QUBITS must be an integer, got {raw!r}") from exc
    return max(1, min(cap, HARD_MAX_QUBITS))


@dataclass(frozen=True)
class SystemShape:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ShapeError(f"qubit count must be a positive integer, got {self.n!r}")
        if self.n > max_qubits():
            raise ShapeError(f"{self.n} qubits exceeds the configured cap of {max_qubits()}")

    @property
    def d(self) -> int:
        return 2**self.n

    @classmethod
    def from_dim(cls, d: int) -> "SystemShape":
        n = int(d).bit_length() - 1
        if d < 2 or 2**n != d:
            raise ShapeError(f"dimension {d} is not a power of two")
        return cls(n)


def num_qubits(mat: np.ndarray) -> int:
    """Qubit count of a square ``2**n x 2**n`` matrix."""
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {mat.shape}")
    return SystemShape.from_dim(mat.shape[0]).n


# ---------------------------------------------------------------- indexing

def encode(digits: Sequence[int], n: int | None = None) -> int:
    """Base-4 code of a digit sequence, party 1 most significant."""
    digits = list(digits)
    if n is not None and len(digits) != n:
        raise ShapeError(f"expected {n} digits, got {len(digits)}")
    code = 0
    for a in digits:
        if a not in (0, 1, 2, 3):
            raise ShapeError(f"Pauli digit out of range: {a!r}")
        code = 4 * code + int(a)
    return code


def decode(code: int, n: int) -> tuple[int, ...]:
    if not 0 <= code < 4**n:
        raise ShapeError(f"code {code} out of range for n={n}")
    out = []
    for _ in range(n):
        code, a = divmod(code, 4)
        out.append(a)
    return tuple(reversed(out))


def from_label(label: str) -> int:
    """Code of a Pauli string written in the ``IXYZ`` alphabet, e.g. ``"XYZI"``."""
    try:
        return encode(PAULI_LETTERS.index(c) for c in label.upper())
    except ValueError as exc:
        raise ShapeError(f"invalid Pauli label {label!r}") from exc


def to_label(code: int, n: int) -> str:
    return "".join(PAULI_LETTERS[a] for a in decode(code, n))


def weight(code: int, n: int) -> int:
    """Number of non-identity factors (n minus the identity count)."""
    return sum(1 for a in decode(code, n) if a)


@lru_cache(maxsize=None)
def _weights(n: int) -> np.ndarray:
    w = np.zeros(4**n, dtype=np.int64)
    codes = np.arange(4**n)
    for _ in range(n):
        w += (codes % 4) != 0
        codes //= 4
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def index_set(n: int, m: int) -> np.ndarray:
    """Codes with ``1 <= weight <= m`` in ascending order."""
    if not 0 <= m <= n:
        raise ShapeError(f"level {m} out of range for n={n}")
    w = _weights(n)
    codes = np.flatnonzero((w >= 1) & (w <= m))
    codes.setflags(write=False)
    return codes


def weights_of(codes: Iterable[int], n: int) -> np.ndarray:
    return _weights(n)[np.asarray(list(codes) if not isinstance(codes, np.ndarray) else codes)]


# ------------------------------------------------------------ action tables

@dataclass(frozen=True)
class PauliTable:
    """Signed-permutation action of a list of Pauli strings.

    ``rows[j, k]`` is the basis index ``k ^ xmask_j`` and ``phases[j, k]`` the
    matrix element ``O_j[rows[j, k], k]``.
    """

    n: int
    codes: np.ndarray
    rows: np.ndarray
    phases: np.ndarray

    @property
    def d(self) -> int:
        return 2**self.n

    def __len__(self):
        return len(self.codes)


def _masks(codes: np.ndarray, n: int):
    xmask = np.zeros(len(codes), dtype=np.int64)
    zmask = np.zeros(len(codes), dtype=np.int64)
    ny = np.zeros(len(codes), dtype=np.int64)
    c = codes.astype(np.int64).copy()
    for bit in range(n):  # least significant digit is party n, i.e. basis bit 0
        a = c % 4
        xmask |= ((a == 1) | (a == 2)).astype(np.int64) << bit
        zmask |= ((a == 2) | (a == 3)).astype(np.int64) << bit
        ny += a == 2
        c //= 4
    return xmask, zmask, ny


def _popcount_parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    parity = np.zeros_like(v)
    while np.any(v):
        parity ^= v & 1
        v >>= 1
    return parity


def _build_table(n: int, codes: np.ndarray) -> PauliTable:
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= 4**n):
        raise ShapeError(f"Pauli code out of range for n={n}")
    d = 2**n
    k = np.arange(d, dtype=np.int64)
    xmask, zmask, ny = _masks(codes, n)
    rows = k[None, :] ^ xmask[:, None]
    signs = 1 - 2 * _popcount_parity(k[None, :] & zmask[:, None])
    phases = (1j ** (ny % 4))[:, None] * signs
    for arr in (codes, rows, phases):
        arr.setflags(write=False)
    return PauliTable(n, codes, rows, phases.astype(np.complex128))


@lru_cache(maxsize=64)
def level_table(n: int, m: int) -> PauliTable:
    """Action table for all strings of weight 1..m."""
    return _build_table(n, index_set(n, m))


@lru_cache(maxsize=None)
def full_table(n: int) -> PauliTable:
    """Action table for all ``4**n`` strings, identity included."""
    return _build_table(n, np.arange(4**n))


def table_for(n: int, codes: Sequence[int]) -> PauliTable:
    return _build_table(n, np.asarray(codes, dtype=np.int64))


def pauli_matrix(code: int, n: int) -> np.ndarray:
    """Dense matrix of one Pauli string (for tests and small checks)."""
    table = table_for(n, [code])
    mat = np.zeros((2**n, 2**n), dtype=np.complex128)
    mat[table.rows[0], np.arange(2**n)] = table.phases[0]
    return mat


# ----------------------------------------------------------------- moments

def _check_square(mat: np.ndarray, n: int):
    if mat.shape != (2**n, 2**n):
        raise ShapeError(f"matrix shape {mat.shape} does not match n={n}")


def traces(mat: np.ndarray, table: PauliTable) -> np.ndarray:
    """Complex ``Tr(O_j M)`` for every string in ``table``."""
    _check_square(mat, table.n)
    cols = np.arange(table.d)
    # Tr(O M) = sum_k O[rows_k, k] M[k, rows_k]
    return np.einsum("jk,jk->j", table.phases, mat[cols[None, :], table.rows])


def pauli_moments(rho: np.ndarray, table: PauliTable, imag_tol: float = IMAG_TOL) -> np.ndarray:
    """Real moments ``t_j = Tr(O_j rho)``; rejects a non-negligible imaginary part."""
    tr = traces(np.asarray(rho), table)
    if tr.size and np.max(np.abs(tr.imag)) > imag_tol:
        raise ShapeError(
            f"imaginary trace residue {np.max(np.abs(tr.imag)):.3g}; input is not Hermitian"
        )
    return tr.real.copy()


def pauli_moment(rho: np.ndarray, code: int | str) -> float:
    n = num_qubits(rho)
    if isinstance(code, str):
        if len(code) != n:
            raise ShapeError(f"label {code!r} has length {len(code)}, expected {n}")
        code = from_label(code)
    return float(pauli_moments(rho, table_for(n, [code]))[0])


@dataclass(frozen=True)
class MomentVector:
    """Moments ``Tr(O_a rho)`` over all strings of weight 1..level, ascending code."""

    n: int
    level: int
    values: np.ndarray

    @property
    def codes(self) -> np.ndarray:
        return index_set(self.n, self.level)

    def as_dict(self) -> dict[str, float]:
        return {to_label(int(c), self.n): float(v) for c, v in zip(self.codes, self.values)}

    def restrict(self, level: int) -> "MomentVector":
        """Moments of a lower level (a subset of this one)."""
        if level > self.level:
            raise ShapeError(f"cannot restrict level {self.level} moments to level {level}")
        keep = np.isin(self.codes, index_set(self.n, level))
        return MomentVector(self.n, level, self.values[keep])


def moment_vector(rho: np.ndarray, m: int) -> MomentVector:
    n = num_qubits(rho)
    if not 1 <= m <= n:
        raise ShapeError(f"level {m} out of range for n={n}")
    values = pauli_moments(rho, level_table(n, m))
    return MomentVector(n, m, values)


# --------------------------------------------------------------- synthesis

def synthesize_table(table: PauliTable, coefficients: np.ndarray) -> np.ndarray:
    """``sum_j c_j O_j`` as a dense Hermitian matrix."""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (len(table),):
        raise ShapeError("coefficient vector does not match the index table")
    if not np.all(np.isfinite(coefficients)):
        raise ValueError("non-finite coefficient")
    d = table.d
    weights = coefficients[:, None] * table.phases
    flat = (table.rows * d + np.arange(d)[None, :]).ravel()
    re = np.bincount(flat, weights=weights.real.ravel(), minlength=d * d)
    im = np.bincount(flat, weights=weights.imag.ravel(), minlength=d * d)
    return (re + 1j * im).reshape(d, d)


def synthesize(coefficients: Mapping[str | int, float], n: int | None = None) -> np.ndarray:
    """Hermitian matrix ``sum_a theta_a O_a`` from a label/code -> value map.

    Labels may be ``"XYZI"`` strings or integer codes; integer codes need ``n``.
    An empty map needs ``n`` as well.
    """
    codes, values = [], []
    for key, val in coefficients.items():
        if isinstance(key, str):
            if n is None:
                n = len(key)
            elif len(key) != n:
                raise ShapeError(f"label {key!r} does not have length {n}")
            codes.append(from_label(key))
        else:
            codes.append(int(key))
        values.append(float(val))
    if n is None:
        raise ShapeError("qubit count required")
    return synthesize_table(table_for(n, codes), np.array(values, dtype=float))
