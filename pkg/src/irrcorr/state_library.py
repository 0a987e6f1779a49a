"""Benchmark states, depolarisation, random full-rank ensembles and state files."""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .matrix_core import InvalidState, maximally_mixed, validate_state
from .operator_basis import (
    PAULI_LETTERS,
    ShapeError,
    SystemShape,
    from_label,
    num_qubits,
    synthesize,
)

STATE_FORMAT = "irrcorr-state-v1"


def _check_n(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ShapeError(f"need at least 2 qubits, got {n!r}")
    SystemShape(int(n))
    return int(n)


def _projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def ghz(n: int) -> np.ndarray:
    n = _check_n(n)
    psi = np.zeros(2**n)
    psi[0] = psi[-1] = 1.0
    return _projector(psi)


def dicke(n: int, k: int) -> np.ndarray:
    """Symmetric state with ``k`` excitations, all amplitudes equal and positive."""
    n = _check_n(n)
    if not 0 <= k <= n:
        raise ShapeError(f"excitation count {k} out of range 0..{n}")
    psi = np.zeros(2**n)
    for ones in combinations(range(n), k):
        psi[sum(1 << (n - 1 - i) for i in ones)] = 1.0
    return _projector(psi)


def w(n: int) -> np.ndarray:
    return dicke(n, 1)


def smolin() -> np.ndarray:
    """Four-qubit Smolin state (I + XXXX + YYYY + ZZZZ) / 16."""
    return synthesize({"IIII": 1.0, "XXXX": 1.0, "YYYY": 1.0, "ZZZZ": 1.0}) / 16.0


def depolarize(rho: np.ndarray, p0: float) -> np.ndarray:
    """``p0 * I/d + (1 - p0) * rho``."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"mixing weight p0={p0} outside [0, 1]")
    n = num_qubits(rho)
    return p0 * maximally_mixed(n) + (1.0 - p0) * np.asarray(rho, dtype=np.complex128)


def random_full_rank(n: int, seed: int, floor: float = 1e-3) -> np.ndarray:
    """Ginibre-induced random state mixed with I/d so that lambda_min >= floor/(1+floor*d)."""
    n = _check_n(n)
    d = 2**n
    rng = np.random.default_rng(seed)
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    rho0 = g @ g.conj().T
    rho0 /= np.trace(rho0).real
    q = floor * d / (1.0 + floor * d)
    rho = (1.0 - q) * rho0 + q * maximally_mixed(n)
    return 0.5 * (rho + rho.conj().T)


# ------------------------------------------------------------ descriptors

@dataclass(frozen=True)
class StateDescriptor:
    """A parsed state specification such as ``ghz:4@p0=0.001``."""

    kind: str
    n: int | None = None
    k: int | None = None
    seed: int | None = None
    path: str | None = None
    p0: float | None = None

    def to_spec(self) -> str:
        if self.kind in ("ghz", "w"):
            base = f"{self.kind}:{self.n}"
        elif self.kind == "dicke":
            base = f"dicke:{self.n}:{self.k}"
        elif self.kind == "smolin":
            base = "smolin"
        elif self.kind == "random":
            base = f"random:{self.n}:seed={self.seed}"
        elif self.kind == "file":
            base = f"file:{self.path}"
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.p0 is not None:
            base += f"@p0={self.p0!r}"
        return base

    def build(self) -> np.ndarray:
        if self.kind == "ghz":
            rho = ghz(self.n)
        elif self.kind == "w":
            rho = w(self.n)
        elif self.kind == "dicke":
            rho = dicke(self.n, self.k)
        elif self.kind == "smolin":
            rho = smolin()
        elif self.kind == "random":
            rho = random_full_rank(self.n, self.seed)
        elif self.kind == "file":
            rho = load_state(self.path)
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.p0 is not None:
            rho = depolarize(rho, self.p0)
        return rho


# ------------------------------------------------------------- state files

def save_state(path, rho: np.ndarray) -> None:
    """Write a dense state file (row-major real and imaginary parts)."""
    rho = validate_state(rho)
    doc = {
        "format": STATE_FORMAT,
        "kind": "dense",
        "n": num_qubits(rho),
        "real": rho.real.tolist(),
        "imag": rho.imag.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _parse_pauli(doc: dict) -> np.ndarray:
    n = int(doc["n"])
    SystemShape(n)
    coeffs = doc["coefficients"]
    if not isinstance(coeffs, dict):
        raise InvalidState("pauli coefficients must be a mapping")
    identity = "I" * n
    if identity in coeffs and float(coeffs[identity]) != 1.0:
        raise InvalidState("all-identity coefficient must be 1")
    terms = {identity: 1.0}
    for label, val in coeffs.items():
        if len(label) != n or any(c not in PAULI_LETTERS for c in label.upper()):
            raise InvalidState(f"bad Pauli label {label!r} for n={n}")
        from_label(label)
        terms[label.upper()] = float(val)
    return synthesize(terms) / 2**n


def load_state(path) -> np.ndarray:
    """Read and validate a state file (``dense`` or ``pauli`` kind)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidState(f"{path}: not a valid state file ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != STATE_FORMAT:
        raise InvalidState(f"{path}: missing format tag {STATE_FORMAT!r}")
    kind = doc.get("kind")
    try:
        if kind == "dense":
            n = int(doc["n"])
            SystemShape(n)
            rho = np.array(doc["real"], dtype=float) + 1j * np.array(doc["imag"], dtype=float)
            if rho.shape != (2**n, 2**n):
                raise InvalidState(f"matrix shape {rho.shape} does not match n={n}")
        elif kind == "pauli":
            rho = _parse_pauli(doc)
        else:
            raise InvalidState(f"unknown state-file kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (InvalidState, ShapeError)):
            raise
        raise InvalidState(f"{path}: malformed state file ({exc})") from exc
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise InvalidState(f"{path}: trace {tr:.9g} differs from 1")
    lmin = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lmin < -1e-10:
        raise InvalidState(f"{path}: negative eigenvalue {lmin:.3g}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise InvalidState(f"{path}: matrix is not Hermitian")
    return rho / tr
