"""Irreducible m-party correlations of one state and the depolarising sweep.

For a state rho on n qubits, rho_1 is the product of its marginals, rho_m
(2 <= m <= n-1) the max-entropy projection matching all <=m-party moments,
and rho_n = rho.  Then

    C_m = S(rho_m || rho_{m-1}),    C_T = S(rho || rho_1) = sum_m C_m.

The sweep walks ``rho(p0) = p0 I/d + (1 - p0) rho`` from p0 = 1 down to 0 and
warm-starts every projection from the solution at the previous grid point.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .matrix_core import (
    FULL_RANK_TOL,
    OverflowGuard,
    eig_hermitian,
    marginal_entropies,
    partial_trace,
    rel_entropy,
    vn_entropy,
)
from .maxent_solver import (
    ProjectionProblem,
    ProjectionResult,
    SolverError,
    ThetaVector,
    solve_projection,
)
from .operator_basis import moment_vector, num_qubits
from .state_library import depolarize

log = logging.getLogger(__name__)

NEG_TOL = 1e-6
IDENTITY_TOL = 1e-6


class NegativeCorrelation(ArithmeticError):
    """A converged correlation came out below -1e-6 bits."""


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class SweepSchedule:
    N: int = 100

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")

    def p0(self, k: int) -> float:
        if not 0 <= k <= self.N:
            raise ValueError(f"k={k} outside 0..{self.N}")
        return (self.N - k) / self.N

    def __iter__(self):
        return ((k, self.p0(k)) for k in range(self.N + 1))


@dataclass
class CorrelationRecord:
    """Correlation decomposition of one state, all values in bits.

    ``level_flags`` maps each solved projection level to ``"ok"``,
    ``"boundary"`` or ``"maxiter"``.  ``C_bits`` maps m to C_m for the
    requested levels.
    """

    S_bits: float
    C_T_bits: float
    C_bits: dict[int, float]
    max_residual: float = 0.0
    iterations_total: int = 0
    level_flags: dict[int, str] = field(default_factory=dict)
    chain_entropies: dict[int, float] = field(default_factory=dict)
    identity_gaps: dict[int, float] = field(default_factory=dict)
    marginal_sum_bits: float = 0.0
    k: int | None = None
    p0: float | None = None
    projections: dict[int, ProjectionResult] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return max(self.chain_entropies)

    def level_ok(self, m: int) -> bool:
        """True when C_m rests only on converged projections."""
        return all(self.level_flags.get(j, "ok") == "ok" for j in (m - 1, m))

    @property
    def converged(self) -> bool:
        return all(f == "ok" for f in self.level_flags.values())

    @property
    def flag_text(self) -> str:
        bad = [f"rho{m}:{f}" for m, f in sorted(self.level_flags.items()) if f != "ok"]
        bad += [f"C{m}:identity" for m, g in sorted(self.identity_gaps.items())
                if g > IDENTITY_TOL and self.level_ok(m)]
        return ";".join(bad) if bad else "ok"


@dataclass
class SweepResult:
    records: list[CorrelationRecord]
    metadata: dict

    @property
    def levels(self) -> list[int]:
        return sorted(self.records[0].C_bits) if self.records else []


def product_of_marginals(rho: np.ndarray) -> np.ndarray:
    n = num_qubits(rho)
    return reduce(np.kron, [partial_trace(rho, [i]) for i in range(1, n + 1)])


def _product_log(rho: np.ndarray):
    """``sum_i ln rho^(i)`` embedded on n qubits, or None if a marginal is singular."""
    n = num_qubits(rho)
    out = np.zeros((2**n, 2**n), dtype=np.complex128)
    for i in range(1, n + 1):
        spec = eig_hermitian(partial_trace(rho, [i]))
        if spec.eigenvalues[0] < FULL_RANK_TOL:
            return None
        local = spec.apply(np.log)
        out += np.kron(np.kron(np.eye(2**(i - 1)), local), np.eye(2**(n - i)))
    return out


def _needed_levels(n: int, levels) -> list[int]:
    need = set()
    for m in levels:
        need.update(j for j in (m - 1, m) if 2 <= j <= n - 1)
    return sorted(need)


def _solve_level(targets, warm, tol, max_iterations, theta_cap):
    problem = ProjectionProblem(targets, tolerance=tol, max_iterations=max_iterations,
                                theta_cap=theta_cap)
    try:
        try:
            return solve_projection(problem, warm), "ok"
        except OverflowGuard:
            if warm is None:
                raise
            log.debug("warm start overflowed at level %d; restarting cold", problem.m)
            return solve_projection(problem, None), "ok"
    except SolverError as exc:
        flag = "boundary" if exc.result.report.boundary_flag else "maxiter"
        log.debug("level %d: %s", problem.m, exc)
        return exc.result, flag


def correlation_levels(rho: np.ndarray, warm: dict[int, ThetaVector] | None = None,
                       tol: float = 1e-9, levels=None, max_iterations: int = 500,
                       theta_cap: float = 60.0):
    """Decompose the total correlation of ``rho`` into C_2..C_n.

    Parameters
    ----------
    rho : ndarray
        Density matrix on n >= 2 qubits.
    warm : dict, optional
        Per-level initial theta (from a nearby state).
    levels : iterable of int, optional
        Which C_m to report; default all of 2..n.

    Returns
    -------
    record : CorrelationRecord
    thetas : dict mapping projection level to its ThetaVector
    """
    rho = np.asarray(rho, dtype=np.complex128)
    n = num_qubits(rho)
    if n < 2:
        raise ValueError("correlations need at least two parties")
    levels = list(range(2, n + 1)) if levels is None else sorted(set(levels))
    if any(not 2 <= m <= n for m in levels):
        raise ValueError(f"levels must lie in 2..{n}, got {levels}")
    warm = warm or {}

    chain = {1: product_of_marginals(rho), n: rho}
    logs = {1: _product_log(rho)}
    need = _needed_levels(n, levels)
    flags, projections, thetas = {}, {}, {}
    residual, iterations = 0.0, 0
    if need:
        top = moment_vector(rho, max(need))
        for m in need:
            targets = top if m == top.level else top.restrict(m)
            result, flag = _solve_level(targets, warm.get(m), tol, max_iterations, theta_cap)
            chain[m] = result.state
            flags[m] = flag
            projections[m] = result
            logs[m] = result.log_state()
            thetas[m] = result.theta
            residual = max(residual, result.report.final_residual)
            iterations += result.report.iterations

    entropies = {m: vn_entropy(s) for m, s in chain.items()}
    record = CorrelationRecord(
        S_bits=entropies[n],
        C_T_bits=_clamp(rel_entropy(rho, chain[1], logs[1]), True, "C_T"),
        C_bits={},
        max_residual=residual,
        iterations_total=iterations,
        level_flags=flags,
        chain_entropies=entropies,
        marginal_sum_bits=float(sum(marginal_entropies(rho))),
        projections=projections,
    )
    for m in levels:
        c = rel_entropy(chain[m], chain[m - 1], logs.get(m - 1))
        record.identity_gaps[m] = abs(c - (entropies[m - 1] - entropies[m]))
        record.C_bits[m] = _clamp(c, record.level_ok(m), f"C_{m}")
    return record, thetas


def _clamp(value: float, trusted: bool, name: str) -> float:
    if value >= 0.0:
        return value
    if value >= -NEG_TOL or not trusted:
        return 0.0 if value >= -NEG_TOL else value
    raise NegativeCorrelation(f"{name} = {value:.3g} bits from converged projections")


def sweep(rho_target: np.ndarray, schedule: SweepSchedule | None = None, tol: float = 1e-9,
          levels=None, max_iterations: int = 500, theta_cap: float = 60.0,
          progress=None) -> SweepResult:
    """Depolarising continuation from I/d (k = 0) to ``rho_target`` (k = N).

    Each projection level is warm-started from its solution at k - 1; a level
    that hits the theta cap keeps its last good start for later points.
    """
    schedule = schedule or SweepSchedule()
    rho_target = np.asarray(rho_target, dtype=np.complex128)
    n = num_qubits(rho_target)
    warm: dict[int, ThetaVector] = {}
    records = []
    for k, p0 in schedule:
        rho = depolarize(rho_target, p0)
        record, thetas = correlation_levels(rho, warm, tol=tol, levels=levels,
                                            max_iterations=max_iterations, theta_cap=theta_cap)
        record.k, record.p0 = k, p0
        record.projections = {}  # keep sweeps light
        for m, theta in thetas.items():
            if record.level_flags[m] == "ok":
                warm[m] = theta
        records.append(record)
        if progress is not None:
            progress(record)
    metadata = {
        "n": n,
        "N": schedule.N,
        "tolerance": tol,
        "levels": sorted(records[0].C_bits),
        "max_iterations": max_iterations,
        "theta_cap": theta_cap,
        "k_stop": records[-1].k,
    }
    return SweepResult(records, metadata)


def extrapolate_limit(result: SweepResult) -> dict:
    """Linear extrapolation to p0 = 0 from the two smallest-p0 usable records.

    Returns ``{m: (estimate, (p0_a, p0_b))}`` per level plus ``"C_T"``.
    Estimates are reported alongside, never instead of, the raw values.
    """
    out = {}
    keys = [*result.levels, "C_T"]
    for key in keys:
        pts = []
        for rec in sorted(result.records, key=lambda r: r.p0):
            ok = rec.converged if key == "C_T" else rec.level_ok(key)
            if ok:
                pts.append((rec.p0, rec.C_T_bits if key == "C_T" else rec.C_bits[key]))
            if len(pts) == 2:
                break
        if len(pts) < 2:
            raise InsufficientData(f"fewer than two converged records for {key}")
        (x0, y0), (x1, y1) = pts
        if x0 == 0.0:
            estimate = y0
        else:
            estimate = y0 - x0 * (y1 - y0) / (x1 - x0)
        out[key] = (float(estimate), (x0, x1))
    return out
