"""Maximum-entropy information projection onto the level-m exponential family.

The projection of rho onto states whose logarithm has only Pauli terms of
weight <= m is found by minimising the convex dual

    F(theta) = ln Tr exp(H(theta)) - sum_a theta_a t_a,   H(theta) = sum_a theta_a O_a

over the weight-1..m coefficients.  Its gradient is the moment mismatch
``Tr(O_a sigma(theta)) - t_a``, so a stationary point reproduces every
<=m-party moment of rho, while the absence of higher-weight terms in ln sigma
holds by construction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .matrix_core import NotFullRank, OverflowGuard, eig_hermitian, log_coefficients  # noqa: F401
from .operator_basis import (
    MomentVector,
    ShapeError,
    index_set,
    level_table,
    moment_vector,
    num_qubits,
    pauli_moments,
    synthesize_table,
    to_label,
    weights_of,
)

# Newton with an explicit Hessian up to this many coefficients (covers n <= 5).
NEWTON_MAX_SIZE = 1100
ARMIJO_C = 1e-4
BACKTRACK = 0.5
LEVENBERG_START = 1e-10


class SolverError(RuntimeError):
    """Base class for projection failures; ``result`` holds the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MaxIterations(SolverError):
    pass


class BoundaryDivergence(SolverError):
    pass


@dataclass(frozen=True)
class ProjectionProblem:
    targets: MomentVector
    tolerance: float = 1e-9
    max_iterations: int = 500
    theta_cap: float = 60.0

    def __post_init__(self):
        if not 1 <= self.m <= self.n - 1:
            raise ShapeError(f"projection level {self.m} must lie in 1..{self.n - 1}")
        if self.tolerance <= 0 or self.theta_cap <= 0:
            raise ValueError("tolerance and theta_cap must be positive")
        if len(self.targets.values) != len(index_set(self.n, self.m)):
            raise ShapeError("targets do not cover the level index set")

    @property
    def n(self) -> int:
        return self.targets.n

    @property
    def m(self) -> int:
        return self.targets.level

    @property
    def size(self) -> int:
        return len(self.targets.values)


def make_problem(rho: np.ndarray, m: int, **kwargs) -> ProjectionProblem:
    """Projection problem whose targets are the weight-1..m moments of ``rho``."""
    return ProjectionProblem(moment_vector(rho, m), **kwargs)


@dataclass(frozen=True)
class ThetaVector:
    """Free log-coefficients over the weight-1..m strings, ascending code."""

    n: int
    level: int
    values: np.ndarray

    @property
    def codes(self) -> np.ndarray:
        return index_set(self.n, self.level)

    @classmethod
    def zeros(cls, n: int, level: int) -> "ThetaVector":
        return cls(n, level, np.zeros(len(index_set(n, level))))

    def as_dict(self) -> dict[str, float]:
        return {to_label(int(c), self.n): float(v) for c, v in zip(self.codes, self.values)}

    def hamiltonian(self) -> np.ndarray:
        return synthesize_table(level_table(self.n, self.level), self.values)


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    final_residual: float
    theta_norm: float
    boundary_flag: bool = False
    method: str = "newton"
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class ProjectionResult:
    state: np.ndarray
    theta: ThetaVector
    lnZ: float
    report: SolverReport

    def log_state(self) -> np.ndarray:
        """Exact ``ln rho_m = H(theta) - ln Z``, free of eigenvalue round-off."""
        h = self.theta.hamiltonian()
        return h - self.lnZ * np.eye(len(h))


@dataclass(frozen=True)
class Certificate:
    """Residuals of the two defining equation sets at a candidate projection.

    ``log_residual``: largest |<O_a|ln rho_m>| over weight > m.
    ``moment_residual``: largest |Tr(O_a rho_m) - Tr(O_a rho)| over weight <= m.
    """

    log_residual: float
    moment_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.log_residual <= self.threshold and self.moment_residual <= self.threshold


# ------------------------------------------------------------- evaluation

class _Point:
    """Spectral data of sigma(theta) shared by value, gradient and Hessian."""

    def __init__(self, theta: np.ndarray, problem: ProjectionProblem):
        table = level_table(problem.n, problem.m)
        self.theta = theta
        self.table = table
        self.spec = eig_hermitian(synthesize_table(table, theta))
        lam = self.spec.eigenvalues
        spread = lam[-1] - lam[0]
        if not np.isfinite(spread) or spread > 1400.0:
            raise OverflowGuard(f"eigenvalue spread {spread:.4g} exceeds 1400")
        shifted = np.exp(lam - lam[-1])
        z = shifted.sum()
        self.p = shifted / z
        self.lnZ = float(lam[-1] + np.log(z))
        u = self.spec.eigenvectors
        self.state = (u * self.p) @ u.conj().T
        self.moments = pauli_moments(self.state, table, imag_tol=1e-8)
        self.value = self.lnZ - float(theta @ problem.targets.values)
        self.grad = self.moments - problem.targets.values


def _divided_difference_weights(lam: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``(e^li - e^lj) / ((li - lj) Z)`` with the diagonal limit ``p_i``.

    Evaluated as ``p_hi * expm1(-delta) / (-delta)`` with ``p_hi`` the larger
    weight, so nothing overflows and coincident eigenvalues are exact.
    """
    diff = lam[:, None] - lam[None, :]
    hi = np.where(diff >= 0, p[:, None], p[None, :])
    x = -np.abs(diff)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(x < 0, np.expm1(x) / np.where(x < 0, x, 1.0), 1.0)
    return hi * g


def _hessian_at(point: _Point) -> np.ndarray:
    table = point.table
    u = point.spec.eigenvectors
    k, d = len(table), table.d
    # (O_a U)[rows[a, r], :] = phase[a, r] * U[r, :]
    ou = np.empty((k, d, d), dtype=np.complex128)
    ou[np.arange(k)[:, None], table.rows, :] = table.phases[:, :, None] * u[None, :, :]
    proj = u.conj().T[None, :, :] @ ou  # U^dag O_a U
    phi = _divided_difference_weights(point.spec.eigenvalues, point.p).ravel()
    flat = proj.reshape(k, d * d)
    hess = ((flat.conj() * phi) @ flat.T).real
    hess -= np.outer(point.moments, point.moments)
    return 0.5 * (hess + hess.T)


def dual_objective_grad(theta: ThetaVector | np.ndarray, problem: ProjectionProblem):
    """Dual value ``ln Z(theta) - theta . t`` and its gradient (moment mismatch)."""
    point = _Point(_theta_values(theta, problem), problem)
    return point.value, point.grad.copy()


def hessian(theta: ThetaVector | np.ndarray, problem: ProjectionProblem) -> np.ndarray:
    """Exact dual Hessian: covariance of the Pauli strings under the Fréchet
    derivative of the matrix exponential (divided differences in the eigenbasis)."""
    return _hessian_at(_Point(_theta_values(theta, problem), problem))


def _theta_values(theta, problem: ProjectionProblem) -> np.ndarray:
    if isinstance(theta, ThetaVector):
        if (theta.n, theta.level) != (problem.n, problem.m):
            raise ShapeError("theta level does not match the problem")
        theta = theta.values
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (problem.size,):
        raise ShapeError(f"theta has shape {theta.shape}, expected ({problem.size},)")
    return theta


# ------------------------------------------------------------------ solve

def _result(point: _Point, problem: ProjectionProblem, iterations: int, converged: bool,
            boundary: bool, method: str, start: float) -> ProjectionResult:
    report = SolverReport(
        converged=converged,
        iterations=iterations,
        final_residual=float(np.max(np.abs(point.grad), initial=0.0)),
        theta_norm=float(np.max(np.abs(point.theta), initial=0.0)),
        boundary_flag=boundary,
        method=method,
        wall_time=time.perf_counter() - start,
    )
    theta = ThetaVector(problem.n, problem.m, point.theta.copy())
    return ProjectionResult(point.state, theta, point.lnZ, report)


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    mu = 0.0
    eye = np.eye(len(grad))
    scale = max(1.0, float(np.max(np.abs(np.diag(hess)))))
    while True:
        try:
            factor = scipy.linalg.cho_factor(hess + mu * scale * eye, check_finite=False)
            return -scipy.linalg.cho_solve(factor, grad, check_finite=False)
        except np.linalg.LinAlgError:
            mu = LEVENBERG_START if mu == 0.0 else 10.0 * mu
            if mu > 1e6:
                return -grad


def _try_point(theta: np.ndarray, problem: ProjectionProblem):
    try:
        return _Point(theta, problem)
    except OverflowGuard:
        return None


def _solve_newton(problem: ProjectionProblem, theta0: np.ndarray, start: float):
    point = _Point(theta0, problem)
    tol = problem.tolerance
    for it in range(problem.max_iterations + 1):
        residual = np.max(np.abs(point.grad), initial=0.0)
        if residual <= tol:
            return _result(point, problem, it, True, False, "newton", start)
        if np.max(np.abs(point.theta), initial=0.0) > problem.theta_cap:
            res = _result(point, problem, it, False, True, "newton", start)
            raise BoundaryDivergence(
                f"|theta|_max = {res.report.theta_norm:.3g} exceeds cap {problem.theta_cap}", res)
        if it == problem.max_iterations:
            break
        step = _newton_direction(_hessian_at(point), point.grad)
        slope = float(point.grad @ step)
        if slope >= 0:  # direction lost to round-off; fall back to steepest descent
            step, slope = -point.grad, -float(point.grad @ point.grad)
        alpha, accepted = 1.0, None
        while alpha > 1e-14:
            trial = _try_point(point.theta + alpha * step, problem)
            if trial is not None:
                if trial.value <= point.value + ARMIJO_C * alpha * slope:
                    accepted = trial
                    break
                # dual value is flat to round-off near the optimum
                if -slope < 1e-14 and np.max(np.abs(trial.grad)) < residual:
                    accepted = trial
                    break
            alpha *= BACKTRACK
        if accepted is None:
            break
        point = accepted
    res = _result(point, problem, it, False, False, "newton", start)
    raise MaxIterations(f"residual {res.report.final_residual:.3g} after {it} iterations", res)


def _solve_quasi_newton(problem: ProjectionProblem, theta0: np.ndarray, start: float):
    cache: dict = {}

    def fun(theta):
        pt = _try_point(theta, problem)
        if pt is None:
            return np.inf, np.zeros_like(theta)
        cache["last"] = pt
        if "best" not in cache or np.max(np.abs(pt.grad)) < np.max(np.abs(cache["best"].grad)):
            cache["best"] = pt
        return pt.value, pt.grad

    out = scipy.optimize.minimize(
        fun, theta0, jac=True, method="L-BFGS-B",
        options={"maxiter": problem.max_iterations, "gtol": problem.tolerance,
                 "ftol": 0.0, "maxcor": 50},
    )
    point = cache.get("best") or _Point(theta0, problem)
    converged = np.max(np.abs(point.grad), initial=0.0) <= problem.tolerance
    boundary = np.max(np.abs(point.theta), initial=0.0) > problem.theta_cap
    res = _result(point, problem, int(out.nit), bool(converged and not boundary), boundary,
                  "lbfgs", start)
    if boundary:
        raise BoundaryDivergence(f"|theta|_max exceeds cap {problem.theta_cap}", res)
    if not converged:
        raise MaxIterations(f"residual {res.report.final_residual:.3g} not reached", res)
    return res


def solve_projection(problem: ProjectionProblem,
                     theta_init: ThetaVector | np.ndarray | None = None) -> ProjectionResult:
    """Information projection of the targets' state onto the level-m family.

    Damped Newton (Cholesky with Levenberg fallback, Armijo backtracking) for
    up to ``NEWTON_MAX_SIZE`` coefficients, L-BFGS above that.  Raises
    :class:`BoundaryDivergence` when ``|theta|_max`` passes ``theta_cap`` and
    :class:`MaxIterations` when the residual tolerance is not reached; both
    carry the best iterate in ``.result``.
    """
    start = time.perf_counter()
    if theta_init is None:
        theta0 = np.zeros(problem.size)
    else:
        theta0 = _theta_values(theta_init, problem).copy()
    if problem.size <= NEWTON_MAX_SIZE:
        return _solve_newton(problem, theta0, start)
    return _solve_quasi_newton(problem, theta0, start)


def certify(result: ProjectionResult, targets: MomentVector, m: int | None = None,
            tolerance: float = 1e-9) -> Certificate:
    """Check both equation sets directly at ``result.state``.

    ``targets`` may be of any level >= m; only weights <= m are compared.
    Passing means both residuals are within ``10 * tolerance``.
    """
    state = result.state
    n = num_qubits(state)
    if m is None:
        m = result.theta.level
    coeffs = log_coefficients(state)  # raises NotFullRank
    w = weights_of(np.arange(4**n), n)
    log_res = float(np.max(np.abs(coeffs[w > m]), initial=0.0))
    ref = targets.restrict(m) if targets.level != m else targets
    got = pauli_moments(state, level_table(n, m), imag_tol=1e-8)
    mom_res = float(np.max(np.abs(got - ref.values), initial=0.0))
    return Certificate(log_res, mom_res, 10.0 * tolerance)

