"""Irreducible multiparty correlations of n-qubit states.

Decomposes the total correlation of a state into irreducible m-party parts
via maximum-entropy projections in the exponential (log-Pauli) form, with a
warm-started depolarising continuation for near-pure states.
"""

__version__ = "0.1.0"

from .correlation_spectrum import (  # noqa: E402
    CorrelationRecord,
    SweepResult,
    SweepSchedule,
    correlation_levels,
    extrapolate_limit,
    product_of_marginals,
    sweep,
)
from .maxent_solver import ProjectionProblem, certify, make_problem, solve_projection  # noqa: E402
from .state_library import depolarize, dicke, ghz, random_full_rank, smolin, w  # noqa: E402

__all__ = [
    "CorrelationRecord", "ProjectionProblem", "SweepResult", "SweepSchedule", "certify",
    "correlation_levels", "depolarize", "dicke", "extrapolate_limit", "ghz", "make_problem",
    "product_of_marginals", "random_full_rank", "smolin", "solve_projection", "sweep", "w",
]
