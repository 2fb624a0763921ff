"""Projection onto generalized Voronoi cells."""

from carp.solver.oracle import brute_force_projection
from carp.solver.projection import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    ProjectionProblem,
    ProjectionResult,
    SolverOptions,
    barrier_backend,
    cvxpy_backend,
    project,
    solve_projection,
)

__all__ = [
    "INFEASIBLE", "ITERATION_LIMIT", "OPTIMAL", "ProjectionProblem", "ProjectionResult",
    "SolverOptions", "barrier_backend", "brute_force_projection", "cvxpy_backend", "project",
    "solve_projection",
]

from carp.solver.trajectory import audit_curve, solve_bezier  # noqa: E402

__all__ += ["audit_curve", "solve_bezier"]
