"""Projection of a goal point onto a generalized Voronoi cell."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from carp.sets import Ellipsoid, Polyhedron, Region
from carp.voronoi import VoronoiConstraint, cell_membership, constraints_for
from carp.solver.core import BarrierProgram, EllipsoidGroup, MatrixFractionalBlock

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iterations: int = 100
    barrier_mu: float = 10.0
    audit: bool = True

    def __post_init__(self):
        if min(self.feasibility_tol, self.gap_tol) <= 0 or self.max_iterations < 1:
            raise ValueError("solver tolerances and iteration limit must be positive")
        if self.barrier_mu <= 1:
            raise ValueError("barrier_mu must exceed 1")


@dataclass
class ProjectionProblem:
    anchor: np.ndarray
    goal: np.ndarray
    constraints: list[VoronoiConstraint] = field(default_factory=list)
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        self.anchor = np.asarray(self.anchor, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        if self.anchor.shape != self.goal.shape or self.anchor.ndim != 1:
            raise ValueError("anchor and goal must be vectors of equal length")
        if not (np.all(np.isfinite(self.anchor)) and np.all(np.isfinite(self.goal))):
            raise ValueError("anchor and goal must be finite")
        for c in self.constraints:
            if c.region.dim != self.anchor.size:
                raise ValueError("constraint region dimension does not match the anchor")

    @classmethod
    def from_regions(cls, anchor, goal, regions: Sequence[Region], options=None) -> "ProjectionProblem":
        return cls(anchor, goal, constraints_for(anchor, regions), options or SolverOptions())

    @property
    def regions(self) -> list[Region]:
        return [c.region for c in self.constraints]


@dataclass
class ProjectionResult:
    status: str
    point: np.ndarray
    multipliers: list[np.ndarray]
    objective: float
    iterations: int = 0
    wall_time: float = 0.0
    audit_passed: bool | None = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def build_groups(constraints: Sequence[VoronoiConstraint], maps):
    """Constraint groups for points ``p_k = M_k z + f_k`` against every region.

    All (point, ellipsoid) pairs share one vectorized group; other regions get
    one block each.  Returns the groups and, for each point and constraint,
    ``(group index, slot)`` so multipliers can be mapped back.
    """
    maps = [(np.asarray(M, dtype=float), np.asarray(f, dtype=float)) for M, f in maps]
    ells = [(i, c) for i, c in enumerate(constraints) if isinstance(c.region, Ellipsoid)]
    others = [(i, c) for i, c in enumerate(constraints) if not isinstance(c.region, Ellipsoid)]
    groups = []
    where = [[None] * len(constraints) for _ in maps]
    if ells:
        pairs = [(k, i, c) for k in range(len(maps)) for i, c in ells]
        groups.append(EllipsoidGroup(
            np.array([maps[k][0] for k, _, _ in pairs]),
            np.array([maps[k][1] for k, _, _ in pairs]),
            np.array([c.anchor for _, _, c in pairs]),
            np.array([c.region.center for _, _, c in pairs]),
            np.array([c.region.eig[0] for _, _, c in pairs]),
            np.array([c.region.eig[1] for _, _, c in pairs]),
        ))
        for slot, (k, i, _) in enumerate(pairs):
            where[k][i] = (0, slot)
    for k, (M, f) in enumerate(maps):
        for i, c in others:
            R = c.region
            if isinstance(R, Polyhedron):
                A, b, forms = R.A, R.b, []
            else:
                A = None if R.polyhedron is None else R.polyhedron.A
                b = None if R.polyhedron is None else R.polyhedron.b
                forms = [E.quadratic_form() for E in R.ellipsoids]
            where[k][i] = (len(groups), None)
            groups.append(MatrixFractionalBlock(M, f, c.anchor, A, b, forms))
    return groups, where


def _split_multipliers(lams, where):
    out = []
    for gi, slot in where:
        out.append(np.atleast_1d(lams[gi][slot]) if slot is not None else np.asarray(lams[gi]))
    return out


class ProjectionBackend(Protocol):
    def __call__(self, problem: ProjectionProblem) -> ProjectionResult: ...


def barrier_backend(problem: ProjectionProblem) -> ProjectionResult:
    """Interior-point solve of the projection in ``(y, multipliers)``."""
    x, goal, opts = problem.anchor, problem.goal, problem.options
    d = x.size
    if not problem.constraints:
        return ProjectionResult(OPTIMAL, goal.copy(), [], 0.0)
    groups, where = build_groups(problem.constraints, [(np.eye(d), np.zeros(d))])
    where = where[0]
    prog = BarrierProgram(2.0 * np.eye(d), -2.0 * goal, groups, lower_bound=-float(goal @ goal))

    # the goal itself may already be in the cell
    lams_g, worst_g = prog.best_slack(goal)
    if worst_g >= 0:
        return ProjectionResult(OPTIMAL, goal.copy(), _split_multipliers(lams_g, where), 0.0)

    # max slack at the anchor is the squared distance to the nearest region
    ws, worst = prog.init(x)
    if worst <= 0 or np.sqrt(worst) <= opts.feasibility_tol:
        lams, _ = prog.best_slack(x)
        return ProjectionResult(INFEASIBLE, x.copy(), _split_multipliers(lams, where),
                                float(np.linalg.norm(x - goal)))
    out = prog.solve(x, ws, opts.gap_tol, opts.max_iterations, opts.barrier_mu)
    y = out.z
    return ProjectionResult(out.status, y, _split_multipliers(prog.multipliers(out.w), where),
                            float(np.linalg.norm(y - goal)), out.iterations)


def cvxpy_backend(problem: ProjectionProblem) -> ProjectionResult:
    """Second-order-cone formulation handed to an external conic solver.

    Ellipsoids only; the slack is written with one quadratic-over-linear term
    per eigen-direction.
    """
    import cvxpy as cp

    x, goal = problem.anchor, problem.goal
    d = x.size
    y = cp.Variable(d)
    cons = []
    lam_vars = []
    for c in problem.constraints:
        E = c.region
        if not isinstance(E, Ellipsoid):
            raise NotImplementedError("cvxpy backend supports ellipsoids only")
        q, V = E.eig
        lam = cp.Variable(nonneg=True)
        lam_vars.append(lam)
        a = V.T @ (y - E.center)
        terms = [cp.quad_over_lin(np.sqrt(q[i]) * a[i], q[i] + lam) for i in range(d)]
        affine = 2 * (x - E.center) @ y + E.center @ E.center - x @ x
        cons.append(affine - sum(terms) - lam >= 0)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(y - goal)), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return ProjectionResult(INFEASIBLE, x.copy(), [], float(np.linalg.norm(x - goal)))
    yv = np.asarray(y.value, dtype=float)
    return ProjectionResult(OPTIMAL, yv, [np.atleast_1d(float(l.value)) for l in lam_vars],
                            float(np.linalg.norm(yv - goal)))


def solve_projection(problem: ProjectionProblem, backend: ProjectionBackend = barrier_backend) -> ProjectionResult:
    """Closest point to the goal inside the anchor's generalized Voronoi cell.

    ``Optimal`` results are audited against the direct distance test; a
    failed audit is reported as ``IterationLimit`` so it is never used.
    """
    start = time.perf_counter()
    res = backend(problem)
    res.wall_time = time.perf_counter() - start
    if res.status == OPTIMAL and problem.options.audit:
        res.audit_passed = cell_membership(problem.anchor, problem.regions, res.point)
        if not res.audit_passed:
            res.status = ITERATION_LIMIT
    return res


def project(anchor, goal, regions: Sequence[Region], options: SolverOptions | None = None) -> ProjectionResult:
    return solve_projection(ProjectionProblem.from_regions(anchor, goal, regions, options))
