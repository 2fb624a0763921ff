"""Safe Bezier trajectory: every control point inside the anchor's Voronoi cell."""

from __future__ import annotations

import time

import numpy as np
from scipy.linalg import null_space

from carp.bezier import BezierCurve, BezierProblem, BezierResult
from carp.solver.core import BarrierProgram
from carp.solver.projection import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, SolverOptions, build_groups
from carp.voronoi import cell_membership

REGULARIZATION = 1e-4
EQUALITY_TOL = 1e-6


def _point_maps(N, f, K, d):
    """Affine maps ``c_k = M_k z + f_k``, split into fixed and free control points.

    Free points with identical maps (e.g. ``c_{K-1} = c_K`` under zero final
    velocity) are constrained once.
    """
    fixed, free, seen = [], [], []
    for k in range(K + 1):
        M = N[k * d:(k + 1) * d]
        fk = f[k * d:(k + 1) * d]
        if np.abs(M).max(initial=0.0) <= 1e-12:
            fixed.append(fk)
            continue
        if any(np.allclose(M, M2, rtol=0, atol=1e-12) and np.allclose(fk, f2, rtol=0, atol=1e-12)
               for M2, f2 in seen):
            continue
        seen.append((M, fk))
        free.append((M, fk))
    return fixed, free


def _objective(problem: BezierProblem, N, f):
    """``0.5 z^T P z + q^T z`` for ``||c_K - g||^2 + eps sum ||c_k - l_k||^2``.

    ``l_k`` interpolates the segment from anchor to goal; the tiny second term
    pins the otherwise free interior control points.
    """
    K, d = problem.degree, problem.anchor.size
    SK = N[K * d:]
    fK = f[K * d:]
    line = np.concatenate([problem.anchor + (k / K) * (problem.goal - problem.anchor) for k in range(K + 1)])
    P = 2.0 * SK.T @ SK + 2.0 * REGULARIZATION * N.T @ N
    q = 2.0 * SK.T @ (fK - problem.goal) + 2.0 * REGULARIZATION * N.T @ (f - line)
    # constant dropped from the expansion; the full objective is nonnegative
    const = float(np.sum((fK - problem.goal) ** 2) + REGULARIZATION * np.sum((f - line) ** 2))
    return P, q, -const


def solve_bezier(problem: BezierProblem, options: SolverOptions | None = None) -> BezierResult:
    """Closest final control point to the goal with all control points in the cell.

    The equality rows are eliminated through a null-space parametrization;
    the remaining program is solved by the same barrier method as the
    single-point projection, with a phase-1 search when the straight
    stationary guess is not strictly feasible.
    """
    opts = options or SolverOptions()
    start = time.perf_counter()
    result = _solve(problem, opts)
    result.wall_time = time.perf_counter() - start
    if result.status == OPTIMAL and opts.audit:
        result.audit_passed = audit_curve(problem, result.curve)
        if not result.audit_passed:
            result.status = ITERATION_LIMIT
    return result


def audit_curve(problem: BezierProblem, curve: BezierCurve) -> bool:
    """Equality rows to 1e-6 and every control point through the direct membership test."""
    E, h = problem.equality_rows()
    if np.abs(E @ curve.control_points.reshape(-1) - h).max() > EQUALITY_TOL:
        return False
    regions = [c.region for c in problem.constraints]
    return all(cell_membership(problem.anchor, regions, c) for c in curve.control_points)


def _solve(problem: BezierProblem, opts: SolverOptions) -> BezierResult:
    K, d = problem.degree, problem.anchor.size
    E, h = problem.equality_rows()
    f = np.linalg.lstsq(E, h, rcond=None)[0]
    N = null_space(E)
    P, q, lower = _objective(problem, N, f)
    fixed, free = _point_maps(N, f, K, d)
    regions = [c.region for c in problem.constraints]

    def finish(status, z, ws=None, prog=None, iterations=0):
        c = (N @ z + f).reshape(K + 1, d)
        curve = BezierCurve(c, problem.duration)
        lams = prog.multipliers(ws) if prog is not None and ws is not None else []
        return BezierResult(status, curve, lams, float(np.sum((c[-1] - problem.goal) ** 2)), iterations)

    # control points pinned by the equality rows are checked directly
    if not all(cell_membership(problem.anchor, regions, p) for p in fixed):
        z0 = np.linalg.lstsq(N, np.tile(problem.anchor, K + 1) - f, rcond=None)[0]
        return finish(INFEASIBLE, z0)

    z_free = np.linalg.solve(P, -q)
    if not problem.constraints or not free:
        return finish(OPTIMAL, z_free)

    groups, _ = build_groups(problem.constraints, free)
    prog = BarrierProgram(P, q, groups, lower_bound=lower)
    lams, worst = prog.best_slack(z_free)
    if worst >= 0:
        return finish(OPTIMAL, z_free, None, None)

    # start from the stationary curve at the anchor
    z0 = np.linalg.lstsq(N, np.tile(problem.anchor, K + 1) - f, rcond=None)[0]
    ws, worst = prog.init(z0)
    used = 0
    if not worst > 0:
        status, z0, ws, used = prog.phase1(z0, ws, opts.feasibility_tol, opts.max_iterations, opts.barrier_mu)
        if status != "Feasible":
            return finish(INFEASIBLE if status == "Infeasible" else ITERATION_LIMIT, z0, None, None, used)
    out = prog.solve(z0, ws, opts.gap_tol, opts.max_iterations, opts.barrier_mu)
    return finish(out.status, out.z, out.w, prog, used + out.iterations)
