"""Per-agent planning step: inflate estimates, project onto the safe cell, audit."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from carp.bezier import DEFAULT_DEGREE, DEFAULT_DURATION, BezierCurve, BezierProblem, evaluate
from carp.sets import (
    Ball,
    Ellipsoid,
    EllipsoidalMargin,
    Intersection,
    Margin,
    Polyhedron,
    Region,
    Union,
    contains,
    distance_to_region,
    minkowski_outer_ellipsoid,
    stopping_radius,
)
from carp.solver import SolverOptions, solve_bezier, solve_projection
from carp.solver.projection import ProjectionProblem
from carp.voronoi import cell_membership, constraints_for

MOVE = "Move"
STOP = "Stop"
FOLLOW = "FollowPrevious"

PROJECTION = "projection"
BEZIER = "bezier"


class MissingEstimateError(KeyError):
    """A visible agent has no entry in the estimate table."""


@dataclass
class AgentState:
    id: int
    position: np.ndarray
    goal: np.ndarray
    margin: Margin
    velocity: np.ndarray | None = None
    v_max: float = 1.0
    a_max: float | None = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        if self.goal.shape != self.position.shape or not np.all(np.isfinite(self.goal)):
            raise ValueError(f"agent {self.id}: goal must be a finite vector matching the position")
        self.velocity = np.zeros_like(self.position) if self.velocity is None else np.asarray(self.velocity, float)
        if not self.v_max > 0:
            raise ValueError(f"agent {self.id}: v_max must be positive")
        if self.a_max is not None and not self.a_max > 0:
            raise ValueError(f"agent {self.id}: a_max must be positive")

    @property
    def dim(self) -> int:
        return self.position.size


@dataclass(frozen=True)
class PlannerConfig:
    mode: str = PROJECTION
    options: SolverOptions = field(default_factory=SolverOptions)
    degree: int = DEFAULT_DEGREE
    duration: float = DEFAULT_DURATION
    dt: float = 0.05

    def __post_init__(self):
        if self.mode not in (PROJECTION, BEZIER):
            raise ValueError(f"unknown planning mode {self.mode!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class Trajectory:
    """A committed curve and the time already spent following it."""

    curve: BezierCurve
    elapsed: float = 0.0

    def point_after(self, dt: float) -> np.ndarray:
        s = min(1.0, (self.elapsed + dt) / self.curve.duration)
        return evaluate(self.curve, s)

    def advanced(self, dt: float) -> "Trajectory":
        return Trajectory(self.curve, min(self.elapsed + dt, self.curve.duration))


@dataclass
class Decision:
    kind: str
    point: np.ndarray
    trajectory: Trajectory | None = None
    status: str = ""
    iterations: int = 0
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# estimate inflation


def margin_ellipsoid(agent: AgentState, mode: str = PROJECTION) -> Ellipsoid:
    """The agent's margin, plus the stopping ball in trajectory mode."""
    E = agent.margin.as_ellipsoid(agent.dim)
    if mode == BEZIER and agent.a_max is not None:
        E = minkowski_outer_ellipsoid(E, Ellipsoid.ball(np.zeros(agent.dim), stopping_radius(agent.v_max, agent.a_max)))
    return E


def _support(B: Ellipsoid, A: np.ndarray) -> np.ndarray:
    """Support function of a centered ellipsoid along each row of ``A``."""
    return np.sqrt(np.einsum("ij,jk,ik->i", A, B.shape, A))


def inflate_region(R: Region, B: Ellipsoid) -> Region:
    """Outer bound of ``R + B`` for a centered margin ellipsoid ``B``.

    Ellipsoids use the trace-optimal Minkowski bound.  Polyhedra shift each
    face outward by the margin's support function; intersections inflate
    every member (the sum of an intersection lies in the intersection of sums).
    """
    if isinstance(R, Ellipsoid):
        return minkowski_outer_ellipsoid(R, B)
    if isinstance(R, Polyhedron):
        return Polyhedron(R.A, R.b + _support(B, R.A))
    if isinstance(R, Intersection):
        poly = None if R.polyhedron is None else inflate_region(R.polyhedron, B)
        return Intersection(poly, tuple(minkowski_outer_ellipsoid(E, B) for E in R.ellipsoids))
    if isinstance(R, Union):
        return Union(tuple(inflate_region(m, B) for m in R.members))
    raise TypeError(f"unknown region type {type(R).__name__}")


def inflated_estimates(agent: AgentState, estimates: Mapping[int, Region], visible: Sequence[int],
                       mode: str = PROJECTION) -> dict[int, Region]:
    if agent.id in estimates:
        raise ValueError(f"agent {agent.id} has an estimate of itself")
    missing = [j for j in visible if j not in estimates]
    if missing:
        raise MissingEstimateError(f"agent {agent.id} has no estimate for visible agents {missing}")
    B = margin_ellipsoid(agent, mode)
    return {j: inflate_region(estimates[j], B) for j in visible}


# ---------------------------------------------------------------------------
# planning


def plan_step(agent: AgentState, estimates: Mapping[int, Region], config: PlannerConfig | None = None,
              visible: Sequence[int] | None = None, previous: Trajectory | None = None) -> Decision:
    """Choose the next waypoint (or curve) inside the reciprocally safe cell.

    ``visible`` lists the agents that must be avoided and defaults to every
    key of ``estimates``.  A failed solve yields ``Stop``; in trajectory mode
    the previous curve is kept instead when its next sample is still safe.
    """
    config = config or PlannerConfig()
    visible = sorted(estimates) if visible is None else list(visible)
    inflated = inflated_estimates(agent, estimates, visible, config.mode)
    regions = [inflated[j] for j in visible]
    x = agent.position
    if config.mode == PROJECTION:
        res = solve_projection(ProjectionProblem(x, agent.goal, constraints_for(x, regions), config.options))
        if res.optimal:
            return Decision(MOVE, res.point, None, res.status, res.iterations, res.wall_time)
        return Decision(STOP, x.copy(), None, res.status, res.iterations, res.wall_time)

    problem = BezierProblem(x, agent.goal, constraints_for(x, regions), v0=agent.velocity,
                            degree=config.degree, duration=config.duration)
    res = solve_bezier(problem, config.options)
    if res.optimal:
        traj = Trajectory(res.curve)
        return Decision(MOVE, res.curve.control_points[-1].copy(), traj, res.status, res.iterations, res.wall_time)
    if previous is not None and cell_membership(x, regions, previous.point_after(config.dt)):
        return Decision(FOLLOW, previous.curve.control_points[-1].copy(), previous, res.status,
                        res.iterations, res.wall_time)
    return Decision(STOP, x.copy(), None, res.status, res.iterations, res.wall_time)


def bvc_halfspace(x_i, x_j, eps: float = 0.0) -> Polyhedron:
    """Points at least ``eps`` closer (in squared distance) to ``x_i`` than to ``x_j``."""
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if np.allclose(x_i, x_j, rtol=0, atol=1e-12):
        raise ValueError("coincident positions have no separating halfspace")
    return Polyhedron.halfspace(2.0 * (x_j - x_i), float(x_j @ x_j - x_i @ x_i - eps))


# ---------------------------------------------------------------------------
# runtime safety audit


@dataclass
class AuditReport:
    tick: int
    violations: list[dict] = field(default_factory=list)
    min_distance: float = np.inf

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps({"tick": self.tick, "passed": self.passed,
                           "min_distance": _round(self.min_distance), "violations": self.violations},
                          sort_keys=True)


def _round(v: float) -> float | None:
    return None if not np.isfinite(v) else round(float(v), 12)


def audit_step(tick: int, positions: Mapping[int, np.ndarray], next_positions: Mapping[int, np.ndarray],
               decisions: Mapping[int, Decision], estimates: Mapping[int, Mapping[int, Region]],
               inflated: Mapping[int, Mapping[int, Region]], threshold: float) -> AuditReport:
    """Check the safety invariants for one tick.

    Per ordered pair (i, j): (a) agent j's new position lies in i's estimate
    of it; (b) when i moved, its new position avoids i's inflated estimate of
    j; (c) the new positions are at least ``threshold`` apart.  Stop
    decisions must leave the agent in place.
    """
    report = AuditReport(tick)
    ids = sorted(positions)
    for i in ids:
        dec = decisions[i]
        moved = not np.array_equal(next_positions[i], positions[i])
        if dec.kind == STOP and moved:
            report.violations.append({"kind": "stop_moved", "i": i, "j": None, "value": None})
        for j in ids:
            if j == i or j not in estimates[i]:
                continue
            if not contains(estimates[i][j], next_positions[j], 1e-9):
                report.violations.append({"kind": "consistency", "i": i, "j": j,
                                          "value": _round(distance_to_region(next_positions[j], estimates[i][j]))})
            if dec.kind != STOP and moved and contains(inflated[i][j], next_positions[i], 0.0):
                report.violations.append({"kind": "reciprocal_safety", "i": i, "j": j,
                                          "value": _round(distance_to_region(next_positions[i], inflated[i][j]))})
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            dist = float(np.linalg.norm(next_positions[ids[a]] - next_positions[ids[b]]))
            report.min_distance = min(report.min_distance, dist)
            if dist < threshold:
                report.violations.append({"kind": "separation", "i": ids[a], "j": ids[b], "value": _round(dist)})
    return report


__all__ = [
    "AgentState", "AuditReport", "BEZIER", "Ball", "Decision", "EllipsoidalMargin", "FOLLOW", "MOVE",
    "MissingEstimateError", "PROJECTION", "PlannerConfig", "STOP", "Trajectory", "audit_step",
    "bvc_halfspace", "inflate_region", "inflated_estimates", "margin_ellipsoid", "plan_step",
]
