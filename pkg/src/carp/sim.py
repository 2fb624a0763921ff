"""Deterministic multi-agent world: noisy sensing, per-observer filters, planning, audit."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from carp.filter import FilterState, motion_ball, predict, update
from carp.policy import (
    BEZIER,
    FOLLOW,
    MOVE,
    PROJECTION,
    STOP,
    AgentState,
    AuditReport,
    Decision,
    PlannerConfig,
    audit_step,
    inflated_estimates,
    plan_step,
)
from carp.sets import Ball, Ellipsoid, EllipsoidalMargin, Margin, contains, margin_from_json, minkowski_outer_ellipsoid
from carp.solver import SolverOptions

GOAL_TOLERANCE = 1e-3
ARRIVED = "Arrived"
ESCAPE = "Escape"
SPEED_SLACK = 1e-9


class ConfigError(ValueError):
    """Invalid scenario document; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class AgentConfig:
    start: tuple
    goal: tuple
    margin: Margin
    v_max: float = 1.0
    a_max: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    dimension: int
    agents: tuple
    dt: float = 0.05
    horizon: int = 400
    noise: float = 0.1
    mode: str = PROJECTION
    seed: int = 0
    threshold: float = 0.4
    degree: int = 7
    duration: float = 1.0
    sensing_radius: float | None = None
    deflection_deg: float = 0.0
    comfort: float = 0.0
    name: str = "scenario"

    @classmethod
    def from_json(cls, doc) -> "ScenarioConfig":
        return _parse_config(doc)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{path} is not valid JSON ({exc.msg} at line {exc.lineno})") from exc
        return _parse_config(doc)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in _TOP_FIELDS if k != "agents"}
        out["agents"] = [
            {"start": list(a.start), "goal": list(a.goal), "margin": _margin_json(a.margin),
             "v_max": a.v_max, "a_max": a.a_max}
            for a in self.agents
        ]
        return out


def _margin_json(m: Margin):
    if hasattr(m, "radius"):
        return {"radius": m.radius}
    return {"shape": m.ellipsoid.shape.tolist()}


_TOP_FIELDS = ("name", "dimension", "agents", "dt", "horizon", "noise", "mode", "seed", "threshold",
               "degree", "duration", "sensing_radius", "deflection_deg", "comfort")
_AGENT_FIELDS = ("start", "goal", "margin", "v_max", "a_max")
_REQUIRED = ("dimension", "agents")


def _number(doc, key, path, positive=True, integer=False, allow_none=False, minimum=None):
    val = doc[key]
    where = f"{path}.{key}" if path else key
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(where, "expected a number")
    if integer and not float(val).is_integer():
        raise ConfigError(where, "expected an integer")
    if not math.isfinite(val):
        raise ConfigError(where, "must be finite")
    if positive and not val > 0:
        raise ConfigError(where, "must be positive")
    if minimum is not None and val < minimum:
        raise ConfigError(where, f"must be at least {minimum}")
    return int(val) if integer else float(val)


def _vector(val, d, where):
    if not isinstance(val, list) or len(val) != d:
        raise ConfigError(where, f"expected a list of {d} numbers")
    for k, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{where}[{k}]", "expected a finite number")
    return tuple(float(v) for v in val)


def _parse_config(doc) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("", "scenario must be a JSON object")
    for key in doc:
        if key not in _TOP_FIELDS:
            raise ConfigError(key, "unknown field")
    for key in _REQUIRED:
        if key not in doc:
            raise ConfigError(key, "missing required field")
    kw = {}
    d = _number(doc, "dimension", "", integer=True)
    if d not in (2, 3):
        raise ConfigError("dimension", "must be 2 or 3")
    kw["dimension"] = d
    for key, opts in (("dt", {}), ("horizon", {"integer": True}), ("noise", {"positive": False, "minimum": 0.0}),
                      ("seed", {"positive": False, "integer": True, "minimum": 0}),
                      ("threshold", {"positive": False, "minimum": 0.0}),
                      ("degree", {"integer": True}), ("duration", {}),
                      ("sensing_radius", {"allow_none": True}),
                      ("deflection_deg", {"positive": False, "minimum": 0.0}),
                      ("comfort", {"positive": False, "minimum": 0.0})):
        if key in doc:
            kw[key] = _number(doc, key, "", **opts)
    if "name" in doc:
        if not isinstance(doc["name"], str):
            raise ConfigError("name", "expected a string")
        kw["name"] = doc["name"]
    if "mode" in doc:
        if doc["mode"] not in (PROJECTION, BEZIER):
            raise ConfigError("mode", f"expected {PROJECTION!r} or {BEZIER!r}")
        kw["mode"] = doc["mode"]
    if kw.get("deflection_deg", 0.0) >= 90.0:
        raise ConfigError("deflection_deg", "must be below 90")
    if kw.get("degree") is not None and not 2 <= kw["degree"] <= 12:
        raise ConfigError("degree", "must be between 2 and 12")

    agents_doc = doc["agents"]
    if not isinstance(agents_doc, list) or not agents_doc:
        raise ConfigError("agents", "expected a non-empty list")
    agents = []
    for i, a in enumerate(agents_doc):
        path = f"agents[{i}]"
        if not isinstance(a, dict):
            raise ConfigError(path, "expected an object")
        for key in a:
            if key not in _AGENT_FIELDS:
                raise ConfigError(f"{path}.{key}", "unknown field")
        for key in ("start", "goal", "margin"):
            if key not in a:
                raise ConfigError(f"{path}.{key}", "missing required field")
        start = _vector(a["start"], d, f"{path}.start")
        goal = _vector(a["goal"], d, f"{path}.goal")
        try:
            margin = margin_from_json(a["margin"])
            dim_ok = margin.as_ellipsoid(d).dim == d
        except Exception as exc:  # any malformed margin literal
            raise ConfigError(f"{path}.margin", str(exc)) from exc
        if not dim_ok:
            raise ConfigError(f"{path}.margin", f"margin must be {d}-dimensional")
        v_max = _number(a, "v_max", path) if "v_max" in a else 1.0
        a_max = _number(a, "a_max", path, allow_none=True) if "a_max" in a else None
        agents.append(AgentConfig(start, goal, margin, v_max, a_max))
    cfg = ScenarioConfig(agents=tuple(agents), **kw)

    threshold = cfg.threshold
    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            gap = float(np.linalg.norm(np.subtract(agents[i].start, agents[j].start)))
            if gap <= threshold:
                raise ConfigError(f"agents[{j}].start",
                                  f"starts of agents {i} and {j} are {gap:.3g} m apart; starts must be "
                                  f"separated by more than the collision threshold {threshold:g} m")
    return cfg


# ---------------------------------------------------------------------------
# world state and trace


@dataclass
class TickRecord:
    tick: int
    positions: np.ndarray
    next_positions: np.ndarray
    decisions: list[Decision]
    estimates: dict                 # observer -> {agent: Ellipsoid}
    audit: AuditReport


@dataclass
class World:
    config: ScenarioConfig
    agents: list[AgentState]
    filters: dict                   # observer -> {agent: FilterState}
    trajectories: list
    arrived: list[bool]
    rng: np.random.Generator
    blocked: list[bool] = field(default_factory=list)
    tick: int = 0
    records: list[TickRecord] = field(default_factory=list)
    halted: bool = False

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.agents])

    @property
    def done(self) -> bool:
        return self.halted or all(self.arrived) or self.tick >= self.config.horizon


@dataclass
class WorldTrace:
    config: ScenarioConfig
    records: list[TickRecord]
    positions: np.ndarray           # (ticks + 1, n, d)
    halted_tick: int | None
    metrics: dict = field(default_factory=dict)


def init_world(config: ScenarioConfig) -> World:
    agents = [AgentState(i, np.array(a.start), np.array(a.goal), a.margin, None, a.v_max, a.a_max)
              for i, a in enumerate(config.agents)]
    n = len(agents)
    return World(config, agents, {i: {} for i in range(n)}, [None] * n,
                 [bool(np.linalg.norm(a.position - a.goal) <= GOAL_TOLERANCE) for a in agents],
                 np.random.default_rng(config.seed), [False] * n)


def _ball_noise(rng: np.random.Generator, d: int, radius: float) -> np.ndarray:
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    return radius * rng.random() ** (1.0 / d) * u


def _observe(world: World) -> dict:
    """Measure, fuse and predict every visible neighbor; returns E^i_j(t) per observer."""
    cfg = world.config
    d = cfg.dimension
    radius = max(cfg.noise, 1e-6)           # measurement sets must be full-dimensional
    tables = {}
    for obs in world.agents:
        table = {}
        for tgt in world.agents:
            if tgt.id == obs.id:
                continue
            if cfg.sensing_radius is not None and np.linalg.norm(tgt.position - obs.position) > cfg.sensing_radius:
                world.filters[obs.id].pop(tgt.id, None)
                continue
            z = tgt.position + _ball_noise(world.rng, d, cfg.noise)
            meas = Ellipsoid.ball(z, radius)
            prev = world.filters[obs.id].get(tgt.id)
            state = FilterState(meas, world.tick) if prev is None else update(prev, meas, world.tick)
            state = predict(state, motion_ball(d, tgt.v_max, cfg.dt))
            world.filters[obs.id][tgt.id] = state
            table[tgt.id] = state.estimate
        tables[obs.id] = table
    return tables


def _clamp(x, target, limit):
    step = target - x
    n = float(np.linalg.norm(step))
    return target.copy() if n <= limit else x + step * (limit / n)


def deflected_goal(x: np.ndarray, goal: np.ndarray, degrees: float) -> np.ndarray:
    """Goal direction turned clockwise about ``x`` (about the vertical axis in 3-D)."""
    th = -math.radians(degrees)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    out = goal.copy()
    out[:2] = x[:2] + R @ (goal[:2] - x[:2])
    return out


def _planning_agent(world: World, a: AgentState) -> AgentState:
    deg = world.config.deflection_deg
    if deg > 0 and world.blocked[a.id]:
        return replace(a, goal=deflected_goal(a.position, a.goal, deg))
    return a


def widened_margin(margin: Margin, extra: float, dim: int) -> Margin:
    """The margin grown by a ball of radius ``extra``."""
    if extra <= 0:
        return margin
    if isinstance(margin, Ball):
        return Ball(margin.radius + extra)
    E = minkowski_outer_ellipsoid(margin.as_ellipsoid(dim), Ellipsoid.ball(np.zeros(dim), extra))
    return EllipsoidalMargin(E)


def escape_goal(a: AgentState, intruders) -> np.ndarray | None:
    """A point 1 m away from the centers of the estimates crowding the agent."""
    push = np.zeros(a.dim)
    for E in intruders:
        v = a.position - E.center
        n = np.linalg.norm(v)
        if n > 0:
            push += v / n
    n = np.linalg.norm(push)
    return None if n < 1e-9 else a.position + push / n


def _decide(world: World, a: AgentState, table, planner) -> Decision:
    """Plan with the comfort buffer; when that is infeasible, back away inside the plain cell."""
    cfg = world.config
    pa = _planning_agent(world, a)
    if cfg.comfort <= 0:
        return plan_step(pa, table, planner, previous=world.trajectories[a.id])
    wide = replace(pa, margin=widened_margin(a.margin, cfg.comfort, a.dim))
    dec = plan_step(wide, table, planner, previous=world.trajectories[a.id])
    if dec.kind != STOP:
        return dec
    crowd = inflated_estimates(wide, table, sorted(table), cfg.mode)
    intruders = [table[j] for j, R in crowd.items() if contains(R, a.position, 0.0)]
    goal = escape_goal(a, intruders)
    if goal is None:
        return dec
    back = plan_step(replace(a, goal=goal), table, planner)
    if back.kind == STOP:
        return dec
    back.status = ESCAPE
    return back


def step_world(world: World) -> World:
    """Advance one tick: sense, plan every agent on the same snapshot, move, audit.

    With ``deflection_deg`` set, an agent whose last plan was held back by its
    cell aims at its goal turned clockwise, which breaks symmetric head-on
    standoffs into a rotary flow.

    An audit violation halts the world; the offending tick stays recorded.
    """
    if world.done:
        return world
    cfg = world.config
    planner = PlannerConfig(cfg.mode, SolverOptions(), cfg.degree, cfg.duration, cfg.dt)
    tables = _observe(world)
    positions = world.positions
    decisions, inflated = [], {}
    for a in world.agents:
        inflated[a.id] = inflated_estimates(a, tables[a.id], sorted(tables[a.id]), cfg.mode)
        if world.arrived[a.id]:
            decisions.append(Decision(STOP, a.position.copy(), None, ARRIVED))
            continue
        dec = _decide(world, a, tables[a.id], planner)
        # held back: the cell excludes the (possibly deflected) goal
        aim = _planning_agent(world, a).goal
        world.blocked[a.id] = dec.kind != MOVE or np.linalg.norm(dec.point - aim) > GOAL_TOLERANCE
        decisions.append(dec)

    nxt = positions.copy()
    for a, dec in zip(world.agents, decisions):
        limit = a.v_max * cfg.dt
        if dec.kind == STOP:
            world.trajectories[a.id] = None
            target = a.position
        elif dec.trajectory is not None:
            target = dec.trajectory.point_after(cfg.dt)
            world.trajectories[a.id] = dec.trajectory.advanced(cfg.dt)
        else:
            target = dec.point
        nxt[a.id] = _clamp(a.position, target, limit)

    report = audit_step(world.tick, dict(enumerate(positions)), dict(enumerate(nxt)),
                        dict(enumerate(decisions)), tables, inflated, cfg.threshold)
    for a in world.agents:
        if np.linalg.norm(nxt[a.id] - a.position) > a.v_max * cfg.dt + SPEED_SLACK:
            report.violations.append({"kind": "speed", "i": a.id, "j": None,
                                      "value": float(np.linalg.norm(nxt[a.id] - a.position))})
    world.records.append(TickRecord(world.tick, positions, nxt, decisions, tables, report))
    for a in world.agents:
        a.velocity = (nxt[a.id] - a.position) / cfg.dt
        a.position = nxt[a.id].copy()
        if np.linalg.norm(a.position - a.goal) <= GOAL_TOLERANCE:
            world.arrived[a.id] = True
    world.tick += 1
    world.halted = not report.passed
    return world


def run_scenario(config: ScenarioConfig) -> WorldTrace:
    """Run until every agent arrives, the horizon ends, or an audit fails."""
    world = init_world(config)
    while not world.done:
        step_world(world)
    positions = np.array([r.positions for r in world.records] + [world.positions])
    trace = WorldTrace(config, world.records, positions, world.tick - 1 if world.halted else None)
    trace.metrics = compute_metrics(trace)
    return trace


# ---------------------------------------------------------------------------
# metrics and export


def pair_distances(positions: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Distance series ``(ticks + 1, pairs)`` for every unordered pair."""
    n = positions.shape[1]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not pairs:
        return np.zeros((positions.shape[0], 0)), pairs
    I, J = np.array(pairs).T
    return np.linalg.norm(positions[:, I] - positions[:, J], axis=2), pairs


def timing_stats(times) -> dict:
    t = np.asarray(list(times), dtype=float)
    if t.size == 0:
        return {"count": 0, "min": None, "median": None, "mean": None, "max": None}
    return {"count": int(t.size), "min": float(t.min()), "median": float(np.median(t)),
            "mean": float(t.mean()), "max": float(t.max())}


def compute_metrics(trace: WorldTrace) -> dict:
    """Separation, arrival, decision and timing summaries of a trace.

    Everything except ``timing`` is a deterministic function of the seed.
    """
    dist, pairs = pair_distances(trace.positions)
    cfg = trace.config
    n = trace.positions.shape[1]
    arrival = [None] * n
    for t in range(trace.positions.shape[0]):
        for i in range(n):
            if arrival[i] is None and np.linalg.norm(trace.positions[t, i] - cfg.agents[i].goal) <= GOAL_TOLERANCE:
                arrival[i] = t
    kinds = {k: [0] * n for k in (MOVE, STOP, FOLLOW)}
    iterations, times = [], []
    for rec in trace.records:
        for i, dec in enumerate(rec.decisions):
            if dec.status == ARRIVED:
                continue
            kinds[dec.kind][i] += 1
            iterations.append(dec.iterations)
            times.append(dec.wall_time)
    if dist.size:
        flat = int(np.argmin(dist))
        t_min, p_min = divmod(flat, dist.shape[1])
        min_d = float(dist[t_min, p_min])
        min_pair = list(pairs[p_min])
    else:
        t_min, min_d, min_pair = 0, math.inf, None
    violations = sum(len(r.audit.violations) for r in trace.records)
    return {
        "ticks": len(trace.records),
        "min_distance": min_d,
        "min_distance_tick": int(t_min),
        "min_distance_pair": min_pair,
        "threshold": cfg.threshold,
        "arrival_ticks": arrival,
        "all_arrived": all(a is not None for a in arrival),
        "stop_counts": kinds[STOP],
        "move_counts": kinds[MOVE],
        "follow_counts": kinds[FOLLOW],
        "audit_violations": violations,
        "halted_tick": trace.halted_tick,
        "solver_iterations": {"total": int(sum(iterations)),
                              "max": int(max(iterations)) if iterations else 0},
        "timing": timing_stats(times),
    }


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trace_csv(trace: WorldTrace, path) -> None:
    """One row per agent per tick: position at the tick and the decision taken there."""
    d = trace.config.dimension
    axes = ["x", "y", "z"][:d]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tick", "agent", *axes, "decision"])
        for t in range(trace.positions.shape[0]):
            decs = trace.records[t].decisions if t < len(trace.records) else None
            for i in range(trace.positions.shape[1]):
                kind = decs[i].kind if decs is not None else ""
                w.writerow([t, i, *(_fmt(v) for v in trace.positions[t, i]), kind])


def deterministic_metrics(metrics: dict) -> dict:
    return {k: v for k, v in metrics.items() if k != "timing"}


def write_metrics_json(trace: WorldTrace, path) -> None:
    Path(path).write_text(json.dumps(deterministic_metrics(trace.metrics), indent=2, sort_keys=True) + "\n")


def write_timing_json(trace: WorldTrace, path) -> None:
    Path(path).write_text(json.dumps(trace.metrics["timing"], indent=2, sort_keys=True) + "\n")


def write_audit_jsonl(trace: WorldTrace, path) -> None:
    with open(path, "w") as fh:
        for rec in trace.records:
            fh.write(rec.audit.to_json() + "\n")


__all__ = [
    "AgentConfig", "ConfigError", "ScenarioConfig", "TickRecord", "World", "WorldTrace",
    "compute_metrics", "deterministic_metrics", "init_world", "pair_distances", "run_scenario",
    "step_world", "timing_stats", "write_audit_jsonl", "write_metrics_json", "write_timing_json",
    "write_trace_csv",
]
