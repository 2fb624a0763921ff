"""Bezier curves: evaluation, derivatives, duration scaling, and trajectory problem types."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from carp.voronoi import VoronoiConstraint

DEFAULT_DEGREE = 7
DEFAULT_DURATION = 1.0


@dataclass(frozen=True, eq=False)
class BezierCurve:
    """Curve ``B(s) = sum_k C(K,k) (1-s)^(K-k) s^k c_k`` for ``s`` in [0, 1].

    ``duration`` maps normalized time ``s`` to seconds, ``t = s * duration``.
    """

    control_points: np.ndarray
    duration: float = DEFAULT_DURATION

    def __post_init__(self):
        c = np.array(self.control_points, dtype=float)
        if c.ndim != 2 or c.shape[0] < 2:
            raise ValueError("need at least two control points as a (K+1, d) array")
        if not np.all(np.isfinite(c)):
            raise ValueError("control points must be finite")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "control_points", c)
        object.__setattr__(self, "duration", float(self.duration))

    @property
    def degree(self) -> int:
        return self.control_points.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.control_points.shape[1]

    def to_json(self) -> dict:
        return {"control_points": self.control_points.tolist(), "duration": self.duration}

    @classmethod
    def from_json(cls, obj: dict) -> "BezierCurve":
        return cls(np.asarray(obj["control_points"], dtype=float), obj.get("duration", DEFAULT_DURATION))


def evaluate(curve: BezierCurve, s) -> np.ndarray:
    """De Casteljau evaluation at normalized time ``s`` (scalar or 1-D array)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > 1) or not np.all(np.isfinite(s_arr)):
        raise ValueError("curve parameter must lie in [0, 1]")
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)[:, None, None]
    pts = np.broadcast_to(curve.control_points, (s_arr.shape[0],) + curve.control_points.shape).copy()
    for r in range(curve.degree, 0, -1):
        pts = (1.0 - s_arr) * pts[:, :r] + s_arr * pts[:, 1:r + 1]
    out = pts[:, 0]
    return out[0] if scalar else out


def bernstein_evaluate(curve: BezierCurve, s) -> np.ndarray:
    """Direct Bernstein-sum evaluation; used to cross-check de Casteljau."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    K = curve.degree
    k = np.arange(K + 1)
    basis = np.array([comb(K, i) for i in k]) * (1 - s[:, None]) ** (K - k) * s[:, None] ** k
    return basis @ curve.control_points


def derivative_controls(curve: BezierCurve) -> BezierCurve:
    """Hodograph: control points ``K (c_{k+1} - c_k) / T`` in physical time units."""
    c = curve.control_points
    K = curve.degree
    if K == 1:
        d = K * (c[1:] - c[:-1]) / curve.duration
        return BezierCurve(np.vstack([d, d]), curve.duration)
    return BezierCurve(K * np.diff(c, axis=0) / curve.duration, curve.duration)


def velocity(curve: BezierCurve, s) -> np.ndarray:
    return evaluate(derivative_controls(curve), s)


def rescale_duration(curve: BezierCurve, new_duration: float) -> BezierCurve:
    """Same geometric path traversed in ``new_duration`` seconds."""
    if not new_duration > 0:
        raise ValueError("duration must be positive")
    return BezierCurve(curve.control_points, new_duration)


def sample(curve: BezierCurve, n: int) -> np.ndarray:
    return evaluate(curve, np.linspace(0.0, 1.0, n))


# ---------------------------------------------------------------------------
# trajectory problem types


@dataclass
class BezierProblem:
    """Safe receding-horizon curve from ``anchor`` toward ``goal``.

    Equality rows pin ``c_0 = anchor`` and the endpoint velocities; the
    optional accelerations add second-difference rows at either end.
    """

    anchor: np.ndarray
    goal: np.ndarray
    constraints: list[VoronoiConstraint] = field(default_factory=list)
    v0: np.ndarray | None = None
    vf: np.ndarray | None = None
    degree: int = DEFAULT_DEGREE
    duration: float = DEFAULT_DURATION
    a0: np.ndarray | None = None
    af: np.ndarray | None = None

    def __post_init__(self):
        self.anchor = np.asarray(self.anchor, dtype=float)
        self.goal = np.asarray(self.goal, dtype=float)
        d = self.anchor.size
        if self.goal.shape != (d,):
            raise ValueError("anchor and goal must be vectors of equal length")
        self.v0 = np.zeros(d) if self.v0 is None else np.asarray(self.v0, dtype=float)
        self.vf = np.zeros(d) if self.vf is None else np.asarray(self.vf, dtype=float)
        for name in ("a0", "af"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, np.asarray(val, dtype=float))
        if not 2 <= self.degree <= 12:
            raise ValueError("degree must be between 2 and 12")
        if self.a0 is not None or self.af is not None:
            if self.degree < 3:
                raise ValueError("acceleration rows need degree >= 3")
        if not self.duration > 0:
            raise ValueError("duration must be positive")

    def equality_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """``E c = h`` over the flattened control points ``c`` of shape ((K+1) d,)."""
        K, d, T = self.degree, self.anchor.size, self.duration
        n = (K + 1) * d
        I = np.eye(d)
        rows, rhs = [], []

        def row(coeffs):
            r = np.zeros((d, n))
            for k, w in coeffs:
                r[:, k * d:(k + 1) * d] += w * I
            return r

        rows.append(row([(0, 1.0)]))
        rhs.append(self.anchor)
        rows.append(row([(1, K / T), (0, -K / T)]))
        rhs.append(self.v0)
        rows.append(row([(K, K / T), (K - 1, -K / T)]))
        rhs.append(self.vf)
        acc = K * (K - 1) / T**2
        if self.a0 is not None:
            rows.append(row([(2, acc), (1, -2 * acc), (0, acc)]))
            rhs.append(self.a0)
        if self.af is not None:
            rows.append(row([(K, acc), (K - 1, -2 * acc), (K - 2, acc)]))
            rhs.append(self.af)
        return np.vstack(rows), np.concatenate(rhs)


@dataclass
class BezierResult:
    status: str
    curve: BezierCurve | None
    multipliers: list = field(default_factory=list)
    objective: float = np.inf
    iterations: int = 0
    wall_time: float = 0.0
    audit_passed: bool | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "Optimal"
