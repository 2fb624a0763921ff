"""Uncertainty regions: ellipsoids, polyhedra, and their unions/intersections.

Ellipsoids are stored in center/shape form ``{z : (z - c)^T Q^{-1} (z - c) <= 1}``.
The quadratic-form coefficients used by the dual functions are derived on
demand by :meth:`Ellipsoid.quadratic_form`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union as TUnion

import numpy as np
from scipy.optimize import brentq, linprog

from carp.config import TOL


class RegionError(ValueError):
    """Raised for malformed regions or margins."""


def _vec(x, name="vector") -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise RegionError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class QuadraticForm:
    """Coefficients of ``f(z) = z^T sigma z + 2 mu^T z - kappa``."""

    sigma: np.ndarray
    mu: np.ndarray
    kappa: float


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = _vec(self.center, "center")
        Q = np.asarray(self.shape, dtype=float)
        if Q.shape != (c.size, c.size):
            raise RegionError(f"shape must be {c.size}x{c.size}, got {Q.shape}")
        if not np.all(np.isfinite(Q)):
            raise RegionError("shape must be finite")
        scale = max(np.abs(Q).max(), 1e-300)
        if np.abs(Q - Q.T).max() > TOL.symmetry * scale:
            raise RegionError("shape must be symmetric")
        Q = 0.5 * (Q + Q.T)
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise RegionError("shape must be positive definite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", Q)

    @classmethod
    def ball(cls, center, radius: float) -> "Ellipsoid":
        c = _vec(center, "center")
        if radius <= 0:
            raise RegionError("radius must be positive")
        return cls(c, radius**2 * np.eye(c.size))

    @classmethod
    def point(cls, center, eps: float = 1e-12) -> "Ellipsoid":
        """A tiny ball standing in for a single point."""
        return cls.ball(center, math.sqrt(eps))

    @classmethod
    def from_axes(cls, center, semi_axes, rotation=None) -> "Ellipsoid":
        axes = _vec(semi_axes, "semi_axes")
        R = np.eye(axes.size) if rotation is None else np.asarray(rotation, dtype=float)
        return cls(center, R @ np.diag(axes**2) @ R.T)

    @property
    def dim(self) -> int:
        return self.center.size

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and orthonormal eigenvectors of the shape matrix."""
        q, V = np.linalg.eigh(self.shape)
        return q, V

    @property
    def semi_axes(self) -> np.ndarray:
        return np.sqrt(self.eig[0])

    def quadratic_form(self) -> QuadraticForm:
        """Return ``(Sigma, mu, kappa)`` with ``Sigma = Q^-1`` and ``mu = -Q^-1 c``."""
        q, V = self.eig
        sigma = (V / q) @ V.T
        sigma = 0.5 * (sigma + sigma.T)
        mu = -sigma @ self.center
        kappa = 1.0 - float(self.center @ sigma @ self.center)
        return QuadraticForm(sigma, mu, kappa)

    def level(self, z) -> float:
        """Value of ``(z - c)^T Q^{-1} (z - c)``."""
        q, V = self.eig
        a = V.T @ (np.asarray(z, dtype=float) - self.center)
        return float(np.sum(a * a / q))

    def translate(self, t) -> "Ellipsoid":
        return Ellipsoid(self.center + np.asarray(t, dtype=float), self.shape)

    def sample(self, rng: np.random.Generator, n: int, boundary: bool = False) -> np.ndarray:
        """Uniform samples from the ellipsoid (or its boundary surface map)."""
        d = self.dim
        u = rng.standard_normal((n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        if not boundary:
            u *= rng.random((n, 1)) ** (1.0 / d)
        L = np.linalg.cholesky(self.shape)
        return self.center + u @ L.T


@dataclass(frozen=True, eq=False)
class Polyhedron:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = _vec(self.b, "b")
        if A.shape[0] < 1 or A.shape[0] != b.size:
            raise RegionError(f"A has {A.shape[0]} rows but b has {b.size} entries")
        if not np.all(np.isfinite(A)):
            raise RegionError("A must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def halfspace(cls, a, beta: float) -> "Polyhedron":
        """``{z : a^T z <= beta}``."""
        return cls(np.atleast_2d(_vec(a)), [beta])

    @classmethod
    def box(cls, lower, upper) -> "Polyhedron":
        lo, hi = _vec(lower), _vec(upper)
        eye = np.eye(lo.size)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def rows(self) -> int:
        return self.A.shape[0]

    @cached_property
    def is_empty(self) -> bool:
        res = linprog(np.zeros(self.dim), A_ub=self.A, b_ub=self.b,
                      bounds=[(None, None)] * self.dim, method="highs")
        return res.status == 2

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        return Polyhedron(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]))

    def translate(self, t) -> "Polyhedron":
        return Polyhedron(self.A, self.b + self.A @ np.asarray(t, dtype=float))


@dataclass(frozen=True, eq=False)
class Intersection:
    polyhedron: Polyhedron | None
    ellipsoids: tuple[Ellipsoid, ...] = ()

    def __post_init__(self):
        ells = tuple(self.ellipsoids)
        if self.polyhedron is None and not ells:
            raise RegionError("intersection needs at least one member")
        dims = {e.dim for e in ells}
        if self.polyhedron is not None:
            dims.add(self.polyhedron.dim)
        if len(dims) != 1:
            raise RegionError("intersection members differ in dimension")
        object.__setattr__(self, "ellipsoids", ells)

    @property
    def dim(self) -> int:
        return self.polyhedron.dim if self.polyhedron is not None else self.ellipsoids[0].dim

    @property
    def rows(self) -> int:
        return 0 if self.polyhedron is None else self.polyhedron.rows

    @cached_property
    def is_empty(self) -> bool:
        return _project_convex(self, np.zeros(self.dim)) is None

    def translate(self, t) -> "Intersection":
        p = None if self.polyhedron is None else self.polyhedron.translate(t)
        return Intersection(p, tuple(e.translate(t) for e in self.ellipsoids))


@dataclass(frozen=True, eq=False)
class Union:
    members: tuple["Region", ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise RegionError("union must have at least one member")
        if len({m.dim for m in members}) != 1:
            raise RegionError("union members differ in dimension")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def translate(self, t) -> "Union":
        return Union(tuple(m.translate(t) for m in self.members))


Region = TUnion[Ellipsoid, Polyhedron, Intersection, Union]


def intersection(*members: Ellipsoid | Polyhedron) -> Intersection:
    """Build an intersection, pre-merging every polyhedron into one."""
    poly = None
    ells = []
    for m in members:
        if isinstance(m, Polyhedron):
            poly = m if poly is None else poly.intersect(m)
        elif isinstance(m, Ellipsoid):
            ells.append(m)
        else:
            raise RegionError(f"cannot intersect {type(m).__name__}")
    return Intersection(poly, tuple(ells))


def flatten(region: Region) -> list[Region]:
    """Expand unions into their convex members."""
    if isinstance(region, Union):
        out = []
        for m in region.members:
            out.extend(flatten(m))
        return out
    return [region]


# ---------------------------------------------------------------------------
# membership and distance


def contains(region: Region, z, tol: float = TOL.containment) -> bool:
    z = np.asarray(z, dtype=float)
    if isinstance(region, Ellipsoid):
        return region.level(z) <= 1.0 + tol
    if isinstance(region, Polyhedron):
        return bool(np.all(region.A @ z <= region.b + tol))
    if isinstance(region, Intersection):
        if region.polyhedron is not None and not contains(region.polyhedron, z, tol):
            return False
        return all(contains(e, z, tol) for e in region.ellipsoids)
    if isinstance(region, Union):
        return any(contains(m, z, tol) for m in region.members)
    raise RegionError(f"unknown region type {type(region).__name__}")


def _ellipsoid_projection(y: np.ndarray, E: Ellipsoid) -> np.ndarray:
    q, V = E.eig
    w = V.T @ (y - E.center)
    if np.sum(w * w / q) <= 1.0:
        return y.copy()

    def secular(nu):
        return np.sum(w * w * q / (q + nu) ** 2) - 1.0

    hi = float(np.linalg.norm(w) * math.sqrt(q.max()))
    nu = brentq(secular, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return E.center + V @ (w * q / (q + nu))


def _project_convex(region: Polyhedron | Intersection, y: np.ndarray):
    """Euclidean projection onto a polyhedron or intersection; None when empty."""
    import cvxpy as cp

    z = cp.Variable(y.size)
    cons = []
    poly = region if isinstance(region, Polyhedron) else region.polyhedron
    if poly is not None:
        cons.append(poly.A @ z <= poly.b)
    for E in getattr(region, "ellipsoids", ()):
        q, V = E.eig
        cons.append(cp.sum_squares(np.diag(1 / np.sqrt(q)) @ V.T @ (z - E.center)) <= 1)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(z - y)), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        prob.solve(solver=cp.SCS, eps=1e-10)
    if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return None
    return np.asarray(z.value, dtype=float)


def distance_to_region(y, region: Region) -> float:
    """Euclidean distance from ``y`` to ``region``; ``inf`` for an empty region."""
    y = _vec(y, "y")
    if isinstance(region, Ellipsoid):
        return float(np.linalg.norm(y - _ellipsoid_projection(y, region)))
    if isinstance(region, Union):
        return min(distance_to_region(y, m) for m in region.members)
    if isinstance(region, (Polyhedron, Intersection)):
        if isinstance(region, Polyhedron) and region.is_empty:
            return math.inf
        if contains(region, y, 0.0):
            return 0.0
        z = _project_convex(region, y)
        if z is None:
            return math.inf
        return float(np.linalg.norm(y - z))
    raise RegionError(f"unknown region type {type(region).__name__}")


# ---------------------------------------------------------------------------
# Minkowski sums and margins


def minkowski_outer_ellipsoid(E1: Ellipsoid, E2: Ellipsoid) -> Ellipsoid:
    """Trace-optimal outer ellipsoid of the Minkowski sum ``E1 + E2``."""
    t1, t2 = np.trace(E1.shape), np.trace(E2.shape)
    beta = math.sqrt(t1 / t2)
    shape = (1 + 1 / beta) * E1.shape + (1 + beta) * E2.shape
    return Ellipsoid(E1.center + E2.center, shape)


@dataclass(frozen=True)
class Ball:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise RegionError("margin radius must be positive")

    def as_ellipsoid(self, dim: int) -> Ellipsoid:
        return Ellipsoid.ball(np.zeros(dim), self.radius)


@dataclass(frozen=True)
class EllipsoidalMargin:
    ellipsoid: Ellipsoid

    def __post_init__(self):
        if np.abs(self.ellipsoid.center).max() > 0:
            raise RegionError("ellipsoidal margin must be centered at the origin")

    def as_ellipsoid(self, dim: int) -> Ellipsoid:
        if dim != self.ellipsoid.dim:
            raise RegionError(f"margin is {self.ellipsoid.dim}-D, expected {dim}-D")
        return self.ellipsoid


Margin = TUnion[Ball, EllipsoidalMargin]


def box_ellipsoid(half_widths) -> Ellipsoid:
    """Smallest origin-centered, axis-aligned ellipsoid enclosing a box."""
    h = _vec(half_widths, "half_widths")
    return Ellipsoid.from_axes(np.zeros(h.size), math.sqrt(h.size) * h)


def inflate(E: Ellipsoid, margin: Margin) -> Ellipsoid:
    return minkowski_outer_ellipsoid(E, margin.as_ellipsoid(E.dim))


def stopping_radius(v_max: float, a_max: float) -> float:
    if not (v_max > 0 and a_max > 0):
        raise RegionError("v_max and a_max must be positive")
    return v_max / (2 * a_max)


def inflate_stopping_margin(E: Ellipsoid, v_max: float, a_max: float) -> Ellipsoid:
    r = stopping_radius(v_max, a_max)
    return minkowski_outer_ellipsoid(E, Ellipsoid.ball(np.zeros(E.dim), r))


# ---------------------------------------------------------------------------
# JSON literals


def region_from_json(obj: dict) -> Region:
    kind = obj.get("type")
    if kind == "ellipsoid":
        return Ellipsoid(obj["center"], obj["shape"])
    if kind == "ball":
        return Ellipsoid.ball(obj["center"], obj["radius"])
    if kind == "polyhedron":
        return Polyhedron(obj["A"], obj["b"])
    if kind == "union":
        return Union(tuple(region_from_json(m) for m in obj["members"]))
    if kind == "intersection":
        return intersection(*(region_from_json(m) for m in obj["members"]))
    raise RegionError(f"unknown region type {kind!r}")


def region_to_json(region: Region) -> dict:
    if isinstance(region, Ellipsoid):
        return {"type": "ellipsoid", "center": region.center.tolist(),
                "shape": region.shape.tolist()}
    if isinstance(region, Polyhedron):
        return {"type": "polyhedron", "A": region.A.tolist(), "b": region.b.tolist()}
    if isinstance(region, Intersection):
        members = [region.polyhedron] if region.polyhedron is not None else []
        members += list(region.ellipsoids)
        return {"type": "intersection", "members": [region_to_json(m) for m in members]}
    if isinstance(region, Union):
        return {"type": "union", "members": [region_to_json(m) for m in region.members]}
    raise RegionError(f"unknown region type {type(region).__name__}")


def margin_from_json(obj) -> Margin:
    if isinstance(obj, (int, float)):
        return Ball(float(obj))
    if "radius" in obj:
        return Ball(float(obj["radius"]))
    if "semi_axes" in obj:
        return EllipsoidalMargin(Ellipsoid.from_axes(np.zeros(len(obj["semi_axes"])), obj["semi_axes"]))
    if "shape" in obj:
        return EllipsoidalMargin(Ellipsoid(np.zeros(len(obj["shape"])), obj["shape"]))
    raise RegionError(f"cannot parse margin {obj!r}")


__all__ = [
    "Ball", "Ellipsoid", "EllipsoidalMargin", "Intersection", "Margin", "Polyhedron",
    "QuadraticForm", "Region", "RegionError", "Union", "box_ellipsoid", "contains",
    "distance_to_region", "flatten", "inflate", "inflate_stopping_margin", "intersection",
    "margin_from_json", "minkowski_outer_ellipsoid", "region_from_json", "region_to_json",
    "stopping_radius",
]
