"""Generalized Voronoi cells and the dual functions that describe them.

A point ``y`` lies in the cell of ``x`` with respect to a region ``E`` when
``||y - x|| <= dist(y, E)``.  Expanding the squares turns this into

    ||x||^2 - 2 y^T x <= inf_{z in E} (||z||^2 - 2 y^T z),

and Lagrange duality replaces the constrained infimum on the right by the
concave dual function ``g(y, lam)`` evaluated at some ``lam >= 0``.  The
multipliers follow the doubled convention ``lam -> 2 lam`` for polyhedra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from carp.config import TOL
from carp.sets import (
    Ellipsoid,
    Intersection,
    Polyhedron,
    QuadraticForm,
    Region,
    RegionError,
    distance_to_region,
    flatten,
)


@dataclass(frozen=True, eq=False)
class EigenCache:
    """Eigendecomposition ``Sigma = V diag(D) V^T`` of a quadratic-form matrix."""

    D: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        if np.abs(V.T @ V - np.eye(V.shape[0])).max() > 1e-10:
            raise RegionError("eigenvectors are not orthonormal")
        if np.min(self.D) <= 0:
            raise RegionError("eigenvalues must be positive")

    @classmethod
    def of(cls, sigma: np.ndarray) -> "EigenCache":
        D, V = np.linalg.eigh(sigma)
        return cls(D, V)

    def matches(self, sigma: np.ndarray) -> bool:
        err = np.abs((self.V * self.D) @ self.V.T - sigma).max()
        return err <= TOL.eigen_cache * max(1.0, np.abs(sigma).max())


@dataclass(frozen=True, eq=False)
class VoronoiConstraint:
    """One convex region the cell of ``anchor`` must stay closer than.

    ``layout`` lists the multiplier block sizes: the polyhedron rows first
    (if any), then one scalar per ellipsoid.
    """

    anchor: np.ndarray
    region: Ellipsoid | Polyhedron | Intersection

    @property
    def layout(self) -> tuple[int, ...]:
        if isinstance(self.region, Ellipsoid):
            return (1,)
        if isinstance(self.region, Polyhedron):
            return (self.region.rows,)
        blocks = (self.region.rows,) if self.region.polyhedron is not None else ()
        return blocks + (1,) * len(self.region.ellipsoids)

    @property
    def n_multipliers(self) -> int:
        return sum(self.layout)


def constraints_for(anchor, regions: Sequence[Region]) -> list[VoronoiConstraint]:
    """Split a family of regions into single-region constraints.

    Unions contribute one constraint per member; empty members are dropped
    since their distance is infinite.
    """
    x = np.asarray(anchor, dtype=float)
    out = []
    for R in regions:
        for member in flatten(R):
            if isinstance(member, (Polyhedron, Intersection)) and member.is_empty:
                continue
            out.append(VoronoiConstraint(x, member))
    return out


def cell_membership(x, regions: Sequence[Region], y, tol: float = TOL.distance) -> bool:
    """Direct test of ``||y - x|| <= dist(y, R_j)`` for every region."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = float(np.linalg.norm(y - x))
    return all(r <= distance_to_region(y, R) + tol for R in regions)


def _check_nonneg(lam, name="lambda"):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise RegionError(f"{name} must be nonnegative")
    return lam


def dual_g_polyhedron(y, lam, P: Polyhedron) -> float:
    y = np.asarray(y, dtype=float)
    lam = _check_nonneg(np.atleast_1d(lam))
    if lam.size != P.rows:
        raise RegionError(f"expected {P.rows} multipliers, got {lam.size}")
    r = P.A.T @ lam - y
    return float(-r @ r - 2 * lam @ P.b)


def dual_g_ellipsoid(y, lam: float, form: QuadraticForm, cache: EigenCache | None = None) -> float:
    """Sum of quadratic-over-linear terms in the eigenbasis of ``Sigma``."""
    y = np.asarray(y, dtype=float)
    lam = float(_check_nonneg(lam))
    if cache is None:
        cache = EigenCache.of(form.sigma)
    elif not cache.matches(form.sigma):
        raise RegionError("eigen cache does not match the quadratic form")
    p = cache.V.T @ (lam * form.mu - y)
    return float(-np.sum(p * p / (1 + lam * cache.D)) - lam * form.kappa)


def dual_g_ellipsoid_direct(y, lam: float, form: QuadraticForm) -> float:
    """Same value as :func:`dual_g_ellipsoid` via a dense linear solve."""
    y = np.asarray(y, dtype=float)
    p = lam * form.mu - y
    X = np.eye(y.size) + lam * form.sigma
    return float(-p @ np.linalg.solve(X, p) - lam * form.kappa)


def dual_g_intersection(y, lam0, lams, P: Polyhedron | None, Es: Sequence[Ellipsoid]) -> float:
    """Matrix-fractional dual of ``P`` intersected with the ellipsoids ``Es``."""
    y = np.asarray(y, dtype=float)
    d = y.size
    lams = _check_nonneg(np.atleast_1d(np.asarray(lams, dtype=float)), "lambdas")
    if lams.size != len(Es):
        raise RegionError(f"expected {len(Es)} ellipsoid multipliers, got {lams.size}")
    q = -y.copy()
    X = np.eye(d)
    const = 0.0
    if P is not None:
        lam0 = _check_nonneg(np.atleast_1d(lam0), "lambda0")
        if lam0.size != P.rows or P.dim != d:
            raise RegionError("polyhedral multiplier or dimension mismatch")
        q += P.A.T @ lam0
        const += 2 * lam0 @ P.b
    for li, E in zip(lams, Es):
        if E.dim != d:
            raise RegionError("ellipsoid dimension mismatch")
        f = E.quadratic_form()
        q += li * f.mu
        X += li * f.sigma
        const += li * f.kappa
    return float(-q @ np.linalg.solve(X, q) - const)


def dual_g(y, lam, region: Ellipsoid | Polyhedron | Intersection) -> float:
    """Dispatch on region type with a flat multiplier vector."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if isinstance(region, Ellipsoid):
        return dual_g_ellipsoid(y, lam[0], region.quadratic_form())
    if isinstance(region, Polyhedron):
        return dual_g_polyhedron(y, lam, region)
    r = region.rows
    return dual_g_intersection(y, lam[:r], lam[r:], region.polyhedron, region.ellipsoids)


def restriction_holds(x, y, g_value: float, tol: float = TOL.restriction) -> bool:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(x @ x - 2 * y @ x) <= g_value + tol


def restriction_slack(x, y, lam: float, E: Ellipsoid) -> float:
    """``g(y, lam) - ||x||^2 + 2 y^T x`` for one ellipsoid, in center form.

    Algebraically identical to the eigen-form dual but avoids ``Q^{-1}``,
    so it stays well conditioned for near-degenerate shapes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q, V = E.eig
    a = V.T @ (y - E.center)
    return float(np.sum(a * a * lam / (q + lam)) - lam - np.sum((y - x) ** 2))


def best_multiplier(x, y, E: Ellipsoid) -> tuple[float, float]:
    """Maximize the restriction slack over ``lam >= 0`` by bounded 1-D search.

    Returns ``(lam, slack)``.  The slack is concave in ``lam`` and its maximum
    equals ``dist(y, E)^2 - ||y - x||^2``.
    """
    y = np.asarray(y, dtype=float)
    hi = float(np.sum((y - E.center) ** 2)) + 1.0
    res = minimize_scalar(lambda l: -restriction_slack(x, y, l, E), bounds=(0.0, hi),
                          method="bounded", options={"xatol": 1e-12 * hi, "maxiter": 500})
    lam = float(res.x)
    best = -float(res.fun)
    at_zero = restriction_slack(x, y, 0.0, E)
    if at_zero > best:
        return 0.0, at_zero
    return lam, best
