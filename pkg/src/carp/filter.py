"""Set-membership ellipsoidal filter with guaranteed containment.

Predict grows the estimate by a bounded displacement set; update fuses the
estimate with a measurement ellipsoid into an outer bound of their
intersection.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from carp.sets import Ellipsoid, minkowski_outer_ellipsoid

GOLDEN_ITERATIONS = 50
_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FilterState:
    estimate: Ellipsoid
    last_update_tick: int = -1
    inconsistent: bool = False


def predict(state: FilterState, motion_bound: Ellipsoid) -> FilterState:
    """Grow the estimate by a displacement set centered at the origin."""
    if np.abs(motion_bound.center).max() > 0:
        raise ValueError("motion bound must be centered at the origin")
    return replace(state, estimate=minkowski_outer_ellipsoid(state.estimate, motion_bound))


def motion_ball(dim: int, v_max: float, dt: float) -> Ellipsoid:
    """Displacement bound for one tick at speed at most ``v_max``."""
    return Ellipsoid.ball(np.zeros(dim), v_max * dt)


class _Fusion:
    """Family ``rho W1 (z-c1)^2 + (1-rho) W2 (z-c2)^2 <= 1`` in a shared eigenbasis.

    With ``W1 = L L^T`` and ``L^{-1} W2 L^{-T} = U diag(g) U^T`` every member
    is diagonal after the change of variables ``u = U^T L^T z``, so ``k(rho)``
    and the trace of the fused shape are cheap closed forms.
    """

    def __init__(self, E1: Ellipsoid, E2: Ellipsoid):
        W1 = np.linalg.inv(E1.shape)
        W2 = np.linalg.inv(E2.shape)
        L = np.linalg.cholesky(W1)
        Linv = np.linalg.inv(L)
        g, U = np.linalg.eigh(Linv @ W2 @ Linv.T)
        self.g = np.maximum(g, 1e-300)
        self.T = U.T @ L.T                      # u = T z
        self.Tinv = np.linalg.inv(self.T)
        self.u1 = self.T @ E1.center
        self.u2 = self.T @ E2.center
        self.delta2 = (self.u1 - self.u2) ** 2
        self.col_norms = np.sum(self.Tinv**2, axis=0)
        self._g, self._d2, self._cn = self.g.tolist(), self.delta2.tolist(), self.col_norms.tolist()

    def k(self, rho: float) -> float:
        # den > 0 on [0, 1] because both shapes are positive definite
        acc = 0.0
        for g, dl in zip(self._g, self._d2):
            acc += g * dl / (rho + (1.0 - rho) * g)
        return 1.0 - rho * (1.0 - rho) * acc

    def member(self, rho: float) -> Ellipsoid | None:
        den = rho + (1.0 - rho) * self.g
        k = self.k(rho)
        if k <= 0 or np.any(den <= 0):
            return None
        uc = (rho * self.u1 + (1.0 - rho) * self.g * self.u2) / den
        shape = self.Tinv @ np.diag(k / den) @ self.Tinv.T
        return Ellipsoid(self.Tinv @ uc, 0.5 * (shape + shape.T))

    def trace(self, rho: float) -> float:
        # plain floats: d is at most a few, where numpy call overhead dominates
        acc = tr = 0.0
        for g, dl, cn in zip(self._g, self._d2, self._cn):
            den = rho + (1.0 - rho) * g
            acc += g * dl / den
            tr += cn / den
        k = 1.0 - rho * (1.0 - rho) * acc
        return tr * k if k > 0 else np.inf


def _golden(f, lo=0.0, hi=1.0, iterations=GOLDEN_ITERATIONS) -> float:
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def intersection_is_empty(E1: Ellipsoid, E2: Ellipsoid) -> bool:
    """Two ellipsoids are disjoint iff some combination ``k(rho)`` is negative.

    ``k`` is convex in ``rho``, so a bounded scalar minimization decides it.
    """
    if E1.level(E2.center) <= 1.0 or E2.level(E1.center) <= 1.0:
        return False
    fam = _Fusion(E1, E2)
    res = minimize_scalar(fam.k, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    return min(res.fun, fam.k(0.0), fam.k(1.0)) <= 0.0


def fuse(E1: Ellipsoid, E2: Ellipsoid) -> Ellipsoid | None:
    """Trace-minimizing outer bound of ``E1 ∩ E2``; None when they are disjoint."""
    fam = _Fusion(E1, E2)
    if intersection_is_empty(E1, E2):
        return None
    rho = _golden(fam.trace)
    best = fam.member(rho)
    # endpoints are the inputs themselves
    for cand in (E1, E2):
        if best is None or np.trace(cand.shape) < np.trace(best.shape):
            best = cand
    return best


def update(state: FilterState, measurement: Ellipsoid, tick: int | None = None) -> FilterState:
    """Fuse a measurement set into the estimate.

    Disjoint inputs mean the measurement contradicts the estimate; the state
    is flagged and reset to the measurement.
    """
    fused = fuse(state.estimate, measurement)
    tick = state.last_update_tick + 1 if tick is None else tick
    if fused is None:
        return FilterState(measurement, tick, True)
    return FilterState(fused, tick, False)
