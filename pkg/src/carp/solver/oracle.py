"""Grid-search reference solution for the cell projection.

Independent of the dual machinery: membership is tested directly through
``||y - x|| <= dist(y, R)`` with distances computed geometrically.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np
import shapely
from scipy.spatial import ConvexHull

from carp.sets import Ellipsoid, Intersection, Polyhedron, Region, distance_to_region, flatten

CHUNK = 4096


def ellipsoid_distances(points: np.ndarray, E: Ellipsoid, steps: int = 200) -> np.ndarray:
    """Vectorized distance to an ellipsoid by bisection on the secular equation."""
    q, V = E.eig
    w = (points - E.center) @ V
    outside = np.sum(w * w / q, axis=1) > 1.0
    lo = np.zeros(len(points))
    hi = np.linalg.norm(w, axis=1) * np.sqrt(q.max()) + 1e-300
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        F = np.sum(w * w * q / (q + mid[:, None]) ** 2, axis=1)
        big = F > 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
    nu = 0.5 * (lo + hi)
    z = w * q / (q + nu[:, None])
    return np.where(outside, np.linalg.norm(w - z, axis=1), 0.0)


def polygon_distances(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Distance from 2-D points to a convex polygon (zero inside)."""
    poly = shapely.Polygon(verts)
    return shapely.distance(poly, shapely.points(points))


def _bisect_crossings(path, inside, n):
    """Samples of a path inside the region, plus refined membership changes."""
    ts = np.linspace(0.0, 1.0, n)
    pts = path(ts)
    flags = inside(pts)
    k = np.flatnonzero(flags[:-1] != flags[1:])
    if k.size == 0:
        return pts[flags]
    lo, hi = ts[k], ts[k + 1]
    want = flags[k]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        same = inside(path(mid)) == want
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return np.vstack([pts[flags], path(np.where(want, lo, hi))])


def region_polygon(R: Polyhedron | Intersection, clip: tuple[np.ndarray, np.ndarray], n: int = 4096):
    """Convex polygon of a 2-D polyhedron or intersection, clipped to a box.

    Returns counter-clockwise vertices, or None when the clipped region is empty.
    Boundary crossings between members are located by bisection, so the
    polygon is exact at corners and inscribed along curved arcs.
    """
    lo, hi = clip
    poly = Polyhedron.box(lo, hi)
    if isinstance(R, Polyhedron):
        poly, ells = poly.intersect(R), ()
    else:
        ells = R.ellipsoids
        if R.polyhedron is not None:
            poly = poly.intersect(R.polyhedron)

    def inside(P):
        ok = np.all(P @ poly.A.T <= poly.b + 1e-12, axis=1)
        for E in ells:
            diff = P - E.center
            ok &= np.sum(diff * np.linalg.solve(E.shape, diff.T).T, axis=1) <= 1.0 + 1e-12
        return ok

    # polygon vertices from pairwise line intersections
    cand = []
    A, b = poly.A, poly.b
    for i, j in itertools.combinations(range(A.shape[0]), 2):
        M = A[[i, j]]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b[[i, j]])
        if np.all(A @ v <= b + 1e-9):
            cand.append(v)
    pieces = []
    verts = np.array(cand)
    if len(verts) >= 3:
        hull = verts[ConvexHull(verts).vertices]
        for a, c in zip(hull, np.roll(hull, -1, axis=0)):
            pieces.append(_bisect_crossings(lambda t, a=a, c=c: a + t[:, None] * (c - a), inside, 64))
    for E in ells:
        q, V = E.eig
        r = np.sqrt(q)

        def arc(t, E=E, V=V, r=r):
            th = 2 * np.pi * t
            return E.center + (np.column_stack([np.cos(th), np.sin(th)]) * r) @ V.T

        pieces.append(_bisect_crossings(arc, inside, n))
    pieces = [p for p in pieces if len(p)]
    if not pieces:
        return None
    pts = np.vstack(pieces)
    if len(pts) < 3:
        return None
    try:
        hull = ConvexHull(pts)
    except Exception:
        return None
    return pts[hull.vertices]


def _witnesses(kind: str, shape, d: int) -> np.ndarray:
    """Points of a region; any of them upper-bounds the distance to it."""
    if kind == "ellipsoid":
        q, V = shape.eig
        if d == 2:
            th = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
            u = np.column_stack([np.cos(th), np.sin(th)])
        else:
            k = np.arange(256) + 0.5
            z = 1.0 - 2.0 * k / 256
            phi = np.pi * (3.0 - np.sqrt(5.0)) * k
            rr = np.sqrt(1.0 - z * z)
            u = np.column_stack([rr * np.cos(phi), rr * np.sin(phi), z])
        return shape.center + (u * np.sqrt(q)) @ V.T
    if kind == "polygon":
        return np.asarray(shape, dtype=float)
    return np.zeros((0, d))


def brute_force_projection(x, goal, regions: Sequence[Region], grid_step: float):
    """Grid point nearest the goal among those passing the direct membership test.

    The grid is anchored at the goal so an interior goal is found exactly.
    Returns ``None`` when no grid point is feasible.
    """
    x = np.asarray(x, dtype=float)
    goal = np.asarray(goal, dtype=float)
    d = x.size
    members = list(itertools.chain.from_iterable(flatten(R) for R in regions))
    # x itself is feasible, so the answer lies in the ball ||y - goal|| <= ||x - goal||
    reach = np.linalg.norm(x - goal) + grid_step
    lo, hi = goal - reach, goal + reach
    axes = []
    for k in range(d):
        n_lo = int(np.floor((goal[k] - lo[k]) / grid_step))
        n_hi = int(np.floor((hi[k] - goal[k]) / grid_step))
        axes.append(goal[k] + grid_step * np.arange(-n_lo, n_hi + 1))
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    dist_goal = np.linalg.norm(grid - goal, axis=1)
    keep = dist_goal <= reach
    grid, dist_goal = grid[keep], dist_goal[keep]
    grid = grid[np.argsort(dist_goal, kind="stable")]

    # clipping box large enough that no relevant nearest point is cut off
    span = 2.0 * np.max(np.linalg.norm(grid - x, axis=1)) + 1.0
    clip = (grid.min(axis=0) - span, grid.max(axis=0) + span)
    shapes = []
    for m in members:
        if isinstance(m, Ellipsoid):
            shapes.append(("ellipsoid", m))
        elif d == 2:
            poly = region_polygon(m, clip)
            if poly is not None:
                shapes.append(("polygon", poly))
        else:
            shapes.append(("lazy", m))

    # ||y - x|| > ||y - b|| + tol for a point b of a region certifies y is outside
    # the cell; squared, that is linear in y.  Only survivors get the exact test.
    W = np.vstack([_witnesses(kind, shape, d) for kind, shape in shapes] + [np.zeros((0, d))])
    Wa = 2.0 * (W - x)
    Wc = np.sum(W * W, axis=1) - x @ x
    for start in range(0, len(grid), CHUNK):
        chunk = grid[start:start + CHUNK]
        r = np.linalg.norm(chunk - x, axis=1)
        ok = np.ones(len(chunk), dtype=bool)
        if len(W):
            ok &= np.max(chunk @ Wa.T - Wc, axis=1) <= 2e-7 * r + 1e-14
            if not ok.any():
                continue
        for kind, shape in shapes:
            if kind == "ellipsoid":
                ok[ok] &= r[ok] <= ellipsoid_distances(chunk[ok], shape) + 1e-7
            elif kind == "polygon":
                ok[ok] &= r[ok] <= polygon_distances(chunk[ok], shape) + 1e-7
        for idx in np.flatnonzero(ok):
            if all(r[idx] <= distance_to_region(chunk[idx], m) + 1e-7
                   for kind, m in shapes if kind == "lazy"):
                return chunk[idx]
    return None
