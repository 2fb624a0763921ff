import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from carp.sets import Ellipsoid, Polyhedron, RegionError, Union, contains, distance_to_region, intersection
from carp.voronoi import (
    EigenCache,
    best_multiplier,
    cell_membership,
    constraints_for,
    dual_g,
    dual_g_ellipsoid,
    dual_g_ellipsoid_direct,
    dual_g_intersection,
    dual_g_polyhedron,
    restriction_holds,
    restriction_slack,
)
from conftest import random_ellipsoid

ORIGIN = np.zeros(2)


class TestCellMembership:
    def test_point_obstacle_bisector(self):
        pt = [Ellipsoid.point([2.0, 0.0])]
        assert cell_membership(ORIGIN, pt, [0.9, 0.0])
        assert not cell_membership(ORIGIN, pt, [1.1, 0.0])

    def test_no_regions_is_whole_space(self):
        assert cell_membership(ORIGIN, [], [1e6, -3e5])

    def test_ball_obstacle_on_axis(self):
        ball = [Ellipsoid.ball([4.0, 0.0], 1.0)]
        assert cell_membership(ORIGIN, ball, [1.5, 0.0])
        assert not cell_membership(ORIGIN, ball, [1.6, 0.0])


class TestDualPolyhedron:
    def test_zero_multiplier(self):
        P = Polyhedron([[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0])
        assert dual_g_polyhedron([3.0, 4.0], [0.0, 0.0], P) == pytest.approx(-25.0)

    def test_hand_evaluation(self):
        P = Polyhedron([[1.0, 0.0]], [-2.0])
        assert dual_g_polyhedron([0.0, 0.0], [1.0], P) == pytest.approx(3.0)

    def test_negative_multiplier_rejected(self):
        with pytest.raises(RegionError):
            dual_g_polyhedron([0.0, 0.0], [-1.0], Polyhedron.halfspace([1.0, 0.0], 1.0))


class TestDualEllipsoid:
    def test_zero_multiplier(self, rng):
        E = random_ellipsoid(rng, 3)
        y = rng.standard_normal(3)
        assert dual_g_ellipsoid(y, 0.0, E.quadratic_form()) == pytest.approx(-y @ y)

    def test_hand_evaluation(self):
        form = Ellipsoid.ball([0.0, 0.0], 1.0).quadratic_form()
        assert dual_g_ellipsoid([1.0, 0.0], 1.0, form) == pytest.approx(-1.5)

    def test_stale_cache_rejected(self):
        form = Ellipsoid([0.0, 0.0], np.diag([1.0, 4.0])).quadratic_form()
        stale = EigenCache.of(np.eye(2))
        with pytest.raises(RegionError):
            dual_g_ellipsoid([1.0, 0.0], 1.0, form, stale)

    def test_cache_reuse_matches(self, rng):
        E = random_ellipsoid(rng, 3)
        form = E.quadratic_form()
        cache = EigenCache.of(form.sigma)
        y = rng.standard_normal(3)
        assert dual_g_ellipsoid(y, 0.7, form, cache) == pytest.approx(dual_g_ellipsoid_direct(y, 0.7, form))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_dual_is_infimum_of_lagrangian(self, seed):
        # g(y, lam) = min_z ||z||^2 - 2 y.z + lam * ((z-c)^T Q^-1 (z-c) - 1)
        rng = np.random.default_rng(seed)
        E = random_ellipsoid(rng, 2, axes=(0.5, 2.0))
        y = rng.uniform(-3, 3, 2)
        lam = float(rng.uniform(0, 3))
        Qi = np.linalg.inv(E.shape)

        def lagr(z):
            r = z - E.center
            return z @ z - 2 * y @ z + lam * (r @ Qi @ r - 1.0)

        best = minimize(lagr, np.zeros(2), method="BFGS", options={"gtol": 1e-10}).fun
        assert dual_g_ellipsoid(y, lam, E.quadratic_form()) == pytest.approx(best, abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_center_form_matches_eigen_form(self, seed):
        rng = np.random.default_rng(seed)
        E = random_ellipsoid(rng, 3)
        x, y = rng.uniform(-4, 4, 3), rng.uniform(-4, 4, 3)
        lam = float(rng.uniform(0, 5))
        direct = dual_g_ellipsoid(y, lam, E.quadratic_form()) - x @ x + 2 * y @ x
        assert restriction_slack(x, y, lam, E) == pytest.approx(direct, abs=1e-8 * (1 + abs(direct)))


class TestDualIntersection:
    def test_reduces_to_polyhedron(self, rng):
        for _ in range(1000):
            P = Polyhedron(rng.standard_normal((3, 2)), rng.standard_normal(3))
            y, lam = rng.standard_normal(2), rng.uniform(0, 2, 3)
            assert dual_g_intersection(y, lam, [], P, []) == pytest.approx(dual_g_polyhedron(y, lam, P), abs=1e-10)

    def test_reduces_to_ellipsoid(self, rng):
        for _ in range(200):
            E = random_ellipsoid(rng, 2)
            y, lam = rng.standard_normal(2), float(rng.uniform(0, 2))
            assert dual_g_intersection(y, [], [lam], None, [E]) == pytest.approx(
                dual_g_ellipsoid(y, lam, E.quadratic_form()), abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(RegionError):
            dual_g_intersection([0.0, 0.0], [], [1.0], None, [Ellipsoid.ball([0, 0, 0], 1.0)])

    def test_dispatch_on_intersection(self, rng):
        R = intersection(Polyhedron.halfspace([1.0, 0.0], 0.5), Ellipsoid.ball([0.0, 0.0], 1.0))
        y = np.array([0.3, -0.2])
        assert dual_g(y, [0.4, 0.9], R) == pytest.approx(
            dual_g_intersection(y, [0.4], [0.9], R.polyhedron, R.ellipsoids))


class TestRestriction:
    def test_staying_put_is_safe(self):
        x = np.array([0.0, 0.0])
        g = dual_g(x, [0.0], Ellipsoid.ball([10.0, 0.0], 1.0))
        assert g >= -x @ x
        assert restriction_holds(x, x, g)

    def test_halfspace_multiplier_search_matches_membership(self, rng):
        # max over lam >= 0 of the restriction slack for a single halfspace a.z <= b.
        for _ in range(1000):
            a = rng.standard_normal(2)
            b = float(rng.uniform(-3, 3))
            P = Polyhedron.halfspace(a, b)
            x = rng.uniform(-3, 3, 2)
            if contains(P, x, 0.0):
                continue
            y = rng.uniform(-4, 4, 2)
            # slack(lam) = -||lam a - y||^2 - 2 lam b - ||x||^2 + 2 y.x, concave quadratic in lam
            lam = max(0.0, (a @ y - b) / (a @ a))
            certified = restriction_holds(x, y, dual_g_polyhedron(y, [lam], P), tol=1e-9)
            margin = distance_to_region(y, P) - np.linalg.norm(y - x)
            if abs(margin) > 1e-6:
                assert certified == cell_membership(x, [P], y)

    def test_best_multiplier_equals_distance_gap(self, rng):
        for _ in range(100):
            E = random_ellipsoid(rng, 3)
            x = rng.uniform(-6, 6, 3)
            y = rng.uniform(-6, 6, 3)
            if contains(E, y):
                continue
            _, slack = best_multiplier(x, y, E)
            gap = distance_to_region(y, E) ** 2 - np.sum((y - x) ** 2)
            assert slack == pytest.approx(gap, abs=1e-7 * (1 + abs(gap)))


def test_constraints_split_unions_and_drop_empty():
    U = Union((Ellipsoid.ball([3, 0], 1.0), Ellipsoid.ball([-3, 0], 1.0)))
    empty = Polyhedron([[1.0, 0.0], [-1.0, 0.0]], [-1.0, -1.0])
    cons = constraints_for(ORIGIN, [U, empty])
    assert len(cons) == 2
