import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carp.sets import (
    Ball,
    Ellipsoid,
    EllipsoidalMargin,
    Polyhedron,
    RegionError,
    Union,
    box_ellipsoid,
    contains,
    distance_to_region,
    inflate,
    inflate_stopping_margin,
    intersection,
    margin_from_json,
    minkowski_outer_ellipsoid,
    region_from_json,
    region_to_json,
    stopping_radius,
)
from conftest import random_ellipsoid

UNIT = Ellipsoid.ball([0.0, 0.0], 1.0)


class TestValidation:
    def test_non_pd_shape_rejected(self):
        with pytest.raises(RegionError):
            Ellipsoid([0, 0], [[1, 0], [0, -1]])

    def test_asymmetric_shape_rejected(self):
        with pytest.raises(RegionError):
            Ellipsoid([0, 0], [[1, 0.5], [0, 1]])

    def test_shape_dimension_mismatch(self):
        with pytest.raises(RegionError):
            Ellipsoid([0, 0, 0], np.eye(2))

    def test_nonpositive_radius(self):
        with pytest.raises(RegionError):
            Ellipsoid.ball([0, 0], 0.0)

    def test_polyhedron_row_mismatch(self):
        with pytest.raises(RegionError):
            Polyhedron([[1.0, 0.0]], [1.0, 2.0])

    def test_distance_rejects_bad_region(self):
        with pytest.raises(RegionError):
            distance_to_region([0, 0], region_from_json({"type": "ellipsoid", "center": [0, 0],
                                                         "shape": [[1, 0], [0, 0]]}))


class TestContains:
    def test_inside_unit_ball(self):
        assert contains(UNIT, [0.5, 0.0])

    def test_outside_unit_ball(self):
        assert not contains(UNIT, [1.5, 0.0])

    def test_intersection_of_halfspace_and_ball(self):
        R = intersection(Polyhedron.halfspace([1.0, 0.0], 0.0), UNIT)
        assert contains(R, [-0.5, 0.0])
        assert not contains(R, [0.5, 0.0])

    def test_union_any_member(self):
        U = Union((UNIT, Ellipsoid.ball([5, 0], 1.0)))
        assert contains(U, [5.5, 0.0])
        assert not contains(U, [3.0, 0.0])


class TestDistance:
    def test_outside_sphere(self):
        assert distance_to_region([2.0, 0.0], UNIT) == pytest.approx(1.0, abs=1e-12)

    def test_inside_is_zero(self):
        assert distance_to_region([0.0, 0.0], UNIT) == 0.0

    def test_ellipse_matches_boundary_sampling(self):
        E = Ellipsoid([0.0, 0.0], np.diag([4.0, 1.0]))
        theta = np.linspace(0.0, 2 * np.pi, 1_000_000, endpoint=False)
        boundary = np.column_stack([2 * np.cos(theta), np.sin(theta)])
        sampled = np.min(np.linalg.norm(boundary - [3.0, 4.0], axis=1))
        assert distance_to_region([3.0, 4.0], E) == pytest.approx(sampled, abs=1e-4)

    def test_halfspace(self):
        H = Polyhedron.halfspace([1.0, 0.0], -2.0)
        assert distance_to_region([1.0, 3.0], H) == pytest.approx(3.0, abs=1e-6)

    def test_intersection(self):
        R = intersection(Polyhedron.halfspace([1.0, 0.0], 0.0), UNIT)
        assert distance_to_region([2.0, 0.0], R) == pytest.approx(2.0, abs=1e-6)

    def test_union_takes_nearest(self):
        U = Union((UNIT, Ellipsoid.ball([5, 0], 1.0)))
        assert distance_to_region([3.5, 0.0], U) == pytest.approx(0.5, abs=1e-12)

    def test_empty_polyhedron_is_infinitely_far(self):
        P = Polyhedron([[1.0, 0.0], [-1.0, 0.0]], [-1.0, -1.0])
        assert distance_to_region([0.0, 0.0], P) == np.inf

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_distance_is_attained_on_boundary(self, seed):
        rng = np.random.default_rng(seed)
        E = random_ellipsoid(rng, 3)
        y = rng.uniform(-8, 8, 3)
        dist = distance_to_region(y, E)
        if contains(E, y):
            assert dist == 0.0
            return
        pts = E.sample(rng, 20000, boundary=True)
        assert dist <= np.min(np.linalg.norm(pts - y, axis=1)) + 1e-9


class TestMinkowski:
    def test_balls_add_radii(self):
        S = minkowski_outer_ellipsoid(UNIT, Ellipsoid.ball([0, 0], 2.0))
        np.testing.assert_allclose(S.shape, 9.0 * np.eye(2), atol=1e-12)
        np.testing.assert_allclose(S.center, [0.0, 0.0])

    def test_point_summand_is_translation(self):
        E = Ellipsoid([1.0, 2.0], np.diag([4.0, 1.0]))
        S = minkowski_outer_ellipsoid(E, Ellipsoid.point([0.5, -0.5], eps=1e-14))
        np.testing.assert_allclose(S.center, [1.5, 1.5])
        np.testing.assert_allclose(S.semi_axes, E.semi_axes, atol=1e-6)

    def test_random_pairs_contained(self, rng):
        E1 = Ellipsoid([0.0, 0.0], np.diag([1.0, 4.0]))
        E2 = Ellipsoid([0.0, 0.0], np.diag([4.0, 1.0]))
        S = minkowski_outer_ellipsoid(E1, E2)
        z = E1.sample(rng, 10_000) + E2.sample(rng, 10_000)
        assert all(contains(S, p) for p in z)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_boundary_sums_contained(self, seed):
        rng = np.random.default_rng(seed)
        E1, E2 = random_ellipsoid(rng, 3), random_ellipsoid(rng, 3)
        S = minkowski_outer_ellipsoid(E1, E2)
        z = E1.sample(rng, 500, boundary=True) + E2.sample(rng, 500, boundary=True)
        assert all(contains(S, p, 1e-9) for p in z)


class TestMargins:
    def test_stopping_ball(self):
        E = inflate_stopping_margin(Ellipsoid.ball([0, 0, 0], 1.0), 6.0, 6.0)
        np.testing.assert_allclose(E.shape, 1.5**2 * np.eye(3), atol=1e-12)

    def test_stopping_radius_rejects_nonpositive(self):
        with pytest.raises(RegionError):
            stopping_radius(0.0, 1.0)
        with pytest.raises(RegionError):
            stopping_radius(1.0, -1.0)

    def test_box_ellipsoid_covers_corners(self):
        E = box_ellipsoid([0.3, 0.3, 0.7])
        for sx in (-1, 1):
            for sy in (-1, 1):
                for sz in (-1, 1):
                    assert contains(E, [0.3 * sx, 0.3 * sy, 0.7 * sz], 1e-12)

    def test_inflate_with_ball_margin(self):
        E = inflate(Ellipsoid.ball([1.0, 1.0], 0.5), Ball(0.4))
        np.testing.assert_allclose(E.semi_axes, [0.9, 0.9])

    def test_ellipsoidal_margin_must_be_centered(self):
        with pytest.raises(RegionError):
            EllipsoidalMargin(Ellipsoid.ball([1.0, 0.0], 1.0))

    def test_margin_json_forms(self):
        assert margin_from_json(0.4) == Ball(0.4)
        assert margin_from_json({"radius": 0.4}) == Ball(0.4)
        m = margin_from_json({"semi_axes": [0.3, 0.3, 0.7]})
        np.testing.assert_allclose(m.as_ellipsoid(3).semi_axes, [0.3, 0.3, 0.7])


def test_region_json_round_trip():
    R = Union((intersection(Polyhedron.halfspace([1.0, 0.0], 0.0), UNIT), Ellipsoid.ball([3, 0], 0.5)))
    back = region_from_json(json.loads(json.dumps(region_to_json(R))))
    for z in ([-0.5, 0.0], [0.5, 0.0], [3.2, 0.1], [2.0, 2.0]):
        assert contains(back, z) == contains(R, z)
