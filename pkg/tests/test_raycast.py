import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raysense.raycast import (
    GridSpec,
    Ray,
    angles_from_vectors,
    cast_grid,
    direction_from_angles,
    intersect_quad,
    intersect_sphere,
    intersect_triangle,
)
from raysense.scene import Actor, Material, Pose, Quad, SceneFrame, Sphere, Triangle

X = (1.0, 0.0, 0.0)


def ray(o=(0, 0, 0), d=X):
    d = np.asarray(d, dtype=float)
    return Ray(np.asarray(o, dtype=float), d / np.linalg.norm(d))


def frame(*actors):
    return SceneFrame(0.0, actors)


# --- single-ray intersections -------------------------------------------------

def test_sphere_axial_hit():
    h = intersect_sphere(ray(), Sphere((10, 0, 0), 1.0))
    assert h.distance == pytest.approx(9.0, abs=1e-12)
    assert h.incidence == pytest.approx(0.0, abs=1e-7)
    np.testing.assert_allclose(h.normal, [-1, 0, 0], atol=1e-12)


def test_sphere_offset_miss():
    assert intersect_sphere(ray((0, 2, 0)), Sphere((10, 0, 0), 1.0)) is None


def test_sphere_near_grazing_matches_chord_geometry():
    b = 0.999
    h = intersect_sphere(ray((0, b, 0)), Sphere((10, 0, 0), 1.0))
    half_chord = math.sqrt(1.0 - b * b)
    assert h.distance == pytest.approx(10.0 - half_chord, rel=1e-9)
    # normal is (hit - center) = (-half_chord, b, 0); cos(theta) = half_chord
    assert h.incidence == pytest.approx(math.acos(half_chord), rel=1e-9)


def test_sphere_behind_origin_missed():
    assert intersect_sphere(ray(), Sphere((-10, 0, 0), 1.0)) is None


def test_sphere_from_inside_hits_far_wall():
    h = intersect_sphere(ray(), Sphere((0.5, 0, 0), 2.0))
    assert h.distance == pytest.approx(2.5)


def test_quad_facing_ray():
    q = Quad((5, -0.5, -0.5), (0, 1, 0), (0, 0, 1))
    h = intersect_quad(ray(), q)
    assert h.distance == pytest.approx(5.0)
    assert h.incidence == pytest.approx(0.0, abs=1e-12)


def test_quad_parallel_ray_misses():
    q = Quad((0, 1, -1), (10, 0, 0), (0, 0, 2))  # in the y = 1 plane
    assert intersect_quad(ray((0, 0, 0)), q) is None
    # ray running inside the plane itself
    assert intersect_quad(ray((0, 1, 0)), q) is None


def test_quad_oblique_45_degrees():
    # plane through (5, 0, 0) with normal (1, 1, 0)/sqrt2
    q = Quad((5.5, -0.5, -0.5), (-1, 1, 0), (0, 0, 1))
    h = intersect_quad(ray(), q)
    assert h.distance == pytest.approx(5.0)
    assert h.incidence == pytest.approx(math.pi / 4, rel=1e-12)


def test_quad_outside_edges_missed():
    q = Quad((5, 0.1, -0.5), (0, 1, 0), (0, 0, 1))
    assert intersect_quad(ray(), q) is None


def test_triangle_hit_back_face_and_miss():
    tri = Triangle((4, -1, -1), (4, 1, -1), (4, 0, 1))
    h = intersect_triangle(ray(), tri)
    assert h.distance == pytest.approx(4.0)
    # the same triangle seen from behind still returns a hit, with the normal flipped toward the ray
    back = intersect_triangle(ray((8, 0, 0), (-1, 0, 0)), tri)
    assert back.distance == pytest.approx(4.0)
    np.testing.assert_allclose(back.normal, [1, 0, 0], atol=1e-12)
    assert intersect_triangle(ray((0, 0.9, 0.9)), tri) is None


# --- grids --------------------------------------------------------------------

def test_grid_angles_and_directions():
    g = GridSpec((-0.3, 0.3), (-0.1, 0.1), 6, 4)
    az, el = g.angles()
    assert az.shape == (24,)
    np.testing.assert_allclose(az[:6], g.az_centers())
    np.testing.assert_allclose(el[::6], g.el_centers())
    d = g.directions()
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
    az2, el2 = angles_from_vectors(d)
    np.testing.assert_allclose(az2, az, atol=1e-12)
    np.testing.assert_allclose(el2, el, atol=1e-12)
    np.testing.assert_allclose(direction_from_angles(np.pi / 2, 0.0), [0, 1, 0], atol=1e-15)


def test_grid_rejects_unordered_fov():
    with pytest.raises(ValueError):
        GridSpec((0.1, -0.1))


def test_solid_angles_sum_to_patch_area():
    g = GridSpec((-0.5, 0.5), (-0.2, 0.3), 40, 20)
    exact = 1.0 * (math.sin(0.3) - math.sin(-0.2))
    assert g.solid_angles().sum() == pytest.approx(exact, rel=1e-3)


def test_sphere_ahead_fills_narrow_grid():
    g = GridSpec((-0.01, 0.01), (-0.01, 0.01), 3, 3)
    hits = cast_grid(frame(Actor(Sphere((10, 0, 0), 1.0))), Pose.identity(), np.zeros(3), g)
    assert len(hits) == 9
    center = hits[4]
    assert center.distance == pytest.approx(9.0, abs=1e-3)
    assert center.incidence < 0.02


def test_occlusion_nearest_wins():
    g = GridSpec((-0.05, 0.05), (-0.05, 0.05), 5, 5)
    far = Actor(Quad((20, -5, -5), (0, 10, 0), (0, 0, 10)), material=Material(2, 0.5))
    near = Actor(Sphere((10, 0, 0), 0.1), material=Material(1, 0.5))
    hits = cast_grid(frame(far, near), Pose.identity(), np.zeros(3), g)
    c = hits.select(hits.ray_index == 12)[0]
    assert c.class_id == 1
    assert c.distance == pytest.approx(9.9, rel=1e-6)
    assert np.all(hits.distance <= 20.0 / np.cos(0.1) + 1e-9)


def test_wall_distances_match_plane_oracle():
    # oblique wall; each ray distance = n.(q - o) / n.d
    corner = np.array([8.0, 10.0, -3.0])
    eu, ev = np.array([12.0, -20.0, 0.0]), np.array([0.0, 0.0, 6.0])
    wall = Actor(Quad(corner, eu, ev))
    g = GridSpec((-0.4, 0.4), (-0.1, 0.1), 32, 4)
    pose = Pose.from_yaw((0.5, -0.2, 0.3), 0.1)
    hits = cast_grid(frame(wall), pose, np.zeros(3), g)
    n = np.cross(eu, ev)
    dirs = g.directions()[hits.ray_index] @ pose.rotation.T
    oracle = (n @ (corner - pose.position)) / (dirs @ n)
    assert len(hits) == g.n_az * g.n_el
    np.testing.assert_allclose(hits.distance, oracle, rtol=1e-12)


def test_hit_range_rate_and_local_frame():
    g = GridSpec((-0.01, 0.01), (-0.01, 0.01), 1, 1)
    car = Actor(Sphere((20, 0, 0), 1.0), velocity=(3, 0, 0))
    hits = cast_grid(frame(car), Pose.from_yaw((0, 0, 0), 0.0), np.array([10.0, 0, 0]), g)
    assert hits[0].range_rate == pytest.approx(-7.0, rel=1e-9)
    np.testing.assert_allclose(hits[0].local_point, hits[0].point)


def test_beam_filling_plane_rcs_converges_under_refinement():
    # total sigma = sum rho d^2 dOmega over a plane filling the FoV
    wall = Actor(Quad((20, -50, -20), (0, 100, 0), (0, 0, 40)), material=Material(0, 0.6))
    totals = []
    for n_az, n_el in ((32, 8), (64, 16)):
        g = GridSpec((-0.5, 0.5), (-0.2, 0.2), n_az, n_el)
        h = cast_grid(frame(wall), Pose.identity(), np.zeros(3), g)
        assert len(h) == n_az * n_el
        totals.append(np.sum(h.reflectivity * h.distance ** 2 * h.solid_angle))
    assert abs(totals[1] / totals[0] - 1.0) < 0.02


angles = st.floats(-1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(2, 50), st.floats(0.1, 3), angles, st.floats(-0.3, 0.3))
def test_hit_properties(dist, radius, az, el):
    center = dist * direction_from_angles(az, el)
    g = GridSpec((-1.2, 1.2), (-0.4, 0.4), 24, 8)
    hits = cast_grid(frame(Actor(Sphere(center, radius))), Pose.identity(), np.zeros(3), g)
    if len(hits) == 0:
        return
    np.testing.assert_allclose(np.linalg.norm(hits.normal, axis=1), 1.0, atol=1e-9)
    cos = np.cos(hits.incidence)
    assert np.all((cos >= 0) & (cos <= 1))
    assert np.all(hits.distance > 0)
    # points lie on the sphere
    np.testing.assert_allclose(np.linalg.norm(hits.point - center, axis=1), radius, rtol=1e-9, atol=1e-9)
    again = cast_grid(frame(Actor(Sphere(center, radius))), Pose.identity(), np.zeros(3), g)
    np.testing.assert_array_equal(again.distance, hits.distance)
