import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import ConvexHull

import oracles
from progunfold import shapes
from progunfold.mesh import mesh_from_arrays
from progunfold.metrics import (MetricsReport, aspect_ratio, coverage, distance_to_surface, hausdorff_relative,
                                min_area_obb, point_triangle_distance)
from progunfold.unfold import Layout2D, UnfoldTree, initial_unfold_tree, layout


def _square_net():
    pts = np.array([[[0, 0], [1, 0], [1, 1]], [[0, 0], [1, 1], [0, 1]]], float)
    return Layout2D(pts, [0, 1])


def _star_net():
    m = shapes.tetrahedron()
    return layout(m, UnfoldTree(m, [-1, 0, 0, 0], 0))


def test_unit_square_net():
    lay = _square_net()
    assert coverage(lay) == pytest.approx(100.0, abs=1e-12)
    assert aspect_ratio(lay) == pytest.approx(1.0, abs=1e-12)


def test_tetrahedron_star_net():
    lay = _star_net()
    assert abs(coverage(lay) - 50.0) <= 1e-6
    assert abs(aspect_ratio(lay) - 2 / math.sqrt(3)) <= 1e-6
    box = min_area_obb(lay.points[lay.faces].reshape(-1, 2))
    assert box.area == pytest.approx(2 * math.sqrt(3), rel=1e-12)


def test_degenerate_layout_rejected():
    flat = Layout2D(np.array([[[0, 0], [1, 0], [2, 0]]], float), [0])
    with pytest.raises(ValueError):
        coverage(flat)
    with pytest.raises(ValueError):
        aspect_ratio(flat)


@given(st.integers(0, 10 ** 6), st.integers(3, 60))
def test_obb_is_minimal_and_contains_points(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 2)) * rng.uniform(0.1, 5, size=2)
    try:
        hull = ConvexHull(pts)
    except Exception:
        return
    box = min_area_obb(pts)
    assert box.half_extents[0] >= box.half_extents[1] > 0
    # containment
    u = np.array([math.cos(box.angle), math.sin(box.angle)])
    v = np.array([-u[1], u[0]])
    d = pts - np.asarray(box.center)
    tol = 1e-9 * (1 + np.abs(pts).max())
    assert (np.abs(d @ u) <= box.half_extents[0] + tol).all()
    assert (np.abs(d @ v) <= box.half_extents[1] + tol).all()
    # minimal among the axis-aligned box and every hull-edge-aligned box
    assert box.area <= oracles.box_area_along(pts, 0.0) * (1 + 1e-12)
    hp = pts[hull.vertices]
    for k in range(len(hp)):
        e = hp[(k + 1) % len(hp)] - hp[k]
        assert box.area <= oracles.box_area_along(pts, math.atan2(e[1], e[0])) * (1 + 1e-9)


@given(st.sampled_from(["cube", "icosahedron", "icosphere80", "torus512"]), st.integers(0, 10 ** 6),
       st.floats(-math.pi, math.pi), st.floats(-100, 100), st.floats(-100, 100))
def test_metrics_invariant_under_rigid_motion(name, seed, angle, tx, ty):
    m = shapes.canonical_corpus()[name]
    lay = layout(m, initial_unfold_tree(m, np.random.default_rng(seed)))
    R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    moved = lay.copy()
    moved.points = lay.points @ R.T + [tx, ty]
    assert coverage(moved) == pytest.approx(coverage(lay), rel=1e-9)
    assert aspect_ratio(moved) == pytest.approx(aspect_ratio(lay), rel=1e-9)
    assert 0 < coverage(lay) <= 100.0 + 1e-9 and aspect_ratio(lay) >= 1.0


@given(st.lists(st.floats(-3, 3), min_size=12, max_size=12))
def test_point_triangle_distance_matches_projection_oracle(v):
    p, a, b, c = (np.array(v[3 * k:3 * k + 3]) for k in range(4))
    if np.linalg.norm(np.cross(b - a, c - a)) < 1e-3:
        return
    got = point_triangle_distance(p[None], a[None], b[None], c[None])[0]
    assert got == pytest.approx(oracles.point_triangle_distance(p, a, b, c), abs=1e-9)


def test_distance_to_surface_matches_exhaustive():
    m = shapes.canonical_corpus()["torus512"]
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3, 3, size=(60, 3))
    tri = m.positions[m.faces]
    want = [min(oracles.point_triangle_distance(p, *t) for t in tri) for p in pts]
    assert np.allclose(distance_to_surface(pts, m), want, atol=1e-12)


def test_hausdorff_self_is_zero():
    m = shapes.icosphere(2)
    # interior samples sit on the surface up to rounding
    assert hausdorff_relative(m, m.copy()) == pytest.approx(0.0, abs=1e-9)


def test_hausdorff_translated_cube():
    cube = shapes.cube()
    moved = mesh_from_arrays(cube.positions + [0.1, 0.0, 0.0], cube.faces)
    analytic = 100 * 0.1 / math.sqrt(3)
    assert hausdorff_relative(cube, moved) == pytest.approx(analytic, rel=0.05)


def test_hausdorff_monotone_in_density():
    a = shapes.icosphere(4)
    b = shapes.icosphere(1)
    values = [hausdorff_relative(a, b, samples_per_area=d, seed=3) for d in (0.5, 1, 2, 5, 10)]
    assert all(x <= y for x, y in zip(values, values[1:]))
    assert values[-1] > 0


def test_report_serialisation():
    r = MetricsReport(status="success", faces=4, coverage=50.0, aspect_ratio=1.2, wall_time=0.5)
    assert r.to_dict()["wall_time"] == 0.5
    assert "wall_time" not in r.to_dict(timings=False)
    assert r.to_dict()["hausdorff"] is None
