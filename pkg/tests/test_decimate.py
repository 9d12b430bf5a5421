import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import grid_min_quadric
from progunfold import shapes
from progunfold.decimate import (QQ, SEMP, SEQ, CollapseStrategy, Decimator, collapse_edge, decimate_to, edge_cost,
                                 is_collapse_valid, optimal_point, place_vertex, quadric_cost, target_face_count,
                                 uncollapse_edge, vertex_quadrics)
from progunfold.mesh import MeshError, mesh_from_arrays, validate
from progunfold.metrics import hausdorff_relative


@pytest.mark.parametrize("faces,genus,expected", [(2000, 0, 245), (100, 0, 20), (900, 1, 150)])
def test_target_face_count(faces, genus, expected):
    assert target_face_count(faces, genus) == expected


def test_target_face_count_floor_is_four():
    assert target_face_count(1, 0) == 4
    assert all(target_face_count(f, g) >= 4 for f in range(4, 60) for g in range(3))


def test_strategy_names():
    assert {s.name for s in (QQ, SEMP, SEQ)} == {"Q/Q", "SE/MP", "SE/Q"}
    assert CollapseStrategy.parse("SE/MP") == SEMP
    with pytest.raises(ValueError):
        CollapseStrategy.parse("mp/mp")


def _edge_between(mesh, a, b):
    h = mesh.find_halfedge(a, b)
    if h < 0:
        h = mesh.find_halfedge(b, a)
    return mesh.edge_id(h)


def _interior_flat_edge(mesh):
    normals = mesh.face_normals()
    for e in mesh.edges():
        u, v = mesh.edge_vertices(e)
        ring = mesh.vertex_faces[u] | mesh.vertex_faces[v]
        n = normals[sorted(ring)]
        if np.allclose(n, n[0], atol=1e-12):
            return e
    raise AssertionError("no flat edge")


def test_flat_region_has_zero_quadric_cost():
    m = shapes.box(4)
    e = _interior_flat_edge(m)
    assert edge_cost(m, e, QQ) == pytest.approx(0.0, abs=1e-12)


def test_shortest_edge_cost_is_length():
    m = shapes.cube()
    for e in m.edges():
        u, v = m.edge_vertices(e)
        if abs(np.linalg.norm(m.positions[u] - m.positions[v]) - 1.0) < 1e-15:
            assert edge_cost(m, e, SEMP) == 1.0
            break
    else:
        raise AssertionError("cube has no unit edge")


def test_cube_edge_quadric_matches_grid_search():
    m = shapes.cube()
    Q = vertex_quadrics(m)
    for e in list(m.edges())[:6]:
        u, v = m.edge_vertices(e)
        cost = edge_cost(m, e, QQ)
        mid = 0.5 * (m.positions[u] + m.positions[v])
        best, _ = grid_min_quadric(Q[u] + Q[v], mid, 1.0)
        assert abs(cost - best) < 1e-6


def test_midpoint_placement():
    m = mesh_from_arrays([(0, 0, 0), (2, 0, 0), (0, 1, 0), (0, 0, 1)], [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)])
    e = _edge_between(m, 0, 1)
    assert np.array_equal(place_vertex(m, e, SEMP), [1.0, 0.0, 0.0])


def test_quadric_placement_at_box_corner():
    m = shapes.box(4)
    corner = int(np.argmin(m.positions.sum(axis=1)))
    c = m.positions[corner]
    for w in sorted(m.vertex_neighbors(corner)):
        d = m.positions[w] - c
        if np.count_nonzero(np.abs(d) > 1e-12) == 1:  # along a box edge
            p = place_vertex(m, _edge_between(m, corner, w), QQ)
            assert np.allclose(p, c, atol=1e-9)
            return
    raise AssertionError("no axis edge at the corner")


def test_singular_quadric_falls_back_to_cheapest_candidate():
    m = shapes.box(4)
    e = _interior_flat_edge(m)
    u, v = m.edge_vertices(e)
    Q = vertex_quadrics(m)
    Quv = Q[u] + Q[v]
    p = place_vertex(m, e, QQ)
    pu, pv = m.positions[u], m.positions[v]
    for c in (pu, pv, 0.5 * (pu + pv)):
        assert quadric_cost(Quv, p) <= quadric_cost(Quv, c)


@pytest.mark.parametrize("name", ["icosphere320", "torus512"])
def test_quadric_placement_is_locally_optimal(canonical, name):
    m = canonical[name]
    Q = vertex_quadrics(m)
    delta = 1e-4 * m.bbox_diagonal()
    checked = 0
    for e in list(m.edges())[::7]:
        u, v = m.edge_vertices(e)
        A = (Q[u] + Q[v])[:3, :3]
        if abs(np.linalg.det(A)) < 1e-12 * np.abs(A).max() ** 3:
            continue
        p = place_vertex(m, e, QQ, Q)
        c0 = quadric_cost(Q[u] + Q[v], p)
        for axis in range(3):
            for s in (-1, 1):
                q = p.copy()
                q[axis] += s * delta
                assert quadric_cost(Q[u] + Q[v], q) >= c0 - 1e-15
        checked += 1
    assert checked > 10


def test_tetrahedron_edges_invalid():
    m = shapes.tetrahedron()
    assert not any(is_collapse_valid(m, e) for e in m.edges())


def test_icosphere_edges_valid_and_link_condition():
    m = shapes.icosphere(4)
    for e in list(m.edges())[:40]:
        u, v = m.edge_vertices(e)
        link_u, link_v = m.vertex_neighbors(u), m.vertex_neighbors(v)
        opposite = set()
        for f in m.vertex_faces[u] & m.vertex_faces[v]:
            opposite |= set(m.faces[f].tolist()) - {u, v}
        assert (link_u & link_v) == opposite
        assert is_collapse_valid(m, e)


def _signed_normals(mesh, faces, moved, position):
    p = mesh.positions[mesh.faces[faces]].copy()
    for k, f in enumerate(faces):
        for i, w in enumerate(mesh.faces[f]):
            if w in moved:
                p[k, i] = position
    return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def test_fold_over_rejected():
    m = shapes.icosphere(3)
    e = next(iter(m.edges()))
    u, v = m.edge_vertices(e)
    ring = sorted((m.vertex_faces[u] | m.vertex_faces[v]) - (m.vertex_faces[u] & m.vertex_faces[v]))
    bad = -m.positions[u]  # through the sphere to the far side
    before = _signed_normals(m, ring, set(), None)
    after = _signed_normals(m, ring, {u, v}, bad)
    assert np.any((before * after).sum(axis=1) <= 0)  # oracle: some face flips
    assert not is_collapse_valid(m, e, bad)
    assert is_collapse_valid(m, e)


def test_interior_collapse_removes_two_faces():
    m = shapes.icosphere(4)
    e = next(e for e in m.edges() if is_collapse_valid(m, e))
    before = m.n_faces
    rec = collapse_edge(m, e, place_vertex(m, e, SEMP))
    assert m.n_faces == before - 2 and len(rec.removed_faces) == 2
    m.audit()
    assert len(uncollapse_edge(m, rec)) == 2


def test_boundary_collapse_removes_one_face():
    m = shapes.grid_disk(4)
    ref = m.copy()
    e = next(e for e in m.edges() if m.twin[e] < 0 and is_collapse_valid(m, e))
    rec = collapse_edge(m, e, place_vertex(m, e, SEMP))
    assert m.n_faces == ref.n_faces - 1
    m.audit()
    assert uncollapse_edge(m, rec) == [rec.f0]
    assert m.same_as(ref)


def test_collapse_dead_edge_raises():
    m = shapes.icosphere(2)
    e = next(iter(m.edges()))
    collapse_edge(m, e, place_vertex(m, e, SEMP))
    with pytest.raises(MeshError):
        collapse_edge(m, e, np.zeros(3))


def test_out_of_order_uncollapse_raises():
    m = shapes.icosphere(3)
    recs = decimate_to(m, 60, QQ)
    assert len(recs) >= 2
    with pytest.raises(MeshError):
        uncollapse_edge(m, recs[0])


def test_decimate_icosphere_1280_to_164():
    m = shapes.icosphere(8)
    ref = m.copy()
    decimate_to(m, 164, QQ)
    assert m.n_faces in (163, 164)
    assert hausdorff_relative(ref, m) < 2.0


def test_decimate_noop_cases():
    m = shapes.icosphere(2)
    ref = m.copy()
    assert decimate_to(m, 80, QQ) == [] and m.same_as(ref)
    assert decimate_to(m, 500, QQ) == [] and m.same_as(ref)
    t = shapes.tetrahedron()
    assert decimate_to(t, 2, QQ) == []


def test_decimator_records_depth_and_guard():
    m = shapes.icosphere(3)
    d = Decimator(m, QQ)
    recs = d.run(20)
    assert [r.depth for r in recs] == list(range(len(recs)))
    assert m.n_faces >= 4


@given(st.sampled_from(["octahedron", "icosahedron", "icosphere80", "icosphere320", "torus512"]),
       st.sampled_from(["q/q", "se/mp", "se/q"]), st.floats(0.05, 0.9))
def test_full_reversal_is_bit_identical(name, strategy, ratio):
    ref = shapes.canonical_corpus()[name]
    m = ref.copy()
    genus = validate(m).genus
    d = Decimator(m, CollapseStrategy.parse(strategy))
    d.run(max(4, int(ratio * m.n_faces)))
    m.audit()
    counts = [m.n_faces]
    assert validate(m).genus == genus
    while d.records:
        d.uncollapse()
        m.audit()
        counts.append(m.n_faces)
    assert counts == sorted(counts)
    assert m.same_as(ref)


def test_face_count_monotone_and_genus_kept():
    m = shapes.torus(20, 12)
    d = Decimator(m, SEQ)
    d.run(80)
    faces = [r.f0 for r in d.records]
    assert len(faces) == len(set(faces))
    assert validate(m).genus == 1


def test_qq_beats_semp_on_most_of_the_corpus(hausdorff_table):
    wins = sum(row["q/q"] <= row["se/mp"] for row in hausdorff_table.values())
    assert len(hausdorff_table) == 20
    assert wins >= 16
