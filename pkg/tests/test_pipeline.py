import numpy as np
import pytest

from oracles import brute_overlaps, congruence, hinges_bit_equal, is_spanning_tree
from progunfold import shapes
from progunfold.decimate import QQ, SEMP, SEQ, Decimator
from progunfold.mesh import MeshError, validate
from progunfold.pipeline import (PipelineConfig, Status, direct_unfold, insert_uncollapsed_faces,
                                 progressive_unfold, seed_streams, unfold)
from progunfold.unfold import FaceFrames, initial_unfold_tree, layout


def _assert_valid_net(out):
    lay, tree, mesh = out.layout, out.tree, out.mesh
    assert brute_overlaps(lay.points, lay.faces) == set()
    assert sorted(lay.faces.tolist()) == mesh.alive_faces().tolist()
    assert is_spanning_tree(mesh, tree.parent)
    assert congruence(mesh, lay.points, lay.faces) < 1e-9
    assert hinges_bit_equal(mesh, tree, lay.points)


def test_icosphere_1280_success(canonical):
    m = canonical["icosphere1280"]
    before = (m.positions.copy(), m.faces.copy())
    out = progressive_unfold(m, QQ, rng=0)
    assert out.status is Status.SUCCESS and out.remaining == 0
    _assert_valid_net(out)
    assert out.mesh.same_as(m)
    assert np.array_equal(out.mesh.positions, m.positions) and np.array_equal(out.mesh.faces, m.faces)
    # the caller's mesh is untouched
    assert np.array_equal(m.positions, before[0]) and np.array_equal(m.faces, before[1])
    assert out.metrics.hausdorff is None and 0 < out.metrics.coverage <= 100


@pytest.mark.parametrize("strategy", [QQ, SEMP, SEQ], ids=lambda s: s.name)
def test_torus_success(canonical, strategy):
    out = progressive_unfold(canonical["torus512"], strategy, rng=1)
    assert out.status is Status.SUCCESS
    _assert_valid_net(out)
    assert out.mesh.same_as(canonical["torus512"])


def test_single_uncollapse_hook_gives_approximative(canonical):
    m = canonical["icosphere320"]
    out = progressive_unfold(m, QQ, PipelineConfig(max_uncollapses=1), rng=0)
    assert out.status is Status.APPROXIMATIVE
    assert out.mesh.n_faces == out.coarse_faces + 2 < m.n_faces
    assert out.remaining * 2 == m.n_faces - out.mesh.n_faces
    _assert_valid_net(out)
    assert out.metrics.hausdorff is not None and out.metrics.hausdorff > 0


def test_zero_step_budget_stays_coarse(canonical):
    out = progressive_unfold(canonical["icosphere1280"], QQ, PipelineConfig(step_budget_factor=0), rng=0)
    assert out.status is Status.APPROXIMATIVE and out.mesh.n_faces == out.coarse_faces
    _assert_valid_net(out)


@pytest.mark.parametrize("seed", range(3))
def test_stalled_refinement_returns_last_valid_state(canonical, seed):
    # a tiny per-step budget makes some step fail part way through
    m = canonical["torus512"]
    out = progressive_unfold(m, QQ, PipelineConfig(step_budget_factor=0.002), rng=seed)
    assert out.status is not Status.FAILED
    _assert_valid_net(out)
    out.mesh.audit()
    if out.status is Status.APPROXIMATIVE:
        assert out.remaining > 0 and out.mesh.n_faces == m.n_faces - 2 * out.remaining
        assert validate(out.mesh).genus == 1


def test_non_manifold_input_rejected():
    with pytest.raises(MeshError):
        progressive_unfold(shapes.fin())
    with pytest.raises(MeshError):
        progressive_unfold(shapes.two_tetrahedra())
    with pytest.raises(MeshError):
        direct_unfold(shapes.grid_disk(3))


def test_boundary_mesh_when_allowed():
    m = shapes.grid_disk(4)
    out = progressive_unfold(m, QQ, PipelineConfig(allow_boundary=True), rng=0)
    assert out.status is Status.SUCCESS
    _assert_valid_net(out)


@pytest.mark.parametrize("name", ["tetrahedron", "cube"])
def test_direct_small(canonical, name):
    out = direct_unfold(canonical[name], rng=0)
    assert out.status is Status.SUCCESS
    _assert_valid_net(out)


def test_direct_zero_budget_fails(canonical):
    m = canonical["torus512"]
    streams = seed_streams(0)
    lay = layout(m, initial_unfold_tree(m, streams["objective"]))
    assert brute_overlaps(lay.points, lay.faces)
    out = direct_unfold(m, PipelineConfig(budget_factor=0), rng=0)
    assert out.status is Status.FAILED and out.layout is None and out.tree is None
    assert not out.ok


def test_unfold_dispatch(canonical):
    m = canonical["octahedron"]
    assert unfold(m, None, rng=0).coarse_faces == m.n_faces
    assert unfold(m, QQ, rng=0).status is Status.SUCCESS


def test_deterministic_for_seed(canonical):
    m = canonical["icosphere320"]
    a = progressive_unfold(m, SEQ, rng=5)
    b = progressive_unfold(m, SEQ, rng=5)
    assert a.tree.state() == b.tree.state()
    assert a.layout.points.tobytes() == b.layout.points.tobytes()
    assert a.iterations == b.iterations


def _refine(mesh, steps, seed=0, allow_boundary=False):
    work = mesh.copy()
    dec = Decimator(work, QQ)
    dec.run(max(4, work.n_faces // 4))
    frames = FaceFrames(work)
    tree = initial_unfold_tree(work, np.random.default_rng(seed))
    lay = layout(work, tree, frames)
    rng = np.random.default_rng(seed)
    for _ in range(steps):
        if not dec.records:
            break
        faces_before = set(tree.faces())
        record, _ = dec.uncollapse()
        ring, moved = insert_uncollapsed_faces(tree, lay, work, record, rng, frames)
        yield work, tree, lay, record, ring, moved, set(tree.faces()) - faces_before


def test_interior_insertion_adds_two_nodes(canonical):
    for work, tree, lay, record, ring, moved, added in _refine(canonical["icosphere320"], 40):
        assert len(added) == 2 == len(record.removed_faces)
        assert added <= ring and set(moved) >= ring
        assert is_spanning_tree(work, tree.parent)
        assert congruence(work, lay.points, sorted(ring)) < 1e-9
        assert hinges_bit_equal(work, tree, lay.points)


def test_boundary_insertion_adds_one_node():
    seen = 0
    for work, tree, lay, record, ring, moved, added in _refine(shapes.grid_disk(5), 60):
        assert len(added) == len(record.removed_faces)
        seen += len(added) == 1
        assert is_spanning_tree(work, tree.parent)
        assert congruence(work, lay.points, sorted(ring)) < 1e-9
    assert seen > 0
