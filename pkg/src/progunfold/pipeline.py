"""Progressive unfolding: decimate, unfold the coarse mesh, then refine.

The coarse mesh is unfolded with tabu search.  Collapses are then undone
one at a time; the restored faces are spliced into the unfold tree and
only the neighbourhood of the split vertex is re-placed and re-checked.
When a refinement step cannot be repaired within its budget the last
overlap-free state is returned as an approximative result.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .decimate import QQ, CollapseRecord, CollapseStrategy, Decimator, collapse_edge, target_face_count
from .mesh import HalfEdgeMesh, MeshError, validate
from .metrics import MetricsReport, aspect_ratio, coverage, hausdorff_relative
from .tabu import TabuSolver
from .unfold import NOT_IN_TREE, FaceFrames, Layout2D, Placer, UnfoldTree, count_overlaps, initial_unfold_tree, layout

log = logging.getLogger(__name__)


class Status(str, Enum):
    SUCCESS = "success"
    APPROXIMATIVE = "approximative"
    FAILED = "failed"


@dataclass
class PipelineConfig:
    """Budgets and switches for one unfolding run.

    ``budget_factor`` scales the initial tabu budget with the coarse face
    count, ``step_budget_factor`` the budget of each refinement step with
    the current face count.  A per-step factor of 0 disables refinement.
    """

    budget_factor: float = 100.0
    step_budget_factor: float = 20.0
    target_faces: Optional[int] = None
    allow_boundary: bool = False
    tabu_capacity: Optional[int] = None
    # test hook: stop refining after this many successful steps
    max_uncollapses: Optional[int] = None
    compute_hausdorff: bool = True
    debug: bool = False


@dataclass
class UnfoldOutcome:
    status: Status
    mesh: HalfEdgeMesh
    tree: Optional[UnfoldTree]
    layout: Optional[Layout2D]
    remaining: int
    metrics: MetricsReport
    coarse_faces: int = 0
    iterations: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is not Status.FAILED


STREAMS = ("decimation", "objective", "tabu", "insertion")


def seed_streams(seed: Union[int, np.random.Generator, None]) -> dict[str, np.random.Generator]:
    """Independent generators for each randomized stage, derived from one seed."""
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2 ** 63))
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


def check_input(mesh: HalfEdgeMesh, allow_boundary: bool = False) -> None:
    problems = validate(mesh).problems(allow_boundary=allow_boundary)
    if problems:
        raise MeshError("invalid input mesh: " + "; ".join(problems))


# ---------------------------------------------------------------------------
# refinement step


def _top_level(tree: UnfoldTree, faces: set[int]) -> list[int]:
    """Members of ``faces`` with no proper ancestor in ``faces``."""
    out = []
    for f in sorted(faces):
        g = tree.parent[f]
        while g >= 0 and g not in faces:
            g = tree.parent[g]
        if g < 0:
            out.append(f)
    return out


def _root_in_largest_part(tree: UnfoldTree, ring: set[int]) -> None:
    """Reroot into the largest piece of the tree left after removing ``ring``.

    Rerooting keeps the layout, and every face outside the root's piece is
    re-placed afterwards, so this keeps the re-placed region small.
    """
    n = len(tree.faces())
    if tree.root not in ring:
        # cheap exit: the root's piece already holds more than half the faces
        budget = n // 2
        stack = list(_top_level(tree, ring))
        while stack and budget >= 0:
            f = stack.pop()
            budget -= 1
            stack.extend(tree.children[f])
        if budget >= 0:
            return
    _, tin, tout = tree.euler()
    size = (tout - tin).tolist()
    parts: dict[int, int] = {}
    root_in_ring = tree.root in ring
    root_part = -1 if root_in_ring else n
    for r in ring:
        for c in tree.children[r]:
            if c not in ring:
                parts.setdefault(c, size[c])
    for r in ring:
        prev, g = r, tree.parent[r]
        while g >= 0 and g not in ring:
            prev, g = g, tree.parent[g]
        if g < 0:
            if not root_in_ring:
                root_part -= size[r]
        elif prev != r:
            parts[prev] -= size[r]
    best, face = root_part, tree.root
    for c in sorted(parts):
        if parts[c] > best:
            best, face = parts[c], c
    if face != tree.root:
        tree.reroot(face)


def insert_uncollapsed_faces(tree: UnfoldTree, lay: Layout2D, mesh: HalfEdgeMesh, record: CollapseRecord,
                             rng: np.random.Generator, frames: FaceFrames) -> tuple[set[int], list[int]]:
    """Add the faces restored by ``record`` to ``tree`` and re-place the one-ring.

    A restored face that now separates a parent from its child is spliced
    in between; otherwise it becomes a leaf of a random tree neighbour.
    Returns the one-ring face set and the list of re-placed faces.
    """
    outer = record.outer
    for k, f in enumerate(record.removed_faces):
        (_, a), (_, b) = outer[2 * k], outer[2 * k + 1]
        A = a // 3 if a >= 0 else -1
        B = b // 3 if b >= 0 else -1
        if A >= 0 and B >= 0 and tree.parent[A] == B and tree.hinge[A] == a:
            tree.add_leaf(f, B)
            tree._set_parent(A, f)
        elif A >= 0 and B >= 0 and tree.parent[B] == A and tree.hinge[B] == b:
            tree.add_leaf(f, A)
            tree._set_parent(B, f)
        else:
            nbrs = sorted(g for g in mesh.face_neighbors(f) if tree.parent[g] != NOT_IN_TREE)
            tree.add_leaf(f, nbrs[int(rng.integers(len(nbrs)))])

    ring = set(mesh.vertex_faces[record.u]) | set(mesh.vertex_faces[record.v])
    frames.update(mesh, sorted(ring))
    lay.faces = np.array(sorted(tree.faces()), dtype=np.int64)
    _root_in_largest_part(tree, ring)
    placer = Placer(mesh, tree, frames, lay.points)
    moved: list[int] = []
    for f in _top_level(tree, ring):
        moved += placer.place_subtree(f)
    return ring, moved


# ---------------------------------------------------------------------------
# drivers


def _finish(status: Status, original: HalfEdgeMesh, mesh: HalfEdgeMesh, tree, lay, remaining: int,
            started: float, config: PipelineConfig, **extra) -> UnfoldOutcome:
    report = MetricsReport(status=status.value, faces=mesh.n_faces)
    if lay is not None:
        report.coverage = coverage(lay)
        report.aspect_ratio = aspect_ratio(lay)
    if status is Status.APPROXIMATIVE and config.compute_hausdorff:
        report.hausdorff = hausdorff_relative(original, mesh)
    report.wall_time = time.perf_counter() - started
    return UnfoldOutcome(status, mesh, tree if lay is not None else None, lay, remaining, report, **extra)


def direct_unfold(mesh: HalfEdgeMesh, config: Optional[PipelineConfig] = None,
                  rng: Union[int, np.random.Generator, None] = None) -> UnfoldOutcome:
    """Tabu search on the full-resolution mesh, without decimation."""
    config = config or PipelineConfig()
    started = time.perf_counter()
    check_input(mesh, config.allow_boundary)
    streams = seed_streams(rng)
    work = mesh.copy()
    frames = FaceFrames(work)
    tree = initial_unfold_tree(work, streams["objective"])
    lay = layout(work, tree, frames)
    solver = TabuSolver(work, tree, lay, streams["tabu"], frames=frames,
                        capacity=config.tabu_capacity, debug=config.debug)
    ok = solver.resolve(int(config.budget_factor * work.n_faces))
    status = Status.SUCCESS if ok else Status.FAILED
    return _finish(status, mesh, work, tree, lay if ok else None, 0, started, config,
                   coarse_faces=work.n_faces, iterations=solver.iterations)


def progressive_unfold(mesh: HalfEdgeMesh, strategy: CollapseStrategy = QQ,
                       config: Optional[PipelineConfig] = None,
                       rng: Union[int, np.random.Generator, None] = None) -> UnfoldOutcome:
    """Decimate, unfold the coarse mesh, then undo collapses while staying overlap-free.

    The input mesh is not modified; the outcome carries its own copy.
    """
    config = config or PipelineConfig()
    started = time.perf_counter()
    check_input(mesh, config.allow_boundary)
    streams = seed_streams(rng)
    work = mesh.copy()

    genus = validate(work).genus or 0
    target = config.target_faces if config.target_faces is not None else target_face_count(work.n_faces, genus)
    dec = Decimator(work, strategy)
    dec.run(target)
    coarse = work.n_faces
    log.debug("decimated %d -> %d faces (%d records)", mesh.n_faces, coarse, len(dec.records))

    frames = FaceFrames(work)
    tree = initial_unfold_tree(work, streams["objective"])
    lay = layout(work, tree, frames)
    solver = TabuSolver(work, tree, lay, streams["tabu"], frames=frames,
                        capacity=config.tabu_capacity, debug=config.debug)
    if not solver.resolve(int(config.budget_factor * coarse)):
        return _finish(Status.FAILED, mesh, work, tree, None, len(dec.records), started, config,
                       coarse_faces=coarse, iterations=solver.iterations)

    steps = 0
    insertion = streams["insertion"]
    while dec.records:
        if config.step_budget_factor <= 0 or (config.max_uncollapses is not None and steps >= config.max_uncollapses):
            break
        saved_parent, saved_root = list(tree.parent), tree.root
        saved_points, saved_faces = lay.points.copy(), lay.faces.copy()

        record, _ = dec.uncollapse()
        ring, moved = insert_uncollapsed_faces(tree, lay, work, record, insertion, frames)
        solver.refresh(np.asarray(moved, dtype=np.int64))
        if config.debug:
            tree.check()
        if solver.pairs and not solver.resolve(int(config.step_budget_factor * work.n_faces)):
            # restore the last overlap-free state at the coarser resolution
            redo = collapse_edge(work, record.halfedge, record.u_after)
            redo.u_quadric = record.u_quadric
            dec.records.append(redo)
            frames.update(work, redo.fan)
            tree = UnfoldTree(work, saved_parent, saved_root)
            lay.points[:] = saved_points
            lay.faces = saved_faces
            log.debug("refinement stalled with %d records left", len(dec.records))
            break
        steps += 1

    if dec.records:
        return _finish(Status.APPROXIMATIVE, mesh, work, tree, lay, len(dec.records), started, config,
                       coarse_faces=coarse, iterations=solver.iterations)
    return _finish(Status.SUCCESS, mesh, work, tree, lay, 0, started, config,
                   coarse_faces=coarse, iterations=solver.iterations)


def unfold(mesh: HalfEdgeMesh, strategy: Optional[CollapseStrategy] = QQ, config: Optional[PipelineConfig] = None,
           rng: Union[int, np.random.Generator, None] = None) -> UnfoldOutcome:
    """Progressive unfolding, or the direct baseline when ``strategy`` is None."""
    if strategy is None:
        return direct_unfold(mesh, config, rng)
    return progressive_unfold(mesh, strategy, config, rng)
