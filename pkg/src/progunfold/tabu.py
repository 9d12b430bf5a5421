"""Tabu search over unfold trees to remove layout overlaps.

Each iteration reroots the tree at a random face, picks a random
overlapping face and climbs towards the root looking for a re-hinge that
lowers the total overlap count.  If none does, the least bad move seen on
the way is taken.  Recently undone attachments are tabu.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mesh import HalfEdgeMesh, average_dual_valence
from .overlap import TriangleGrid, count_overlaps_points, overlaps_against, triangle_bboxes, triangles_overlap
from .unfold import FaceFrames, Layout2D, Placer, UnfoldTree, count_overlaps, rigid_transform

log = logging.getLogger(__name__)


def tabu_capacity(face_count: int, avg_valence: float) -> int:
    """``floor(val * log_val(F))``, at least 1."""
    if face_count < 2 or avg_valence <= 1:
        return 1
    return max(1, int(math.floor(avg_valence * math.log(face_count) / math.log(avg_valence))))


@dataclass(frozen=True)
class Move:
    face: int
    old_parent: int
    new_parent: int


class TabuList:
    """Bounded FIFO of forbidden (face, parent) attachments."""

    def __init__(self, capacity: int):
        self.capacity = max(1, capacity)
        self._items: deque[tuple[int, int]] = deque(maxlen=self.capacity)

    def __contains__(self, item: tuple[int, int]) -> bool:
        return item in self._items

    def __len__(self) -> int:
        return len(self._items)

    def push(self, face: int, parent: int) -> None:
        self._items.append((face, parent))

    def clear(self) -> None:
        self._items.clear()


class TabuSolver:
    """Mutable solver state for one tree/layout pair.

    ``layout.points`` is updated in place; ``pairs`` always equals the exact
    overlap set of the current layout.
    """

    def __init__(self, mesh: HalfEdgeMesh, tree: UnfoldTree, layout: Layout2D,
                 rng: np.random.Generator, frames: Optional[FaceFrames] = None,
                 capacity: Optional[int] = None, pairs: Optional[set] = None,
                 trace: Optional[Callable[[int, Move, int], None]] = None, debug: bool = False):
        self.mesh = mesh
        self.tree = tree
        self.layout = layout
        self.rng = rng
        self.frames = frames or FaceFrames(mesh)
        self.placer = Placer(mesh, tree, self.frames, layout.points)
        self._fixed_capacity = capacity
        self.tabu = TabuList(capacity or self._formula_capacity())
        self.pairs: set[tuple[int, int]] = set(pairs) if pairs is not None else set(count_overlaps(layout).pairs)
        self.trace = trace
        self.debug = debug
        self.iterations = 0
        self._grid: Optional[TriangleGrid] = None

    # -- bookkeeping -------------------------------------------------------------

    def _formula_capacity(self) -> int:
        return tabu_capacity(self.mesh.n_faces, average_dual_valence(self.mesh))

    @property
    def count(self) -> int:
        return len(self.pairs)

    def overlapping_faces(self) -> list[int]:
        return sorted({f for p in self.pairs for f in p})

    def _grid_now(self) -> TriangleGrid:
        if self._grid is None:
            f = self.layout.faces
            self._grid = TriangleGrid(self.layout.points[f], f)
        return self._grid

    def refresh(self, faces: np.ndarray) -> None:
        """Recompute overlaps for ``faces`` after their placement changed."""
        self._grid = None
        moved = set(faces.tolist())
        self.pairs = {p for p in self.pairs if p[0] not in moved and p[1] not in moved}
        if len(faces) == 0:
            return
        P, every = self.layout.points, self.layout.faces
        # only faces whose boxes meet the moved region can be new partners
        lo, hi = triangle_bboxes(P[every])
        mlo, mhi = triangle_bboxes(P[faces])
        rlo, rhi = mlo.min(axis=0), mhi.max(axis=0)
        near = every[(lo[:, 0] < rhi[0]) & (lo[:, 1] < rhi[1]) & (hi[:, 0] > rlo[0]) & (hi[:, 1] > rlo[1])]
        a, b = overlaps_against(P, near, faces, TriangleGrid(P[near], near))
        self.pairs.update(zip(np.minimum(a, b).tolist(), np.maximum(a, b).tolist()))

    def _prepare(self) -> None:
        self._order, self._tin, self._tout = self.tree.euler()
        self._order_arr = np.asarray(self._order, dtype=np.int64)
        self._tin_list = self._tin.tolist()

    # -- moves -------------------------------------------------------------------

    def _candidates(self, x: int) -> list[int]:
        tree, tin, tout = self.tree, self._tin_list, self._tout
        lo, hi = tin[x], int(tout[x])
        out = []
        for q in sorted(self.mesh.face_neighbors(x)):
            if q == tree.parent[x] or lo <= tin[q] < hi:
                continue
            if (x, q) in self.tabu:
                continue
            out.append(q)
        return out

    def _moved_side(self, x: int, q: int) -> tuple[np.ndarray, np.ndarray, bool]:
        """Faces that move if ``x`` is re-hinged onto ``q``, and their new triangles.

        The smaller side of the tree moves rigidly.  The transform is applied
        elementwise, so hinge points shared inside the moved side stay
        bit-equal; copies of the new hinge's endpoints are snapped onto the
        static side.  The
        third value tells whether the moved side is the subtree of ``x``.
        """
        P = self.layout.points
        h = self.mesh.shared_halfedge(x, q)
        i, j = h % 3, int(self.mesh.twin[h]) % 3
        new = self.placer.construct(x, q, h)
        R, t = rigid_transform(P[x, [i, (i + 1) % 3]], np.array([new[i], new[(i + 1) % 3]]))
        lo, hi = self._tin_list[x], int(self._tout[x])
        n = len(self._order)
        small = hi - lo <= n - hi + lo
        if small:
            movers = self._order_arr[lo:hi]
        else:
            movers = np.concatenate([self._order_arr[:lo], self._order_arr[hi:]])
            R, t = R.T, -R.T @ t
        src = P[movers]
        moved = np.empty_like(src)
        moved[..., 0] = src[..., 0] * R[0, 0] + src[..., 1] * R[0, 1] + t[0]
        moved[..., 1] = src[..., 0] * R[1, 0] + src[..., 1] * R[1, 1] + t[1]
        # every copy of a hinge endpoint takes the exact static-side value
        if small:
            pins = ((P[x, i], P[q, (j + 1) % 3]), (P[x, (i + 1) % 3], P[q, j]))
        else:
            pins = ((P[q, j], P[x, (i + 1) % 3]), (P[q, (j + 1) % 3], P[x, i]))
        for old, target in pins:
            moved[(src == old).all(axis=-1)] = target
        return movers, moved, small

    def evaluate(self, x: int, q: int) -> int:
        """Total overlap count if ``x`` were re-hinged onto ``q``."""
        P = self.layout.points
        movers, moved, small = self._moved_side(x, q)
        lo, hi = self._tin_list[x], int(self._tout[x])
        qlo, qhi = triangle_bboxes(moved)
        qi, item = self._grid_now().query(qlo, qhi)
        other = self._grid_now().ids[item]
        tin_o = self._tin[other]
        inside = (tin_o >= lo) & (tin_o < hi)
        keep = ~inside if small else inside
        qi, other = qi[keep], other[keep]
        new_cross = int(np.count_nonzero(triangles_overlap(moved[qi], P[other]))) if len(qi) else 0
        # rounding in the rigid motion can flip pairs that only touch, so the
        # moved side's own overlaps are recounted as well
        new_own = count_overlaps_points(moved, np.arange(len(movers))).count
        tin = self._tin_list
        old_cross = old_own = 0
        for a, b in self.pairs:
            ia, ib = lo <= tin[a] < hi, lo <= tin[b] < hi
            if ia != ib:
                old_cross += 1
            elif ia == small:
                old_own += 1
        return self.count - old_cross - old_own + new_cross + new_own

    def find_move(self, start: int) -> Optional[tuple[Move, int]]:
        """Climb from ``start`` to the root; first strictly improving move wins.

        Falls back to the best move seen on the path (ties by face, then
        parent id).  Returns ``None`` when no non-tabu candidate exists.
        """
        current = self.count
        best: Optional[tuple[int, int, int]] = None
        for x in self.tree.path_to_root(start):
            p = self.tree.parent[x]
            if p < 0:
                break
            local: Optional[tuple[int, int]] = None
            for q in self._candidates(x):
                c = self.evaluate(x, q)
                if local is None or c < local[0]:
                    local = (c, q)
            if local is None:
                continue
            if local[0] < current:
                return Move(x, p, local[1]), local[0]
            key = (local[0], x, local[1])
            if best is None or key < best:
                best = key
        if best is None:
            return None
        c, x, q = best
        return Move(x, self.tree.parent[x], q), c

    def apply(self, move: Move) -> None:
        x, q = move.face, move.new_parent
        movers, moved, small = self._moved_side(x, q)
        self.tree.attach(x, q)
        if not small:
            self.tree.reroot(x)
        self.layout.points[movers] = moved
        self.refresh(movers)
        self.tabu.push(x, move.old_parent)

    # -- main loop -----------------------------------------------------------------

    def step(self) -> Optional[Move]:
        faces = self.layout.faces
        self.tree.reroot(int(faces[self.rng.integers(len(faces))]))
        self._prepare()
        overlapping = self.overlapping_faces()
        start = overlapping[int(self.rng.integers(len(overlapping)))]
        found = self.find_move(start)
        if found is None:
            self.tabu.clear()
            found = self.find_move(start)
        if found is None:
            return None
        move, predicted = found
        self.apply(move)
        if self.trace is not None:
            self.trace(self.iterations, move, self.count)
        if self.debug:
            self.tree.check()
            assert self.count == predicted, (self.count, predicted)
            if self.iterations % 1000 == 0:
                assert self.pairs == set(count_overlaps(self.layout).pairs)
        return move

    def resolve(self, budget: int) -> bool:
        """Iterate until overlap-free or ``budget`` iterations are spent."""
        if self._fixed_capacity is None:
            # the face count grows during refinement
            self.tabu = TabuList(self._formula_capacity())
        else:
            self.tabu.clear()
        used = 0
        while self.pairs and used < budget:
            used += 1
            self.iterations += 1
            self.step()
        log.debug("resolve: %d iterations, %d overlaps left", used, self.count)
        return not self.pairs


def resolve_overlaps(tree: UnfoldTree, layout: Layout2D, mesh: HalfEdgeMesh, budget: int,
                     rng: np.random.Generator, **kwargs) -> bool:
    """Run tabu search in place on ``tree``/``layout``; True iff overlap-free."""
    return TabuSolver(mesh, tree, layout, rng, **kwargs).resolve(budget)
