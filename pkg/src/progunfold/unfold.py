"""Unfold trees, planar layouts and edge moves.

An unfold tree is a spanning tree of the dual graph.  Each non-root face
keeps the halfedge it shares with its parent (the *hinge*); every other edge
is cut.  A layout places each face in the plane by copying the two hinge
points from the parent's triangle and constructing the third point, so a
child and its parent share their hinge points bit for bit.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional

import numpy as np

from .mesh import HalfEdgeMesh, MeshError
from .overlap import OverlapSet, count_overlaps_points, overlaps_against

NOT_IN_TREE = -2


class TreeError(ValueError):
    """Raised for moves that would break the spanning-tree property."""


class UnfoldTree:
    """Rooted spanning tree over the faces of ``mesh``.

    ``parent[f]`` is -1 for the root and ``NOT_IN_TREE`` for dead face
    slots; ``hinge[f]`` is the halfedge of ``f`` whose twin lies in the
    parent face.
    """

    def __init__(self, mesh: HalfEdgeMesh, parent: list[int], root: int):
        self.mesh = mesh
        n = len(mesh.faces)
        self.parent = list(parent) + [NOT_IN_TREE] * (n - len(parent))
        self.root = root
        self.parent[root] = -1
        self.children: list[list[int]] = [[] for _ in range(n)]
        self.hinge = [-1] * n
        for f, p in enumerate(self.parent):
            if p >= 0:
                self.children[p].append(f)
                h = mesh.shared_halfedge(f, p)
                if h < 0:
                    raise TreeError(f"faces {f} and {p} are not adjacent")
                self.hinge[f] = h
        for c in self.children:
            c.sort()

    # -- queries --------------------------------------------------------------

    def faces(self) -> list[int]:
        return [f for f, p in enumerate(self.parent) if p != NOT_IN_TREE]

    def hinge_edge(self, f: int) -> int:
        h = self.hinge[f]
        return -1 if h < 0 else self.mesh.edge_id(h)

    def hinge_edges(self) -> set[int]:
        return {self.mesh.edge_id(h) for h in self.hinge if h >= 0}

    def cut_edges(self) -> set[int]:
        return set(self.mesh.edges()) - self.hinge_edges()

    def subtree(self, f: int) -> list[int]:
        out, stack = [], [f]
        while stack:
            g = stack.pop()
            out.append(g)
            stack.extend(reversed(self.children[g]))
        return out

    def is_descendant(self, f: int, ancestor: int) -> bool:
        while f >= 0:
            if f == ancestor:
                return True
            f = self.parent[f]
        return False

    def path_to_root(self, f: int) -> list[int]:
        out = []
        while f >= 0:
            out.append(f)
            f = self.parent[f]
        return out

    def euler(self) -> tuple[list[int], np.ndarray, np.ndarray]:
        """Preorder and entry/exit indices: subtree(f) == order[tin[f]:tout[f]]."""
        n = len(self.parent)
        children = self.children
        order: list[int] = []
        stack = [self.root]
        while stack:
            f = stack.pop()
            order.append(f)
            stack.extend(reversed(children[f]))
        size = [1] * n
        parent = self.parent
        for f in reversed(order):
            p = parent[f]
            if p >= 0:
                size[p] += size[f]
        tin = np.full(n, -1, dtype=np.int64)
        idx = np.asarray(order, dtype=np.int64)
        tin[idx] = np.arange(len(order))
        tout = np.full(n, -1, dtype=np.int64)
        tout[idx] = tin[idx] + np.asarray(size, dtype=np.int64)[idx]
        return order, tin, tout

    def copy(self) -> "UnfoldTree":
        out = UnfoldTree.__new__(UnfoldTree)
        out.mesh = self.mesh
        out.parent = list(self.parent)
        out.root = self.root
        out.children = [list(c) for c in self.children]
        out.hinge = list(self.hinge)
        return out

    def state(self) -> tuple:
        return self.root, tuple(self.parent)

    def check(self) -> None:
        """Raise ``TreeError`` unless this is a spanning tree of the live faces."""
        mesh = self.mesh
        alive = set(mesh.alive_faces().tolist())
        if set(self.faces()) != alive:
            raise TreeError("tree nodes differ from live faces")
        if self.parent[self.root] != -1:
            raise TreeError("root has a parent")
        seen = set(self.subtree(self.root))
        if seen != alive or len(self.subtree(self.root)) != len(alive):
            raise TreeError("tree is not connected or has a cycle")
        for f in alive:
            p = self.parent[f]
            if p < 0:
                if f != self.root:
                    raise TreeError(f"face {f} has no parent")
                continue
            if f not in self.children[p]:
                raise TreeError(f"face {f} missing from children of {p}")
            h = self.hinge[f]
            if h // 3 != f or mesh.twin[h] < 0 or mesh.twin[h] // 3 != p:
                raise TreeError(f"hinge of face {f} is not shared with parent {p}")

    # -- edits ----------------------------------------------------------------

    def _set_parent(self, f: int, p: int) -> None:
        old = self.parent[f]
        if old >= 0:
            self.children[old].remove(f)
        self.parent[f] = p
        if p >= 0:
            kids = self.children[p]
            kids.append(f)
            kids.sort()
            self.hinge[f] = self.mesh.shared_halfedge(f, p)
        else:
            self.hinge[f] = -1

    def reroot(self, new_root: int) -> "UnfoldTree":
        """Make ``new_root`` the root without changing the hinge set."""
        if self.parent[new_root] == NOT_IN_TREE:
            raise TreeError(f"face {new_root} is not in the tree")
        path = self.path_to_root(new_root)
        for child, par in reversed(list(zip(path, path[1:]))):
            self._set_parent(par, child)
        self._set_parent(new_root, -1)
        self.root = new_root
        return self

    def attach(self, f: int, new_parent: int) -> "UnfoldTree":
        """Re-hinge ``f`` (and its subtree) onto the adjacent face ``new_parent``."""
        if f == self.root:
            raise TreeError("the root has no parent to replace")
        if self.mesh.shared_halfedge(f, new_parent) < 0:
            raise TreeError(f"faces {f} and {new_parent} are not adjacent")
        if self.is_descendant(new_parent, f):
            raise TreeError(f"face {new_parent} lies in the subtree of {f}")
        self._set_parent(f, new_parent)
        return self

    def add_leaf(self, f: int, p: int) -> None:
        self.parent[f] = NOT_IN_TREE
        self._set_parent(f, p)

    def remove_leaf(self, f: int) -> None:
        if self.children[f]:
            raise TreeError(f"face {f} is not a leaf")
        self._set_parent(f, -1)
        self.parent[f] = NOT_IN_TREE


def reroot(tree: UnfoldTree, new_root: int) -> UnfoldTree:
    return tree.reroot(new_root)


def apply_move(tree: UnfoldTree, face: int, new_parent: int) -> UnfoldTree:
    return tree.attach(face, new_parent)


# ---------------------------------------------------------------------------
# initial tree


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def steepness(mesh: HalfEdgeMesh, edges: np.ndarray, c: np.ndarray) -> np.ndarray:
    a = mesh.positions[mesh.faces[edges // 3, edges % 3]]
    b = mesh.positions[mesh.faces[edges // 3, (edges % 3 + 1) % 3]]
    d = b - a
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return np.abs(d @ c)


def initial_unfold_tree(mesh: HalfEdgeMesh, rng: np.random.Generator, max_draws: int = 8) -> UnfoldTree:
    """Steepest-edge style start: keep the flattest edges w.r.t. a random direction.

    The hinge set is a minimum-steepness spanning tree of the dual graph
    (Kruskal, ties by edge id), so steep edges tend to be cut.
    """
    edges = np.array([e for e in mesh.edges() if mesh.twin[e] >= 0], dtype=np.int64)
    for _ in range(max_draws):
        c = rng.normal(size=3)
        c /= np.linalg.norm(c)
        s = steepness(mesh, edges, c)
        if len(s) == 0 or s.max() - s.min() > 1e-12 * max(s.max(), 1e-300):
            break
    order = np.lexsort((edges, s))
    uf = list(range(len(mesh.faces)))
    adj: dict[int, list[int]] = {}
    kept = np.zeros(len(edges), dtype=bool)
    for k in order.tolist():
        e = int(edges[k])
        f, g = e // 3, int(mesh.twin[e]) // 3
        rf, rg = _find(uf, f), _find(uf, g)
        if rf != rg:
            uf[rf] = rg
            kept[k] = True
            adj.setdefault(f, []).append(g)
            adj.setdefault(g, []).append(f)

    alive = mesh.alive_faces()
    cut = np.flatnonzero(~kept)
    if len(cut):
        k = int(cut[np.lexsort((edges[cut], -s[cut]))[0]])
        a, b = mesh.edge_vertices(int(edges[k]))
        top = a if mesh.positions[a] @ c >= mesh.positions[b] @ c else b
        root = min(mesh.vertex_faces[top])
    else:
        root = int(alive[0])

    parent = [NOT_IN_TREE] * len(mesh.faces)
    parent[root] = -1
    queue = [root]
    for f in queue:
        for g in sorted(adj.get(f, ())):
            if parent[g] == NOT_IN_TREE:
                parent[g] = f
                queue.append(g)
    if len(queue) != len(alive):
        raise MeshError("dual graph is disconnected")
    return UnfoldTree(mesh, parent, root)


# ---------------------------------------------------------------------------
# layout


class FaceFrames:
    """Per-face, per-hinge-corner shape data for planar construction.

    For corner ``i`` of face ``f`` (hinge running from corner i to i+1),
    the third corner sits at ``A + x*(B-A) + y*perp(B-A)`` where ``perp``
    rotates by +90 degrees.
    """

    def __init__(self, mesh: HalfEdgeMesh):
        n = len(mesh.faces)
        self.x = np.zeros((n, 3))
        self.y = np.zeros((n, 3))
        self.length = np.zeros((n, 3))
        self._xl: list[list[float]] = [[0.0] * 3 for _ in range(n)]
        self._yl: list[list[float]] = [[0.0] * 3 for _ in range(n)]
        self.update(mesh, mesh.alive_faces())

    def update(self, mesh: HalfEdgeMesh, faces: Iterable[int]) -> None:
        faces = np.asarray(list(faces) if not isinstance(faces, np.ndarray) else faces, dtype=np.int64)
        if len(faces) == 0:
            return
        p = mesh.positions[mesh.faces[faces]]  # (k, 3, 3)
        for i in range(3):
            a, b, c = p[:, i], p[:, (i + 1) % 3], p[:, (i + 2) % 3]
            e = b - a
            w = c - a
            ee = (e * e).sum(axis=1)
            self.x[faces, i] = (w * e).sum(axis=1) / ee
            self.y[faces, i] = np.linalg.norm(np.cross(e, w), axis=1) / ee
            self.length[faces, i] = np.sqrt(ee)
        for f, xs, ys in zip(faces.tolist(), self.x[faces].tolist(), self.y[faces].tolist()):
            self._xl[f] = xs
            self._yl[f] = ys


class Layout2D:
    """Planar triangles indexed by face id: ``points[f, k]`` is corner k of face f."""

    def __init__(self, points: np.ndarray, faces: Iterable[int]):
        self.points = points
        self.faces = np.array(sorted(faces), dtype=np.int64)

    def triangles(self) -> np.ndarray:
        return self.points[self.faces]

    def copy(self) -> "Layout2D":
        return Layout2D(self.points.copy(), self.faces)

    def area(self) -> float:
        t = self.triangles()
        d1, d2 = t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]
        return float(0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]).sum())


class Placer:
    """Places faces of a tree into a shared points array."""

    def __init__(self, mesh: HalfEdgeMesh, tree: UnfoldTree, frames: FaceFrames, points: np.ndarray):
        self.mesh = mesh
        self.tree = tree
        self.frames = frames
        self.points = points

    def place_root(self, f: int) -> None:
        L = float(self.frames.length[f, 0])
        x, y = self.frames._xl[f][0], self.frames._yl[f][0]
        self.points[f] = ((0.0, 0.0), (L, 0.0), (x * L, y * L))

    def construct(self, f: int, p: int, h: int) -> np.ndarray:
        """Triangle of ``f`` hinged on halfedge ``h`` against the placed face ``p``."""
        t = int(self.mesh.twin[h])
        i, j = h % 3, t % 3
        (bx, by), (ax, ay) = self.points[p, j].tolist(), self.points[p, (j + 1) % 3].tolist()
        x, y = self.frames._xl[f][i], self.frames._yl[f][i]
        dx, dy = bx - ax, by - ay
        row = np.empty((3, 2))
        row[i] = (ax, ay)
        row[(i + 1) % 3] = (bx, by)
        row[(i + 2) % 3] = (ax + x * dx - y * dy, ay + x * dy + y * dx)
        return row

    def place_from(self, f: int, p: int, h: Optional[int] = None) -> None:
        """Place ``f`` against its (already placed) neighbour ``p``."""
        if h is None:
            h = self.tree.hinge[f]
        self.points[f] = self.construct(f, p, h)

    def place_subtree(self, f: int) -> list[int]:
        """Re-place ``f`` (against its parent, or as root) and everything below."""
        tree = self.tree
        done = []
        stack = [f]
        while stack:
            g = stack.pop()
            p = tree.parent[g]
            if p < 0:
                self.place_root(g)
            else:
                self.place_from(g, p)
            done.append(g)
            stack.extend(tree.children[g])
        return done


def layout(mesh: HalfEdgeMesh, tree: UnfoldTree, frames: Optional[FaceFrames] = None) -> Layout2D:
    """Lay out every face by one top-down traversal from the root."""
    frames = frames or FaceFrames(mesh)
    points = np.zeros((len(mesh.faces), 3, 2))
    Placer(mesh, tree, frames, points).place_subtree(tree.root)
    return Layout2D(points, tree.faces())


def count_overlaps(lay: Layout2D) -> OverlapSet:
    """Exact overlap pairs, grid-accelerated."""
    return count_overlaps_points(lay.points, lay.faces)


def subtree_overlap_check(lay: Layout2D, tree: UnfoldTree, touched: Iterable[int]) -> OverlapSet:
    """Overlaps with at least one face in a subtree rooted at a touched face."""
    region: set[int] = set()
    for f in touched:
        if f not in region:
            region.update(tree.subtree(f))
    if not region:
        return OverlapSet(frozenset())
    a, b = overlaps_against(lay.points, lay.faces, np.array(sorted(region)))
    return OverlapSet.from_arrays(a, b)


def congruence_error(mesh: HalfEdgeMesh, lay: Layout2D) -> float:
    """Largest relative mismatch between 2D and 3D side lengths."""
    f = lay.faces
    p3 = mesh.positions[mesh.faces[f]]
    p2 = lay.points[f]
    worst = 0.0
    for i in range(3):
        l3 = np.linalg.norm(p3[:, (i + 1) % 3] - p3[:, i], axis=1)
        l2 = np.linalg.norm(p2[:, (i + 1) % 3] - p2[:, i], axis=1)
        worst = max(worst, float(np.max(np.abs(l2 - l3) / l3)))
    return worst


def hinges_coincide(tree: UnfoldTree, lay: Layout2D) -> bool:
    """True when every child shares its hinge points bit-exactly with its parent."""
    mesh, P = tree.mesh, lay.points
    for f in lay.faces.tolist():
        p = tree.parent[f]
        if p < 0:
            continue
        h = tree.hinge[f]
        t = int(mesh.twin[h])
        i, j = h % 3, t % 3
        if P[f, i].tobytes() != P[p, (j + 1) % 3].tobytes():
            return False
        if P[f, (i + 1) % 3].tobytes() != P[p, j].tobytes():
            return False
    return True


def rigid_transform(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotation R and shift t with ``R @ src[k] + t ~= dst[k]`` for two matched points."""
    d0 = src[1] - src[0]
    d1 = dst[1] - dst[0]
    n = math.hypot(*d0) * math.hypot(*d1)
    cos = (d0[0] * d1[0] + d0[1] * d1[1]) / n
    sin = (d0[0] * d1[1] - d0[1] * d1[0]) / n
    R = np.array([[cos, -sin], [sin, cos]])
    return R, dst[0] - R @ src[0]
