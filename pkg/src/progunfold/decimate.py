"""Edge-collapse simplification and its exact inverse.

Three strategies combine an edge *selection* rule with a vertex *placement*
rule: Q/Q (quadric cost, quadric-optimal point), SE/MP (shortest edge,
midpoint) and SE/Q (shortest edge, quadric-optimal point).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mesh import HalfEdgeMesh, MeshError


@dataclass(frozen=True)
class CollapseStrategy:
    selection: str  # "quadric" | "shortest"
    placement: str  # "quadric" | "midpoint"

    @property
    def name(self) -> str:
        sel = {"quadric": "Q", "shortest": "SE"}[self.selection]
        pla = {"quadric": "Q", "midpoint": "MP"}[self.placement]
        return f"{sel}/{pla}"

    @classmethod
    def parse(cls, text: str) -> "CollapseStrategy":
        key = text.strip().lower().replace("-", "/").replace("_", "/")
        try:
            return STRATEGIES[key]
        except KeyError:
            raise ValueError(f"unknown strategy {text!r}; pick one of {sorted(STRATEGIES)}") from None


QQ = CollapseStrategy("quadric", "quadric")
SEMP = CollapseStrategy("shortest", "midpoint")
SEQ = CollapseStrategy("shortest", "quadric")
STRATEGIES = {"q/q": QQ, "se/mp": SEMP, "se/q": SEQ}


def target_face_count(input_faces: int, genus: int) -> int:
    """Face count to simplify to before the first unfolding."""
    t = input_faces / 10.0 + math.sqrt(input_faces) * (1 + genus)
    return max(4, int(math.floor(t + 0.5)))


# ---------------------------------------------------------------------------
# quadrics


def face_quadrics(mesh: HalfEdgeMesh, faces: Optional[np.ndarray] = None) -> np.ndarray:
    """Area-weighted plane quadrics, shape (k, 4, 4)."""
    idx = mesh.alive_faces() if faces is None else np.asarray(faces, dtype=np.int64)
    p = mesh.positions[mesh.faces[idx]]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    twice_area = np.linalg.norm(n, axis=1)
    ok = twice_area > 0
    n[ok] /= twice_area[ok, None]
    plane = np.concatenate([n, -(n * p[:, 0]).sum(axis=1, keepdims=True)], axis=1)
    return 0.5 * twice_area[:, None, None] * plane[:, :, None] * plane[:, None, :]


def vertex_quadrics(mesh: HalfEdgeMesh) -> np.ndarray:
    Q = np.zeros((len(mesh.positions), 4, 4))
    idx = mesh.alive_faces()
    fq = face_quadrics(mesh, idx)
    for k in range(3):
        np.add.at(Q, mesh.faces[idx, k], fq)
    return Q


def quadric_cost(Q: np.ndarray, p) -> float:
    h = np.append(np.asarray(p, dtype=float), 1.0)
    return float(h @ Q @ h)


def optimal_point(Q: np.ndarray, candidates) -> np.ndarray:
    """Minimiser of ``Q``; falls back to the cheapest candidate when singular."""
    A = Q[:3, :3]
    scale = float(np.abs(A).max())
    if scale > 0 and abs(np.linalg.det(A)) >= 1e-12 * scale ** 3:
        return np.linalg.solve(A, -Q[:3, 3])
    best, best_cost = None, math.inf
    for c in candidates:
        cost = quadric_cost(Q, c)
        if cost < best_cost:
            best, best_cost = np.asarray(c, dtype=float), cost
    return best


# ---------------------------------------------------------------------------
# single-edge queries


def _endpoints(mesh: HalfEdgeMesh, edge: int) -> tuple[int, int]:
    a, b = mesh.edge_vertices(edge)
    return min(a, b), max(a, b)


def place_vertex(mesh: HalfEdgeMesh, edge: int, strategy: CollapseStrategy,
                 quadrics: Optional[np.ndarray] = None) -> np.ndarray:
    u, v = _endpoints(mesh, edge)
    pu, pv = mesh.positions[u], mesh.positions[v]
    mid = 0.5 * (pu + pv)
    if strategy.placement == "midpoint":
        return mid
    Q = vertex_quadrics(mesh) if quadrics is None else quadrics
    return optimal_point(Q[u] + Q[v], (pu, pv, mid))


def edge_cost(mesh: HalfEdgeMesh, edge: int, strategy: CollapseStrategy,
              quadrics: Optional[np.ndarray] = None) -> float:
    u, v = _endpoints(mesh, edge)
    if strategy.selection == "shortest":
        return float(np.linalg.norm(mesh.positions[u] - mesh.positions[v]))
    Q = vertex_quadrics(mesh) if quadrics is None else quadrics
    p = place_vertex(mesh, edge, strategy, Q)
    return quadric_cost(Q[u] + Q[v], p)


# ---------------------------------------------------------------------------
# collapse / uncollapse


@dataclass
class CollapseRecord:
    """Everything needed to undo one collapse exactly."""

    halfedge: int  # halfedge of the collapsed edge inside face f0
    u: int  # surviving vertex
    v: int  # removed vertex
    f0: int
    f1: int  # -1 for a boundary edge
    u_before: np.ndarray
    u_after: np.ndarray
    v_position: np.ndarray
    # (halfedge inside the removed face, its outside twin) for the two
    # non-collapsed sides of each removed face
    outer: list[tuple[int, int]]
    relabelled: list[tuple[int, int]]  # (face, corner) that held v
    fan: list[int]  # faces incident to u or v before the collapse, minus f0/f1
    depth: int = 0
    u_quadric: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def removed_faces(self) -> list[int]:
        return [f for f in (self.f0, self.f1) if f >= 0]


def _collapse_context(mesh: HalfEdgeMesh, edge: int):
    u, v = _endpoints(mesh, edge)
    h = edge
    t = int(mesh.twin[h])
    f0 = h // 3
    f1 = t // 3 if t >= 0 else -1
    return u, v, h, t, f0, f1


def _third(mesh: HalfEdgeMesh, f: int, u: int, v: int) -> int:
    for w in mesh.faces[f].tolist():
        if w != u and w != v:
            return w
    raise MeshError(f"face {f} is degenerate")


def is_collapse_valid(mesh: HalfEdgeMesh, edge: int, position=None, min_faces: int = 4) -> bool:
    """Link condition, face-count guard and normal-flip guard.

    ``position`` defaults to the edge midpoint.
    """
    if not mesh.face_alive[edge // 3]:
        return False
    u, v, h, t, f0, f1 = _collapse_context(mesh, edge)
    removed = {f0} if f1 < 0 else {f0, f1}
    closed = mesh.n_boundary_edges == 0
    if closed and mesh.n_faces - len(removed) < min_faces:
        return False
    if not closed and mesh.n_faces - len(removed) < 1:
        return False

    opposite = {_third(mesh, f, u, v) for f in removed}
    common = mesh.vertex_neighbors(u) & mesh.vertex_neighbors(v)
    if common != opposite:
        return False
    if f1 >= 0 and mesh.is_boundary_vertex(u) and mesh.is_boundary_vertex(v):
        return False

    if position is None:
        position = 0.5 * (mesh.positions[u] + mesh.positions[v])
    fan = sorted((mesh.vertex_faces[u] | mesh.vertex_faces[v]) - removed)
    if not fan:
        return True
    tri = mesh.faces[fan]
    p = mesh.positions[tri]
    q = p.copy()
    q[(tri == u) | (tri == v)] = position
    n0 = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    n1 = np.cross(q[:, 1] - q[:, 0], q[:, 2] - q[:, 0])
    len0 = np.linalg.norm(n0, axis=1)
    len1 = np.linalg.norm(n1, axis=1)
    if np.any(len1 <= 1e-12 * np.maximum(len0, 1e-300)):
        return False
    return bool(np.all((n0 * n1).sum(axis=1) > 0))


def collapse_edge(mesh: HalfEdgeMesh, edge: int, position) -> CollapseRecord:
    """Merge the endpoints of ``edge`` into the lower-id vertex at ``position``."""
    if not mesh.face_alive[edge // 3]:
        raise MeshError(f"edge {edge} is not alive")
    u, v, h, t, f0, f1 = _collapse_context(mesh, edge)
    removed = [f for f in (f0, f1) if f >= 0]
    twin = mesh.twin

    outer: list[tuple[int, int]] = []
    for f in removed:
        sides = [k for k in range(3 * f, 3 * f + 3) if k != h and k != t]
        # one side touches v, the other u; stitch their outside twins together
        a, b = int(twin[sides[0]]), int(twin[sides[1]])
        outer += [(sides[0], a), (sides[1], b)]
        if a >= 0:
            twin[a] = b
        if b >= 0:
            twin[b] = a

    fan = sorted((mesh.vertex_faces[u] | mesh.vertex_faces[v]) - set(removed))
    relabelled = []
    for f in sorted(mesh.vertex_faces[v] - set(removed)):
        row = mesh.faces[f]
        for i in range(3):
            if row[i] == v:
                row[i] = u
                relabelled.append((f, i))
                mesh.vertex_faces[u].add(f)
    for f in removed:
        for w in mesh.faces[f].tolist():
            mesh.vertex_faces[w].discard(f)
        mesh.face_alive[f] = False
    mesh.vertex_faces[v].clear()
    mesh.vertex_alive[v] = False

    record = CollapseRecord(
        halfedge=h, u=u, v=v, f0=f0, f1=f1,
        u_before=mesh.positions[u].copy(),
        u_after=np.array(position, dtype=float),
        v_position=mesh.positions[v].copy(),
        outer=outer, relabelled=relabelled, fan=fan,
        depth=mesh.collapse_depth,
    )
    mesh.positions[u] = record.u_after
    mesh.collapse_depth += 1
    return record


def uncollapse_edge(mesh: HalfEdgeMesh, record: CollapseRecord) -> list[int]:
    """Split the vertex again; returns the restored face ids."""
    if record.depth != mesh.collapse_depth - 1:
        raise MeshError("collapse records must be undone in reverse order")
    u, v = record.u, record.v
    mesh.collapse_depth -= 1
    mesh.positions[u] = record.u_before
    mesh.positions[v] = record.v_position
    mesh.vertex_alive[v] = True
    for f, i in record.relabelled:
        mesh.faces[f, i] = v
        mesh.vertex_faces[v].add(f)
        mesh.vertex_faces[u].discard(f)
    for inner, outside in record.outer:
        if outside >= 0:
            mesh.twin[outside] = inner
    restored = record.removed_faces
    for f in restored:
        mesh.face_alive[f] = True
        for w in mesh.faces[f].tolist():
            mesh.vertex_faces[w].add(f)
    return restored


# ---------------------------------------------------------------------------
# greedy simplification


class Decimator:
    """Priority-queue edge collapser with an undo stack.

    Heap entries are keyed by the sorted vertex pair, which makes ties break
    deterministically, and carry per-vertex version stamps for lazy
    invalidation.
    """

    def __init__(self, mesh: HalfEdgeMesh, strategy: CollapseStrategy):
        self.mesh = mesh
        self.strategy = strategy
        self.quadrics = vertex_quadrics(mesh)
        self.version = np.zeros(len(mesh.positions), dtype=np.int64)
        self.records: list[CollapseRecord] = []
        self._heap: list = []
        self._blocked: dict[int, set[tuple[int, int]]] = {}
        self._seq = 0

    def _evaluate(self, u: int, v: int) -> tuple[float, np.ndarray]:
        m, Q = self.mesh, self.quadrics
        pu, pv = m.positions[u], m.positions[v]
        mid = 0.5 * (pu + pv)
        Quv = Q[u] + Q[v]
        if self.strategy.placement == "midpoint":
            p = mid
        else:
            p = optimal_point(Quv, (pu, pv, mid))
        if self.strategy.selection == "shortest":
            cost = float(np.linalg.norm(pu - pv))
        else:
            cost = quadric_cost(Quv, p)
        return cost, p

    def _push(self, u: int, v: int) -> None:
        if u > v:
            u, v = v, u
        cost, p = self._evaluate(u, v)
        self._seq += 1
        heapq.heappush(self._heap, (cost, u, v, self._seq, int(self.version[u]), int(self.version[v]), p))

    def _edge(self, u: int, v: int) -> int:
        h = self.mesh.find_halfedge(u, v)
        if h < 0:
            h = self.mesh.find_halfedge(v, u)
        return -1 if h < 0 else self.mesh.edge_id(h)

    def run(self, target: int) -> list[CollapseRecord]:
        m = self.mesh
        if target < 4 or m.n_faces <= target:
            return []
        self._heap, self._blocked = [], {}
        for e in m.edges():
            self._push(*m.edge_vertices(e))
        start = len(self.records)
        while m.n_faces > target and self._heap:
            cost, u, v, _, su, sv, p = heapq.heappop(self._heap)
            if not (m.vertex_alive[u] and m.vertex_alive[v]):
                continue
            if self.version[u] != su or self.version[v] != sv:
                continue
            e = self._edge(u, v)
            if e < 0:
                continue
            if not is_collapse_valid(m, e, p):
                self._blocked.setdefault(u, set()).add((u, v))
                self._blocked.setdefault(v, set()).add((u, v))
                continue
            self.collapse(e, p)
        return self.records[start:]

    def collapse(self, edge: int, position) -> CollapseRecord:
        m = self.mesh
        record = collapse_edge(m, edge, position)
        u, v = record.u, record.v
        record.u_quadric = self.quadrics[u].copy()
        self.quadrics[u] = self.quadrics[u] + self.quadrics[v]
        self.version[u] += 1
        self.version[v] += 1
        self.records.append(record)
        ring = m.vertex_neighbors(u)
        for w in sorted(ring):
            self._push(u, w)
        stale: set[tuple[int, int]] = set()
        for w in [u, v, *ring]:
            stale |= self._blocked.pop(w, set())
        for a, b in sorted(stale):
            if m.vertex_alive[a] and m.vertex_alive[b] and u not in (a, b):
                self._push(a, b)
        return record

    def uncollapse(self) -> tuple[CollapseRecord, list[int]]:
        record = self.records.pop()
        restored = uncollapse_edge(self.mesh, record)
        self.quadrics[record.u] = record.u_quadric
        self.version[record.u] += 1
        self.version[record.v] += 1
        return record, restored

    @property
    def finished_uncollapsing(self) -> bool:
        return not self.records


def decimate_to(mesh: HalfEdgeMesh, target: int, strategy: CollapseStrategy,
                rng: Optional[np.random.Generator] = None) -> list[CollapseRecord]:
    """Greedy collapse to ``target`` faces; returns records in collapse order.

    Ties are broken by vertex ids, so ``rng`` is accepted for interface
    symmetry only.
    """
    return Decimator(mesh, strategy).run(target)
