"""Corner-table halfedge mesh, file IO and topological validation.

Halfedge ``h`` lives in face ``h // 3`` at corner ``h % 3``; it starts at
``faces[f, i]`` and ends at ``faces[f, (i + 1) % 3]``.  ``twin[h]`` is the
opposite halfedge or ``-1`` on a boundary.  Collapses mark faces and
vertices dead instead of compacting, so ids stay stable across a
collapse/uncollapse round trip.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Optional, Union

import numpy as np


class MeshError(ValueError):
    """Raised for meshes the toolkit cannot work with."""


class MeshFormatError(MeshError):
    """Raised when a mesh file cannot be parsed."""


Source = Union[str, os.PathLike, bytes, BinaryIO]


class HalfEdgeMesh:
    """Indexed triangle mesh with twin links.

    Parameters
    ----------
    positions : array_like, shape (V, 3)
    faces : array_like, shape (F, 3)
        0-based vertex indices, counter-clockwise seen from outside.
    """

    def __init__(self, positions, faces):
        self.positions = np.array(positions, dtype=np.float64).reshape(-1, 3)
        self.faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        nv, nf = len(self.positions), len(self.faces)
        if nf and (self.faces.min() < 0 or self.faces.max() >= nv):
            raise MeshError("face references a missing vertex")
        self.vertex_alive = np.ones(nv, dtype=bool)
        self.face_alive = np.ones(nf, dtype=bool)
        self.twin = np.full(3 * nf, -1, dtype=np.int64)
        self.vertex_faces: list[set[int]] = [set() for _ in range(nv)]
        # directed edges used by more than one face, or edges with > 2 faces
        self.nonmanifold_edges: set[tuple[int, int]] = set()
        self.misoriented_edges: set[tuple[int, int]] = set()
        # number of collapses currently applied; guards LIFO uncollapsing
        self.collapse_depth = 0
        self._link_twins()

    def _link_twins(self) -> None:
        directed: dict[tuple[int, int], int] = {}
        undirected: dict[tuple[int, int], int] = {}
        for f, (a, b, c) in enumerate(self.faces.tolist()):
            for v in (a, b, c):
                self.vertex_faces[v].add(f)
            for i, (u, v) in enumerate(((a, b), (b, c), (c, a))):
                key = (min(u, v), max(u, v))
                undirected[key] = undirected.get(key, 0) + 1
                if (u, v) in directed:
                    self.misoriented_edges.add(key)
                directed[(u, v)] = 3 * f + i
        for key, count in undirected.items():
            if count > 2:
                self.nonmanifold_edges.add(key)
        for (u, v), h in directed.items():
            key = (min(u, v), max(u, v))
            if key in self.nonmanifold_edges or key in self.misoriented_edges:
                continue
            t = directed.get((v, u))
            if t is not None:
                self.twin[h] = t

    # -- counts -----------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return int(self.vertex_alive.sum())

    @property
    def n_faces(self) -> int:
        return int(self.face_alive.sum())

    @property
    def n_edges(self) -> int:
        alive = np.repeat(self.face_alive, 3)
        boundary = int(np.count_nonzero(alive & (self.twin < 0)))
        return (3 * self.n_faces + boundary) // 2

    @property
    def n_boundary_edges(self) -> int:
        alive = np.repeat(self.face_alive, 3)
        return int(np.count_nonzero(alive & (self.twin < 0)))

    def alive_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_alive)

    def alive_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.vertex_alive)

    # -- halfedge navigation ----------------------------------------------

    def origin(self, h: int) -> int:
        return int(self.faces[h // 3, h % 3])

    def dest(self, h: int) -> int:
        return int(self.faces[h // 3, (h + 1) % 3])

    @staticmethod
    def next(h: int) -> int:
        return 3 * (h // 3) + (h + 1) % 3

    @staticmethod
    def prev(h: int) -> int:
        return 3 * (h // 3) + (h + 2) % 3

    def edge_id(self, h: int) -> int:
        """Canonical id of the edge carrying halfedge ``h``."""
        t = int(self.twin[h])
        return h if t < 0 else min(h, t)

    def edges(self) -> Iterator[int]:
        """Canonical ids of all live edges, ascending."""
        twin = self.twin
        for f in self.alive_faces().tolist():
            for h in range(3 * f, 3 * f + 3):
                t = twin[h]
                if t < 0 or h < t:
                    yield h

    def edge_vertices(self, e: int) -> tuple[int, int]:
        return self.origin(e), self.dest(e)

    def find_halfedge(self, u: int, v: int) -> int:
        """Halfedge running u -> v, or -1."""
        for f in self.vertex_faces[u]:
            row = self.faces[f]
            for i in range(3):
                if row[i] == u and row[(i + 1) % 3] == v:
                    return 3 * f + i
        return -1

    def face_neighbors(self, f: int) -> list[int]:
        return [int(t) // 3 for t in self.twin[3 * f:3 * f + 3] if t >= 0]

    def shared_halfedge(self, f: int, g: int) -> int:
        """Halfedge of ``f`` whose twin lies in ``g``, or -1."""
        for h in range(3 * f, 3 * f + 3):
            t = self.twin[h]
            if t >= 0 and t // 3 == g:
                return h
        return -1

    def vertex_neighbors(self, v: int) -> set[int]:
        out: set[int] = set()
        for f in self.vertex_faces[v]:
            out.update(self.faces[f].tolist())
        out.discard(v)
        return out

    def is_boundary_vertex(self, v: int) -> bool:
        for f in self.vertex_faces[v]:
            for h in range(3 * f, 3 * f + 3):
                if self.twin[h] < 0 and v in (self.origin(h), self.dest(h)):
                    return True
        return False

    # -- geometry -----------------------------------------------------------

    def face_normals(self, faces: Optional[np.ndarray] = None, unit: bool = True) -> np.ndarray:
        idx = self.alive_faces() if faces is None else np.asarray(faces)
        p = self.positions[self.faces[idx]]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        if unit:
            norm = np.linalg.norm(n, axis=1, keepdims=True)
            n = np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)
        return n

    def face_areas(self, faces: Optional[np.ndarray] = None) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_normals(faces, unit=False), axis=1)

    def bbox_diagonal(self) -> float:
        p = self.positions[self.vertex_alive]
        return float(np.linalg.norm(p.max(axis=0) - p.min(axis=0)))

    # -- bookkeeping ----------------------------------------------------------

    def copy(self) -> "HalfEdgeMesh":
        out = HalfEdgeMesh.__new__(HalfEdgeMesh)
        out.positions = self.positions.copy()
        out.faces = self.faces.copy()
        out.vertex_alive = self.vertex_alive.copy()
        out.face_alive = self.face_alive.copy()
        out.twin = self.twin.copy()
        out.vertex_faces = [set(s) for s in self.vertex_faces]
        out.nonmanifold_edges = set(self.nonmanifold_edges)
        out.misoriented_edges = set(self.misoriented_edges)
        out.collapse_depth = self.collapse_depth
        return out

    def compact(self) -> tuple[np.ndarray, np.ndarray]:
        """Live positions and faces, re-indexed densely."""
        keep = self.alive_vertices()
        remap = np.full(len(self.positions), -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        return self.positions[keep].copy(), remap[self.faces[self.alive_faces()]]

    def same_as(self, other: "HalfEdgeMesh") -> bool:
        """Bit-identical connectivity, twins and positions."""
        return (
            np.array_equal(self.vertex_alive, other.vertex_alive)
            and np.array_equal(self.face_alive, other.face_alive)
            and np.array_equal(self.faces[self.face_alive], other.faces[other.face_alive])
            and np.array_equal(self.twin, other.twin)
            and self.positions[self.vertex_alive].tobytes()
            == other.positions[other.vertex_alive].tobytes()
        )

    def audit(self) -> None:
        """Assert every structural invariant; used by tests after edits."""
        twin = self.twin
        for f in self.alive_faces().tolist():
            a, b, c = self.faces[f].tolist()
            assert len({a, b, c}) == 3, f"face {f} repeats a vertex"
            for v in (a, b, c):
                assert self.vertex_alive[v], f"face {f} uses dead vertex {v}"
                assert f in self.vertex_faces[v], f"vertex {v} misses face {f}"
            for h in range(3 * f, 3 * f + 3):
                t = int(twin[h])
                if t < 0:
                    continue
                assert self.face_alive[t // 3], f"halfedge {h} twins a dead face"
                assert twin[t] == h, f"twin(twin({h})) != {h}"
                assert self.origin(t) == self.dest(h) and self.dest(t) == self.origin(h), (
                    f"halfedge {h} and its twin do not run opposite")
        for v in range(len(self.positions)):
            if not self.vertex_alive[v]:
                assert not self.vertex_faces[v], f"dead vertex {v} still has faces"
                continue
            for f in self.vertex_faces[v]:
                assert self.face_alive[f] and v in self.faces[f], f"stale face {f} at {v}"


# ---------------------------------------------------------------------------
# validation


@dataclass
class MeshValidationReport:
    is_manifold: bool
    is_orientable: bool
    is_triangular: bool
    component_count: int
    boundary_edge_count: int
    genus: Optional[int]
    is_consistently_oriented: bool = True

    @property
    def is_closed(self) -> bool:
        return self.boundary_edge_count == 0

    def problems(self, allow_boundary: bool = False) -> list[str]:
        out = []
        if not self.is_triangular:
            out.append("non-triangular faces")
        if not self.is_manifold:
            out.append("non-manifold")
        if not self.is_orientable:
            out.append("non-orientable")
        elif not self.is_consistently_oriented:
            out.append("inconsistently oriented faces")
        if self.component_count != 1:
            out.append(f"{self.component_count} connected components")
        if self.boundary_edge_count and not allow_boundary:
            out.append(f"{self.boundary_edge_count} boundary edges")
        return out


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _vertex_is_manifold(mesh: HalfEdgeMesh, v: int) -> bool:
    # Faces around v must form one fan; walk it in both directions.
    faces = mesh.vertex_faces[v]
    if not faces:
        return True
    start = next(iter(faces))
    seen = {start}
    for forward in (True, False):
        f = start
        while True:
            row = mesh.faces[f].tolist()
            i = row.index(v)
            # halfedge leaving v (forward) or entering v (backward)
            h = 3 * f + i if forward else 3 * f + (i + 2) % 3
            t = int(mesh.twin[h])
            if t < 0:
                break
            f = t // 3
            if f == start or f in seen:
                break
            seen.add(f)
    return len(seen) == len(faces)


def _orientable(mesh: HalfEdgeMesh) -> bool:
    # Two-colour faces by "flipped" across edges; a conflict means non-orientable.
    edge_faces: dict[tuple[int, int], list[tuple[int, bool]]] = {}
    for f in mesh.alive_faces().tolist():
        row = mesh.faces[f].tolist()
        for i in range(3):
            u, v = row[i], row[(i + 1) % 3]
            edge_faces.setdefault((min(u, v), max(u, v)), []).append((f, u < v))
    adj: dict[int, list[tuple[int, int]]] = {}
    for pair in edge_faces.values():
        if len(pair) != 2:
            continue
        (f, df), (g, dg) = pair
        # same direction means one of them must flip
        rel = 1 if df == dg else 0
        adj.setdefault(f, []).append((g, rel))
        adj.setdefault(g, []).append((f, rel))
    flip: dict[int, int] = {}
    for s in mesh.alive_faces().tolist():
        if s in flip:
            continue
        flip[s] = 0
        stack = [s]
        while stack:
            f = stack.pop()
            for g, rel in adj.get(f, ()):
                want = flip[f] ^ rel
                if g not in flip:
                    flip[g] = want
                    stack.append(g)
                elif flip[g] != want:
                    return False
    return True


def validate(mesh: HalfEdgeMesh) -> MeshValidationReport:
    """Topological report; never raises."""
    faces = mesh.alive_faces().tolist()
    edge_ok = not mesh.nonmanifold_edges
    vert_ok = edge_ok and all(
        _vertex_is_manifold(mesh, v) for v in mesh.alive_vertices().tolist())
    orientable = edge_ok and _orientable(mesh)

    parent = list(range(len(mesh.positions)))
    for f in faces:
        a, b, c = mesh.faces[f].tolist()
        for x, y in ((a, b), (b, c)):
            rx, ry = _find(parent, x), _find(parent, y)
            if rx != ry:
                parent[rx] = ry
    roots = {_find(parent, v) for v in mesh.alive_vertices().tolist()}

    boundary = mesh.n_boundary_edges
    manifold = edge_ok and vert_ok
    consistent = not mesh.misoriented_edges
    genus = None
    if manifold and consistent and boundary == 0 and len(roots) == 1:
        chi = mesh.n_vertices - mesh.n_edges + mesh.n_faces
        genus = (2 - chi) // 2
    return MeshValidationReport(
        is_manifold=manifold,
        is_orientable=orientable,
        is_triangular=True,
        component_count=len(roots),
        boundary_edge_count=boundary,
        genus=genus,
        is_consistently_oriented=consistent,
    )


def average_dual_valence(mesh: HalfEdgeMesh) -> float:
    """Mean number of edge-adjacent faces per face."""
    nf = mesh.n_faces
    if nf == 0:
        return 0.0
    alive = np.repeat(mesh.face_alive, 3)
    return float(np.count_nonzero(alive & (mesh.twin >= 0))) / nf


# ---------------------------------------------------------------------------
# file IO


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_bytes()
    return source.read()


def _infer_format(source: Source, fmt: Optional[str]) -> str:
    if fmt:
        return fmt.lower()
    if isinstance(source, (str, os.PathLike)):
        ext = Path(source).suffix.lower().lstrip(".")
        if ext in ("obj", "off", "stl"):
            return ext
    raise MeshFormatError("cannot infer mesh format; pass fmt=")


def _check_faces(n_vertices: int, faces: list[tuple[int, int, int]]) -> None:
    seen = set()
    used = np.zeros(n_vertices, dtype=bool)
    for face in faces:
        if len(set(face)) != 3:
            raise MeshFormatError(f"degenerate face {face}")
        for v in face:
            if not 0 <= v < n_vertices:
                raise MeshFormatError(f"face {face} references missing vertex {v}")
        key = tuple(sorted(face))
        if key in seen:
            raise MeshFormatError(f"duplicate face {face}")
        seen.add(key)
        used[list(face)] = True
    if n_vertices and not used.all():
        raise MeshFormatError(f"{int((~used).sum())} unreferenced vertices")


def _parse_obj(text: str) -> tuple[list, list]:
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            if parts[0] == "v":
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    k = int(tok.split("/")[0])
                    idx.append(k - 1 if k > 0 else len(verts) + k)
                if len(idx) != 3:
                    raise MeshFormatError(f"line {lineno}: non-triangular face")
                faces.append(tuple(idx))
        except (IndexError, ValueError) as exc:
            if isinstance(exc, MeshFormatError):
                raise
            raise MeshFormatError(f"line {lineno}: cannot parse {line!r}") from exc
    return verts, faces


def _parse_off(text: str) -> tuple[list, list]:
    tokens: list[str] = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or not tokens[0].endswith("OFF"):
        raise MeshFormatError("missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        verts = []
        for _ in range(nv):
            verts.append(tuple(float(t) for t in tokens[pos:pos + 3]))
            pos += 3
        faces = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise MeshFormatError("non-triangular face")
            faces.append(tuple(int(t) for t in tokens[pos + 1:pos + 4]))
            pos += 1 + k
    except (IndexError, ValueError) as exc:
        raise MeshFormatError("truncated or malformed OFF") from exc
    if any(len(v) != 3 for v in verts) or any(len(f) != 3 for f in faces):
        raise MeshFormatError("truncated OFF")
    return verts, faces


def _parse_stl(data: bytes) -> tuple[list, list]:
    tris: list[tuple] = []
    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            for k in range(count):
                vals = struct.unpack_from("<12f", data, 84 + 50 * k)
                tris.append((vals[3:6], vals[6:9], vals[9:12]))
    if not tris:
        text = data.decode("ascii", errors="replace")
        if not text.lstrip().startswith("solid"):
            raise MeshFormatError("not an STL file")
        corners = []
        for line in text.splitlines():
            parts = line.split()
            if parts and parts[0] == "vertex":
                try:
                    corners.append(tuple(float(t) for t in parts[1:4]))
                except ValueError as exc:
                    raise MeshFormatError(f"bad vertex line {line!r}") from exc
        if len(corners) % 3:
            raise MeshFormatError("facet with a vertex count other than 3")
        tris = [tuple(corners[i:i + 3]) for i in range(0, len(corners), 3)]
    # exact-coordinate weld
    index: dict[tuple[float, float, float], int] = {}
    verts: list = []
    faces: list = []
    for tri in tris:
        face = []
        for p in tri:
            key = tuple(float(x) for x in p)
            if key not in index:
                index[key] = len(verts)
                verts.append(key)
            face.append(index[key])
        faces.append(tuple(face))
    return verts, faces


def load_mesh(source: Source, fmt: Optional[str] = None) -> HalfEdgeMesh:
    """Read an OBJ, OFF or STL mesh from a path, bytes or binary stream."""
    fmt = _infer_format(source, fmt)
    data = _read_bytes(source)
    if fmt == "obj":
        verts, faces = _parse_obj(data.decode("utf-8", errors="replace"))
    elif fmt == "off":
        verts, faces = _parse_off(data.decode("utf-8", errors="replace"))
    elif fmt == "stl":
        verts, faces = _parse_stl(data)
    else:
        raise MeshFormatError(f"unsupported format {fmt!r}")
    if not faces:
        raise MeshFormatError("mesh has no faces")
    _check_faces(len(verts), faces)
    return HalfEdgeMesh(verts, faces)


def mesh_to_text(mesh: HalfEdgeMesh, fmt: str = "obj") -> str:
    """Serialise live vertices/faces; ``repr`` floats round-trip exactly."""
    pos, faces = mesh.compact()
    out = io.StringIO()
    if fmt == "obj":
        for x, y, z in pos.tolist():
            out.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in faces.tolist():
            out.write(f"f {a + 1} {b + 1} {c + 1}\n")
    elif fmt == "off":
        out.write(f"OFF\n{len(pos)} {len(faces)} 0\n")
        for x, y, z in pos.tolist():
            out.write(f"{x!r} {y!r} {z!r}\n")
        for a, b, c in faces.tolist():
            out.write(f"3 {a} {b} {c}\n")
    else:
        raise MeshFormatError(f"cannot write format {fmt!r}")
    return out.getvalue()


def save_mesh(mesh: HalfEdgeMesh, path: Union[str, os.PathLike], fmt: Optional[str] = None) -> None:
    fmt = fmt or Path(path).suffix.lower().lstrip(".") or "obj"
    Path(path).write_text(mesh_to_text(mesh, fmt))


def mesh_from_arrays(positions: Iterable, faces: Iterable) -> HalfEdgeMesh:
    verts = [tuple(map(float, p)) for p in positions]
    tris = [tuple(int(i) for i in f) for f in faces]
    _check_faces(len(verts), tris)
    return HalfEdgeMesh(verts, tris)
