"""Procedural test meshes: platonic solids, geodesic spheres, tori and friends.

All closed shapes are oriented with outward normals.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import HalfEdgeMesh


def tetrahedron(edge: float = 1.0) -> HalfEdgeMesh:
    s = edge / math.sqrt(8.0)
    p = [(s, s, s), (s, -s, -s), (-s, s, -s), (-s, -s, s)]
    f = [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)]
    return HalfEdgeMesh(p, f)


def cube(size: float = 1.0) -> HalfEdgeMesh:
    p = [(x * size, y * size, z * size) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    # vertex index = 4x + 2y + z
    f = [
        (0, 1, 3), (0, 3, 2),  # x = 0
        (4, 6, 7), (4, 7, 5),  # x = 1
        (0, 4, 5), (0, 5, 1),  # y = 0
        (2, 3, 7), (2, 7, 6),  # y = 1
        (0, 2, 6), (0, 6, 4),  # z = 0
        (1, 5, 7), (1, 7, 3),  # z = 1
    ]
    return HalfEdgeMesh(p, f)


def octahedron() -> HalfEdgeMesh:
    p = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    f = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
         (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    return HalfEdgeMesh(p, f)


def _icosahedron_data() -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    p = np.array([
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ], dtype=float)
    f = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return p / np.linalg.norm(p, axis=1, keepdims=True), f


def icosahedron() -> HalfEdgeMesh:
    p, f = _icosahedron_data()
    return HalfEdgeMesh(p, f)


def icosphere(frequency: int, radius: float = 1.0) -> HalfEdgeMesh:
    """Geodesic sphere with ``20 * frequency**2`` faces.

    Frequencies 2, 4, 8 give the usual 80/320/1280-face icospheres; 10
    gives 2000 faces.
    """
    base, base_faces = _icosahedron_data()
    n = frequency
    index: dict[frozenset, int] = {}
    points: list[np.ndarray] = []

    def vid(corners, weights):
        key = frozenset((c, w) for c, w in zip(corners, weights) if w)
        if key not in index:
            index[key] = len(points)
            q = sum(w * base[c] for c, w in zip(corners, weights)) / n
            points.append(radius * q / np.linalg.norm(q))
        return index[key]

    faces = []
    for a, b, c in base_faces:
        grid = {}
        for i in range(n + 1):
            for j in range(n + 1 - i):
                grid[i, j] = vid((a, b, c), (n - i - j, i, j))
        for i in range(n):
            for j in range(n - i):
                faces.append((grid[i, j], grid[i + 1, j], grid[i, j + 1]))
                if i + j < n - 1:
                    faces.append((grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1]))
    return HalfEdgeMesh(np.array(points), faces)


def torus(n_major: int = 16, n_minor: int = 16, R: float = 2.0, r: float = 0.75,
          twist: float = 0.0) -> HalfEdgeMesh:
    """Grid torus with ``2 * n_major * n_minor`` faces (genus 1)."""
    p = []
    for i in range(n_major):
        u = 2 * math.pi * i / n_major
        for j in range(n_minor):
            v = 2 * math.pi * j / n_minor + twist * u
            p.append(((R + r * math.cos(v)) * math.cos(u),
                      (R + r * math.cos(v)) * math.sin(u),
                      r * math.sin(v)))
    f = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            f.append((a, b, c))
            f.append((a, c, d))
    return HalfEdgeMesh(p, f)


def box(n: int = 4, size=(1.0, 1.0, 1.0)) -> HalfEdgeMesh:
    """Axis-aligned box with each side split into an ``n x n`` grid."""
    sx, sy, sz = size
    index: dict[tuple[int, int, int], int] = {}
    pts: list[tuple[float, float, float]] = []

    def vid(i, j, k):
        if (i, j, k) not in index:
            index[i, j, k] = len(pts)
            pts.append((sx * i / n, sy * j / n, sz * k / n))
        return index[i, j, k]

    faces = []
    for axis in range(3):
        for side in (0, n):
            for a in range(n):
                for b in range(n):
                    quad = []
                    for da, db in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        c = [0, 0, 0]
                        c[axis] = side
                        c[(axis + 1) % 3] = a + da
                        c[(axis + 2) % 3] = b + db
                        quad.append(vid(*c))
                    if side == 0:
                        quad.reverse()
                    q0, q1, q2, q3 = quad
                    if (a + b) % 2:
                        faces += [(q0, q1, q2), (q0, q2, q3)]
                    else:
                        faces += [(q1, q2, q3), (q1, q3, q0)]
    return HalfEdgeMesh(pts, faces)


def ellipsoid(frequency: int, axes=(1.0, 0.7, 0.5)) -> HalfEdgeMesh:
    m = icosphere(frequency)
    m.positions *= np.asarray(axes, dtype=float)
    return m


def blob(frequency: int, seed: int = 0, amplitude: float = 0.25, lobes: int = 4) -> HalfEdgeMesh:
    """Star-shaped sphere with smooth random radial bumps."""
    rng = np.random.default_rng(seed)
    m = icosphere(frequency)
    p = m.positions
    dirs = rng.normal(size=(lobes, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    weights = rng.uniform(-1.0, 1.0, size=lobes)
    sharp = rng.uniform(2.0, 6.0, size=lobes)
    bump = (weights * np.exp(sharp * (p @ dirs.T - 1.0))).sum(axis=1)
    m.positions = p * np.exp(amplitude * bump)[:, None]
    return m


def cylinder(n_around: int = 16, n_height: int = 6, radius: float = 1.0, height: float = 2.0) -> HalfEdgeMesh:
    """Closed cylinder with fan caps."""
    p = []
    for k in range(n_height + 1):
        z = height * k / n_height
        for i in range(n_around):
            a = 2 * math.pi * i / n_around
            p.append((radius * math.cos(a), radius * math.sin(a), z))
    bottom = len(p)
    p.append((0.0, 0.0, 0.0))
    top = len(p)
    p.append((0.0, 0.0, height))
    f = []
    for k in range(n_height):
        for i in range(n_around):
            a = k * n_around + i
            b = k * n_around + (i + 1) % n_around
            c = (k + 1) * n_around + (i + 1) % n_around
            d = (k + 1) * n_around + i
            f += [(a, b, c), (a, c, d)]
    for i in range(n_around):
        j = (i + 1) % n_around
        f.append((bottom, j, i))
        f.append((top, n_height * n_around + i, n_height * n_around + j))
    return HalfEdgeMesh(p, f)


def grid_disk(n: int = 4, size: float = 1.0) -> HalfEdgeMesh:
    """Flat ``n x n`` square patch (open, with boundary) in the z = 0 plane."""
    p = [(size * i / n, size * j / n, 0.0) for j in range(n + 1) for i in range(n + 1)]
    f = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b, c, d = a + 1, a + n + 2, a + n + 1
            f += [(a, b, c), (a, c, d)]
    return HalfEdgeMesh(p, f)


def single_triangle() -> HalfEdgeMesh:
    return HalfEdgeMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])


def two_tetrahedra() -> HalfEdgeMesh:
    t = tetrahedron()
    p = np.vstack([t.positions, t.positions + [3.0, 0.0, 0.0]])
    f = np.vstack([t.faces, t.faces + 4])
    return HalfEdgeMesh(p, f)


def fin() -> HalfEdgeMesh:
    """Three triangles sharing one edge: non-manifold."""
    p = [(0, 0, 0), (1, 0, 0), (0.5, 1, 0), (0.5, -1, 0), (0.5, 0, 1)]
    return HalfEdgeMesh(p, [(0, 1, 2), (1, 0, 3), (0, 1, 4)])


def canonical_corpus() -> dict[str, HalfEdgeMesh]:
    """The small closed corpus used by the end-to-end checks."""
    return {
        "tetrahedron": tetrahedron(),
        "cube": cube(),
        "octahedron": octahedron(),
        "icosahedron": icosahedron(),
        "icosphere80": icosphere(2),
        "icosphere320": icosphere(4),
        "icosphere1280": icosphere(8),
        "torus512": torus(16, 16),
    }


def shape_corpus() -> dict[str, HalfEdgeMesh]:
    """Twenty varied closed meshes (roughly 300-800 faces) for trend checks."""
    out: dict[str, HalfEdgeMesh] = {}
    for s in range(6):
        out[f"blob{s}"] = blob(5, seed=s, amplitude=0.3 + 0.05 * s)
    out["sphere500"] = icosphere(5)
    out["ellipsoid_a"] = ellipsoid(5, (1.0, 0.6, 0.4))
    out["ellipsoid_b"] = ellipsoid(6, (1.5, 1.0, 0.3))
    out["box4"] = box(4)
    out["box5"] = box(5, (1.0, 0.8, 0.5))
    out["slab"] = box(6, (2.0, 1.0, 0.25))
    out["cylinder"] = cylinder(20, 8)
    out["tall_cylinder"] = cylinder(16, 12, radius=0.5, height=3.0)
    out["torus_fat"] = torus(16, 12, R=1.5, r=0.9)
    out["torus_thin"] = torus(24, 10, R=2.0, r=0.4)
    out["torus_twist"] = torus(20, 12, R=2.0, r=0.7, twist=0.5)
    for s in range(6, 9):
        out[f"spiky{s}"] = blob(5, seed=s, amplitude=0.5, lobes=8)
    return out
