"""Net quality metrics and approximation error.

Coverage and aspect ratio are measured against the minimal-area oriented
bounding box of the net.  Hausdorff distance is estimated from
area-uniform surface samples (plus all vertices) with exact
point-to-triangle distances.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .mesh import HalfEdgeMesh


@dataclass(frozen=True)
class OrientedBoundingBox2D:
    center: tuple[float, float]
    angle: float  # direction of the long side, radians
    half_extents: tuple[float, float]  # (w, h) with w >= h

    @property
    def area(self) -> float:
        return 4.0 * self.half_extents[0] * self.half_extents[1]

    @property
    def aspect_ratio(self) -> float:
        w, h = self.half_extents
        return w / h if h > 0 else math.inf

    def corners(self) -> np.ndarray:
        c = np.asarray(self.center)
        u = np.array([math.cos(self.angle), math.sin(self.angle)])
        v = np.array([-u[1], u[0]])
        w, h = self.half_extents
        return np.array([c - w * u - h * v, c + w * u - h * v, c + w * u + h * v, c - w * u + h * v])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; counter-clockwise, collinear points dropped."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float).tolist())))
    if len(pts) <= 2:
        return np.array(pts, dtype=float).reshape(-1, 2)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def min_area_obb(points: np.ndarray) -> OrientedBoundingBox2D:
    """Minimal-area enclosing rectangle by rotating calipers over the hull."""
    hull = convex_hull(points)
    n = len(hull)
    if n < 3:
        raise ValueError("degenerate point set: no positive-area bounding box")
    best = None
    # caliper indices: farthest along +u, farthest along -n (height), farthest along -u
    j = k = m = None
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        e = b - a
        u = e / math.hypot(*e)
        nrm = np.array([-u[1], u[0]])  # points into the hull
        if j is None:
            proj_u = hull @ u
            proj_n = hull @ nrm
            j = int(np.argmax(proj_u))
            k = int(np.argmax(proj_n))
            m = int(np.argmin(proj_u))
        else:
            while hull[(j + 1) % n] @ u > hull[j] @ u:
                j = (j + 1) % n
            while hull[(k + 1) % n] @ nrm > hull[k] @ nrm:
                k = (k + 1) % n
            while hull[(m + 1) % n] @ u < hull[m] @ u:
                m = (m + 1) % n
        umax, umin = hull[j] @ u, hull[m] @ u
        hmin, hmax = a @ nrm, hull[k] @ nrm
        area = (umax - umin) * (hmax - hmin)
        if best is None or area < best[0]:
            best = (area, u, nrm, umin, umax, hmin, hmax)
    _, u, nrm, umin, umax, hmin, hmax = best
    cu, cn = 0.5 * (umin + umax), 0.5 * (hmin + hmax)
    center = cu * u + cn * nrm
    w, h = 0.5 * (umax - umin), 0.5 * (hmax - hmin)
    angle = math.atan2(u[1], u[0])
    if h > w:
        w, h = h, w
        angle += math.pi / 2
    return OrientedBoundingBox2D((float(center[0]), float(center[1])), float(angle), (float(w), float(h)))


def _layout_points_and_area(layout) -> tuple[np.ndarray, float]:
    tris = layout.points[layout.faces]
    d1, d2 = tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]
    area = float(0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]).sum())
    return tris.reshape(-1, 2), area


def coverage(layout) -> float:
    """Percentage of the minimal oriented bounding box covered by the net."""
    pts, area = _layout_points_and_area(layout)
    box = min_area_obb(pts)
    if area <= 0 or box.area <= 0:
        raise ValueError("degenerate layout")
    return 100.0 * area / box.area


def aspect_ratio(layout) -> float:
    """Long over short side of the minimal oriented bounding box (>= 1)."""
    pts, _ = _layout_points_and_area(layout)
    box = min_area_obb(pts)
    if box.half_extents[1] <= 0:
        raise ValueError("degenerate layout")
    return box.aspect_ratio


# ---------------------------------------------------------------------------
# Hausdorff distance


def point_triangle_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Euclidean distance from points ``p`` to triangles ``(a, b, c)``, row-wise.

    Closest-point classification by Voronoi regions of the triangle.
    """
    ab, ac, ap = b - a, c - a, p - a
    d1 = (ab * ap).sum(1)
    d2 = (ac * ap).sum(1)
    bp = p - b
    d3 = (ab * bp).sum(1)
    d4 = (ac * bp).sum(1)
    cp = p - c
    d5 = (ab * cp).sum(1)
    d6 = (ac * cp).sum(1)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    closest = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    def put(mask, value):
        nonlocal done
        m = mask & ~done
        closest[m] = value[m] if value.ndim == 2 else value
        done |= m

    with np.errstate(divide="ignore", invalid="ignore"):
        put((d1 <= 0) & (d2 <= 0), a)
        put((d3 >= 0) & (d4 <= d3), b)
        put((d6 >= 0) & (d5 <= d6), c)
        v = d1 / (d1 - d3)
        put((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v[:, None] * ab)
        w = d2 / (d2 - d6)
        put((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w[:, None] * ac)
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        put((va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0), b + w[:, None] * (c - b))
        denom = 1.0 / (va + vb + vc)
        v, w = vb * denom, vc * denom
        put(np.ones(len(p), dtype=bool), a + v[:, None] * ab + w[:, None] * ac)
    return np.linalg.norm(p - closest, axis=1)


def surface_samples(mesh: HalfEdgeMesh, samples_per_area: float, rng: np.random.Generator) -> np.ndarray:
    """Vertices plus ``samples_per_area * F`` area-uniform points.

    Draws are consumed in a fixed pattern, so a denser sample set extends a
    sparser one drawn from an identically seeded generator.
    """
    faces = mesh.alive_faces()
    tri = mesh.positions[mesh.faces[faces]]
    area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    n = int(math.ceil(samples_per_area * len(faces)))
    r = rng.random((n, 3))
    cum = np.cumsum(area)
    pick = np.minimum(np.searchsorted(cum, r[:, 0] * cum[-1], side="right"), len(faces) - 1)
    s = np.sqrt(r[:, 1])
    w0, w1, w2 = 1.0 - s, s * (1.0 - r[:, 2]), s * r[:, 2]
    t = tri[pick]
    pts = w0[:, None] * t[:, 0] + w1[:, None] * t[:, 1] + w2[:, None] * t[:, 2]
    return np.vstack([mesh.positions[mesh.vertex_alive], pts])


def distance_to_surface(points: np.ndarray, mesh: HalfEdgeMesh, k: int = 16) -> np.ndarray:
    """Exact unsigned distance from each point to the triangle soup of ``mesh``."""
    faces = mesh.alive_faces()
    tri = mesh.positions[mesh.faces[faces]]
    cen = tri.mean(axis=1)
    radius = float(np.linalg.norm(tri - cen[:, None], axis=2).max())
    tree = cKDTree(cen)
    k = min(k, len(faces))
    dist_c, idx = tree.query(points, k=k)
    dist_c = dist_c.reshape(len(points), k)
    idx = idx.reshape(len(points), k)
    rep = np.repeat(points, k, axis=0)
    flat = idx.ravel()
    d = point_triangle_distance(rep, tri[flat, 0], tri[flat, 1], tri[flat, 2]).reshape(len(points), k)
    best = d.min(axis=1)
    if k == len(faces):
        return best
    # any unchecked triangle has its centroid beyond the k-th neighbour, so it
    # can only be closer if that centroid is within best + radius
    unsure = np.flatnonzero(dist_c[:, -1] <= best + radius)
    for i in unsure.tolist():
        cand = np.array(tree.query_ball_point(points[i], best[i] + radius), dtype=np.int64)
        if len(cand):
            p = np.repeat(points[i][None], len(cand), axis=0)
            best[i] = min(best[i], float(point_triangle_distance(p, tri[cand, 0], tri[cand, 1], tri[cand, 2]).min()))
    return best


def hausdorff_relative(original: HalfEdgeMesh, approx: HalfEdgeMesh, samples_per_area: float = 10.0,
                       seed: int = 0) -> float:
    """Symmetric sampled Hausdorff distance as a percentage of the original's bbox diagonal."""
    rng = np.random.default_rng(seed)
    a = surface_samples(original, samples_per_area, rng)
    b = surface_samples(approx, samples_per_area, rng)
    d = max(float(distance_to_surface(a, approx).max()), float(distance_to_surface(b, original).max()))
    return 100.0 * d / original.bbox_diagonal()


# ---------------------------------------------------------------------------
# report


@dataclass
class MetricsReport:
    status: str
    faces: int
    coverage: Optional[float] = None
    aspect_ratio: Optional[float] = None
    hausdorff: Optional[float] = None
    wall_time: float = 0.0

    def to_dict(self, timings: bool = True) -> dict:
        out = asdict(self)
        if not timings:
            out.pop("wall_time")
        return out
