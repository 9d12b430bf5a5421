"""Exact 2D triangle overlap tests and a uniform-grid broad phase.

Two triangles *overlap* when their interiors intersect.  Sharing an edge or
touching at a point does not count.  Orientation signs are computed in
floating point with a static error filter and recomputed with rationals
when the filter cannot certify the sign, so the answer is exact for the
given float coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

_EPS = 2.0 ** -53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS


def orient_sign(ax, ay, bx, by, cx, cy) -> np.ndarray:
    """Sign of the signed area of (a, b, c): +1 left turn, -1 right turn, 0 collinear."""
    ax, ay, bx, by, cx, cy = (np.asarray(v, dtype=np.float64) for v in (ax, ay, bx, by, cx, cy))
    acx, bcy, acy, bcx = ax - cx, by - cy, ay - cy, bx - cx
    detleft = acx * bcy
    detright = acy * bcx
    det = detleft - detright
    bound = _CCW_BOUND * (np.abs(detleft) + np.abs(detright))
    sign = np.sign(det).astype(np.int8)
    # float differences are exactly zero only for equal inputs, so a zero
    # factor in both products certifies a zero determinant
    certain_zero = ((acx == 0) | (bcy == 0)) & ((acy == 0) | (bcx == 0))
    unsure = (np.abs(det) <= bound) & ~certain_zero
    if np.any(unsure):
        idx = np.flatnonzero(unsure.ravel())
        flat = sign.reshape(-1)
        cols = [np.broadcast_to(v, det.shape).reshape(-1)[idx].tolist()
                for v in (ax, ay, bx, by, cx, cy)]
        for k, (a0, a1, b0, b1, c0, c1) in zip(idx.tolist(), zip(*cols)):
            flat[k] = _exact_sign(a0, a1, b0, b1, c0, c1)
        sign = flat.reshape(det.shape)
    return sign


def _exact_sign(ax, ay, bx, by, cx, cy) -> int:
    ax, ay, bx, by, cx, cy = map(Fraction, (ax, ay, bx, by, cx, cy))
    d = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (d > 0) - (d < 0)


def triangles_overlap(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise interior-intersection test for triangle arrays of shape (m, 3, 2)."""
    A = np.asarray(A, dtype=np.float64).reshape(-1, 3, 2)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 3, 2)
    m = len(A)
    if m == 0:
        return np.zeros(0, dtype=bool)
    # edges (e0, e1) of one triangle against the three points of the other,
    # for both directions: shape (m, 2, 3 edges, 3 points)
    P = np.stack([A, B], axis=1)  # (m, 2, 3, 2)
    Q = P[:, ::-1]
    e0 = P[:, :, :, None, :]
    e1 = np.roll(P, -1, axis=2)[:, :, :, None, :]
    pts = Q[:, :, None, :, :]
    e0, e1, pts = np.broadcast_arrays(e0, e1, pts)
    s = orient_sign(e0[..., 0], e0[..., 1], e1[..., 0], e1[..., 1], pts[..., 0], pts[..., 1])
    own = orient_sign(P[:, :, 0, 0], P[:, :, 0, 1], P[:, :, 1, 0], P[:, :, 1, 1],
                      P[:, :, 2, 0], P[:, :, 2, 1])  # (m, 2)
    s = s * own[:, :, None, None]
    # an edge separates when no point of the other triangle is strictly inside its half-plane
    inside = (s > 0).any(axis=3)  # (m, 2, 3)
    separated = (~inside).any(axis=(1, 2))
    return (own != 0).all(axis=1) & ~separated


def triangle_bboxes(tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    return np.minimum(np.minimum(a, b), c), np.maximum(np.maximum(a, b), c)


def _expand_cells(i0: np.ndarray, i1: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Enumerate integer cells of the boxes [i0, i1]; returns (box index, cx, cy)."""
    w = i1[:, 0] - i0[:, 0] + 1
    h = i1[:, 1] - i0[:, 1] + 1
    counts = np.where((w > 0) & (h > 0), w * h, 0)
    total = int(counts.sum())
    box = np.repeat(np.arange(len(i0)), counts)
    starts = np.cumsum(counts) - counts
    offs = np.arange(total) - np.repeat(starts, counts)
    ww = np.repeat(w, counts)
    cx = np.repeat(i0[:, 0], counts) + offs % np.maximum(ww, 1)
    cy = np.repeat(i0[:, 1], counts) + offs // np.maximum(ww, 1)
    return box, cx, cy


class TriangleGrid:
    """Uniform grid over triangle bounding boxes.

    ``query`` returns every (query, item) pair whose bounding boxes overlap
    with positive area, a superset of the interior-overlapping pairs.
    """

    def __init__(self, tris: np.ndarray, ids: np.ndarray, cell: Optional[float] = None):
        self.ids = np.asarray(ids, dtype=np.int64)
        self.lo, self.hi = triangle_bboxes(tris)
        n = len(self.ids)
        if cell is None:
            ext = (self.hi - self.lo).max(axis=1) if n else np.ones(1)
            cell = float(np.mean(ext)) if n else 1.0
        self.cell = cell if cell > 0 else 1.0
        self.origin = self.lo.min(axis=0) if n else np.zeros(2)
        if n:
            # keep the dense cell table proportional to the item count
            span = (self.hi.max(axis=0) - self.origin) / self.cell + 1
            excess = float(span[0] * span[1]) / (16.0 * n + 64.0)
            if excess > 1.0:
                self.cell *= math.sqrt(excess)
        i0 = np.floor((self.lo - self.origin) / self.cell).astype(np.int64)
        i1 = np.floor((self.hi - self.origin) / self.cell).astype(np.int64)
        self.shape = (i1.max(axis=0) + 1) if n else np.ones(2, dtype=np.int64)
        self._x0, self._y0 = i0[:, 0].copy(), i0[:, 1].copy()
        self._lx, self._ly = self.lo[:, 0].copy(), self.lo[:, 1].copy()
        self._hx, self._hy = self.hi[:, 0].copy(), self.hi[:, 1].copy()
        box, cx, cy = _expand_cells(i0, i1)
        keys = cx * self.shape[1] + cy
        order = np.argsort(keys, kind="stable")
        self.items = box[order]  # positions into self.ids
        ncell = int(self.shape[0] * self.shape[1])
        self.cell_start = np.zeros(ncell + 1, dtype=np.int64)
        np.cumsum(np.bincount(keys, minlength=ncell), out=self.cell_start[1:])

    def query(self, qlo: np.ndarray, qhi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Candidate pairs as (query row, item row) index arrays, deduplicated."""
        if len(qlo) == 0 or len(self.ids) == 0:
            e = np.zeros(0, dtype=np.int64)
            return e, e
        i0 = np.floor((qlo - self.origin) / self.cell)
        i1 = np.floor((qhi - self.origin) / self.cell)
        limit = self.shape - 1
        # boxes entirely outside the grid collapse to empty ranges
        outside = (i1 < 0).any(axis=1) | (i0 > limit).any(axis=1)
        i0 = np.clip(i0, 0, limit).astype(np.int64)
        i1 = np.clip(i1, 0, limit).astype(np.int64)
        i1[outside] = i0[outside] - 1
        box, cx, cy = _expand_cells(i0, i1)
        keys = cx * self.shape[1] + cy
        start = self.cell_start[keys]
        cnt = self.cell_start[keys + 1] - start
        total = int(cnt.sum())
        if total == 0:
            e = np.zeros(0, dtype=np.int64)
            return e, e
        qi = np.repeat(box, cnt)
        item = self.items[np.repeat(start - (np.cumsum(cnt) - cnt), cnt) + np.arange(total)]
        # report each pair once: in the cell holding the max of both low corners
        keep = np.repeat(cx, cnt) == np.maximum(i0[:, 0][qi], self._x0[item])
        keep &= np.repeat(cy, cnt) == np.maximum(i0[:, 1][qi], self._y0[item])
        qi, item = qi[keep], item[keep]
        keep = ((qlo[:, 0][qi] < self._hx[item]) & (qlo[:, 1][qi] < self._hy[item])
                & (self._lx[item] < qhi[:, 0][qi]) & (self._ly[item] < qhi[:, 1][qi]))
        return qi[keep], item[keep]


@dataclass(frozen=True)
class OverlapSet:
    """Unordered face pairs whose layout triangles overlap, stored as (low, high)."""

    pairs: frozenset

    @property
    def count(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def faces(self) -> set[int]:
        return {f for p in self.pairs for f in p}

    def restrict(self, faces: Iterable[int]) -> "OverlapSet":
        keep = set(faces)
        return OverlapSet(frozenset(p for p in self.pairs if p[0] in keep or p[1] in keep))

    @classmethod
    def from_arrays(cls, a: np.ndarray, b: np.ndarray) -> "OverlapSet":
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return cls(frozenset(zip(lo.tolist(), hi.tolist())))


def overlaps_against(points: np.ndarray, faces: np.ndarray, movers: np.ndarray,
                     grid: Optional[TriangleGrid] = None) -> tuple[np.ndarray, np.ndarray]:
    """Overlapping pairs (mover, other) with ``other`` drawn from ``faces``.

    Pairs among movers are reported once.  ``points`` is indexed by face id.
    """
    movers = np.asarray(movers, dtype=np.int64)
    if grid is None:
        grid = TriangleGrid(points[faces], faces)
    mt = points[movers]
    qlo, qhi = triangle_bboxes(mt)
    qi, item = grid.query(qlo, qhi)
    a, b = movers[qi], grid.ids[item]
    keep = a != b
    is_mover = np.zeros(int(max(points.shape[0], 1)), dtype=bool)
    is_mover[movers] = True
    keep &= ~(is_mover[b] & (b < a))
    a, b = a[keep], b[keep]
    hit = triangles_overlap(points[a], points[b])
    return a[hit], b[hit]


def count_overlaps_points(points: np.ndarray, faces: np.ndarray) -> OverlapSet:
    faces = np.asarray(faces, dtype=np.int64)
    a, b = overlaps_against(points, faces, faces)
    return OverlapSet.from_arrays(a, b)


def count_overlaps_brute(points: np.ndarray, faces: np.ndarray) -> OverlapSet:
    """All-pairs reference; O(F^2) predicate calls."""
    faces = np.asarray(faces, dtype=np.int64)
    i, j = np.triu_indices(len(faces), k=1)
    a, b = faces[i], faces[j]
    hit = triangles_overlap(points[a], points[b]) if len(a) else np.zeros(0, bool)
    return OverlapSet.from_arrays(a[hit], b[hit])
