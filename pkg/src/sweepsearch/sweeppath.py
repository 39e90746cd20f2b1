"""Boustrophedon waypoint paths that keep every point of a convex area within R_d."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geom import ConvexPolygon, Point2, bearing_vector, clip_halfplane, distance


@dataclass(frozen=True)
class ZigzagPath:
    waypoints: tuple[Point2, ...]
    lap_spacing: float
    sweep_direction: float
    lap_offsets: tuple[float, ...] = ()
    lap_starts: tuple[int, ...] = ()  # waypoint index where each lap begins

    @property
    def n_laps(self) -> int:
        return len(self.lap_offsets)

    @property
    def offset_axis(self):
        return bearing_vector(self.sweep_direction - math.pi / 2)

    def reversed(self) -> "ZigzagPath":
        n = len(self.waypoints)
        starts = tuple(sorted(n - 1 - i for i in self.lap_starts))
        return ZigzagPath(self.waypoints[::-1], self.lap_spacing, self.sweep_direction, self.lap_offsets[::-1], starts)


def lap_count(extent: float, spacing: float) -> int:
    return max(1, math.ceil(extent / spacing - 1e-9))


def lap_offsets(o_min: float, o_max: float, coverage_radius: float, overlap: float = 0.0) -> list[float]:
    half = coverage_radius * (1.0 - overlap)
    spacing = 2.0 * half
    extent = o_max - o_min
    n = lap_count(extent, spacing)
    if n == 1:
        return [min(o_min + half, 0.5 * (o_min + o_max))]
    return [o_min + half + k * spacing for k in range(n - 1)] + [o_max - half]


def _chord(poly: ConvexPolygon, n, t, offset: float):
    """Endpoints of the chord ``q . n = offset`` ordered by the along-lap coordinate."""
    hits = []
    pts = poly.vertices
    m = len(pts)
    for i in range(m):
        p, q = pts[i], pts[(i + 1) % m]
        fp = p.x * n[0] + p.y * n[1] - offset
        fq = q.x * n[0] + q.y * n[1] - offset
        if fp == 0.0:
            hits.append(Point2(p.x, p.y))
        if (fp < 0.0 < fq) or (fq < 0.0 < fp):
            s = fp / (fp - fq)
            hits.append(Point2(p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)))
    if not hits:
        # offset grazes the polygon: fall back to the closest vertex
        v = min(pts, key=lambda p: abs(p.x * n[0] + p.y * n[1] - offset))
        return v, v
    lo = min(hits, key=lambda p: p.x * t[0] + p.y * t[1])
    hi = max(hits, key=lambda p: p.x * t[0] + p.y * t[1])
    return lo, hi


def _band_extreme(poly: ConvexPolygon, n, t, lo: float, hi: float, offset: float, sign: float):
    """Extreme point in direction ``sign * t`` of the part of ``poly`` with offsets in [lo, hi].

    Ties (an edge perpendicular to the lap) resolve to the point nearest ``offset``.
    """
    pts = clip_halfplane(poly.vertices, n, hi, keep_below=True)
    pts = clip_halfplane(pts, n, lo, keep_below=False)
    if not pts:
        return None
    best = min(
        pts,
        key=lambda p: (-sign * (p[0] * t[0] + p[1] * t[1]), abs(p[0] * n[0] + p[1] * n[1] - offset)),
    )
    return Point2(*best)


def _boundary_position(poly: ConvexPolygon, q) -> tuple[int, float]:
    """Edge index and parameter of the boundary point nearest ``q``."""
    best = (0, 0.0)
    best_d = math.inf
    pts = poly.vertices
    m = len(pts)
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        ex, ey = b.x - a.x, b.y - a.y
        ee = ex * ex + ey * ey
        s = ((q[0] - a.x) * ex + (q[1] - a.y) * ey) / ee
        s = min(1.0, max(0.0, s))
        d = math.hypot(a.x + s * ex - q[0], a.y + s * ey - q[1])
        if d < best_d:
            best, best_d = (i, s), d
    return best


def boundary_walk(poly: ConvexPolygon, a, b) -> list[Point2]:
    """Vertices passed when walking the boundary from ``a`` to ``b`` the short way round."""
    pts = poly.vertices
    m = len(pts)
    ia, sa = _boundary_position(poly, a)
    ib, sb = _boundary_position(poly, b)

    # counter-clockwise: start vertices of edges ia+1 .. ib
    if ia == ib and sb >= sa:
        fwd = []
    else:
        k = (ib - ia) % m or m
        fwd = [pts[(ia + j) % m] for j in range(1, k + 1)]
    # clockwise: start vertices of edges ia .. ib+1
    if ia == ib and sb <= sa:
        back = []
    else:
        k = (ia - ib) % m or m
        back = [pts[(ia - j) % m] for j in range(0, k)]

    def length(verts):
        chain = [a, *verts, b]
        return sum(distance(p, q) for p, q in zip(chain, chain[1:]))

    verts = fwd if length(fwd) <= length(back) else back
    return [v for v in verts if distance(v, a) > 1e-9 and distance(v, b) > 1e-9]


def generate_zigzag(
    area: ConvexPolygon, sweep_direction: float, coverage_radius: float, overlap: float = 0.0
) -> ZigzagPath:
    """Zigzag path with laps along ``sweep_direction`` (a bearing) spaced ``2 R_d (1 - overlap)``.

    Each lap is the chord of the area at its offset.  Laps alternate direction and
    are joined along the boundary, which covers the boundary strip between two
    chord ends on the transition side.  On the other side, where the boundary
    inside the lap's band bulges past the chord end, the lap is extended to the
    band's extreme point so the bulge stays within R_d.
    """
    if not coverage_radius > 0:
        raise ValueError("coverage radius must be positive")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")
    t = bearing_vector(sweep_direction)
    n = bearing_vector(sweep_direction - math.pi / 2)
    half = coverage_radius * (1.0 - overlap)
    o_min, o_max = area.extent(n)
    offsets = lap_offsets(o_min, o_max, coverage_radius, overlap)
    eps = 1e-9 * max(1.0, o_max - o_min)

    def along(p):
        return p[0] * t[0] + p[1] * t[1]

    n_laps = len(offsets)
    laps = []
    for k, off in enumerate(offsets):
        c_lo, c_hi = _chord(area, n, t, off)
        # lap k runs towards +t when k is even; the transition after it follows
        # the boundary on its exit side and already covers that side's half-band
        ends = {}
        for side, chord_end in ((-1.0, c_lo), (1.0, c_hi)):
            exit_side = 1.0 if k % 2 == 0 else -1.0
            need_lower = not (k > 0 and -exit_side == side)
            need_upper = not (k < n_laps - 1 and exit_side == side)
            lo = off - half if need_lower else off
            hi = off + half if need_upper else off
            ext = None
            if need_lower or need_upper:
                e = _band_extreme(area, n, t, lo, hi, off, side)
                if e is not None and side * (along(e) - along(chord_end)) > eps:
                    ext = e
            ends[side] = ext
        lap = []
        if ends[-1.0] is not None:
            lap.append(ends[-1.0])
        lap.append(c_lo)
        if distance(c_hi, c_lo) > eps:
            lap.append(c_hi)
        if ends[1.0] is not None:
            lap.append(ends[1.0])
        laps.append(lap)

    waypoints: list[Point2] = []
    starts = []
    for k, lap in enumerate(laps):
        if k % 2 == 1:
            lap = lap[::-1]
        if waypoints:
            waypoints.extend(boundary_walk(area, waypoints[-1], lap[0]))
        starts.append(len(waypoints))
        for p in lap:
            if not waypoints or distance(waypoints[-1], p) > eps:
                waypoints.append(p)
    return ZigzagPath(tuple(waypoints), 2.0 * half, sweep_direction, tuple(offsets), tuple(starts))


def path_length(path) -> float:
    wps = path.waypoints if isinstance(path, ZigzagPath) else path
    if len(wps) < 2:
        raise ValueError("path needs at least two waypoints")
    return math.fsum(distance(a, b) for a, b in zip(wps, wps[1:]))


def _segments_distance(q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point in ``q`` (k,2) to its segment ``a``-``b`` (k,2 each)."""
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    w = q - a
    s = np.where(ee > 0, np.einsum("ij,ij->i", w, e) / np.where(ee > 0, ee, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    d = w - s[:, None] * e
    return np.hypot(d[:, 0], d[:, 1])


def covered_mask(points, polylines, radius: float) -> np.ndarray:
    """Which ``points`` lie within ``radius`` of at least one of the ``polylines`` (exact)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    verts = []
    seg_a = []
    seg_b = []
    max_seg = 0.0
    for line in polylines:
        arr = np.asarray(line, dtype=float).reshape(-1, 2)
        if len(arr) == 0:
            continue
        verts.append(arr)
        if len(arr) >= 2:
            seg_a.append(arr[:-1])
            seg_b.append(arr[1:])
            max_seg = max(max_seg, float(np.max(np.hypot(*(arr[1:] - arr[:-1]).T))))
    if not verts or len(pts) == 0:
        return np.zeros(len(pts), dtype=bool)
    allv = np.vstack(verts)
    tree = cKDTree(allv)
    d, _ = tree.query(pts)
    mask = d <= radius
    todo = np.flatnonzero(~mask)
    if not seg_a or len(todo) == 0:
        return mask
    a = np.vstack(seg_a)
    b = np.vstack(seg_b)
    seg_tree = cKDTree(0.5 * (a + b))
    reach = radius + 0.5 * max_seg + 1e-9
    for i in todo:
        idx = seg_tree.query_ball_point(pts[i], reach)
        if not idx:
            continue
        idx = np.asarray(idx)
        q = np.broadcast_to(pts[i], (len(idx), 2))
        if np.any(_segments_distance(q, a[idx], b[idx]) <= radius):
            mask[i] = True
    return mask
