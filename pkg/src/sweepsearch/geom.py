"""Planar geometry: points, vectors, convex polygons, disks, width and slicing.

Direction angles are bearings: angle ``b`` is the unit vector ``(sin b, cos b)``,
i.e. measured clockwise from +y.  With that convention ``diameter(p, b)`` is the
extent of ``p`` along ``bearing_vector(b)``, which is the same as the vertical
extent after rotating ``p`` counter-clockwise by ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# relative tolerance used when merging near-duplicate / collinear vertices
_MERGE_RTOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float

    def __add__(self, v):  # type: ignore[override]
        return Point2(self.x + v[0], self.y + v[1])

    def __sub__(self, other) -> "Vec2":
        return Vec2(self.x - other[0], self.y - other[1])


class Vec2(NamedTuple):
    dx: float
    dy: float

    def __add__(self, v):  # type: ignore[override]
        return Vec2(self.dx + v[0], self.dy + v[1])

    def __sub__(self, v) -> "Vec2":
        return Vec2(self.dx - v[0], self.dy - v[1])

    def __neg__(self) -> "Vec2":
        return Vec2(-self.dx, -self.dy)

    def __mul__(self, k):  # type: ignore[override]
        return Vec2(self.dx * k, self.dy * k)

    __rmul__ = __mul__

    def dot(self, v) -> float:
        return self.dx * v[0] + self.dy * v[1]

    def cross(self, v) -> float:
        return self.dx * v[1] - self.dy * v[0]

    def norm(self) -> float:
        return math.hypot(self.dx, self.dy)

    def unit(self) -> "Vec2":
        n = math.hypot(self.dx, self.dy)
        if n == 0.0:
            raise ValueError("cannot normalise a zero vector")
        return Vec2(self.dx / n, self.dy / n)

    def left_perp(self) -> "Vec2":
        return Vec2(-self.dy, self.dx)


def bearing_vector(bearing: float) -> Vec2:
    return Vec2(math.sin(bearing), math.cos(bearing))


def bearing_of(v) -> float:
    return math.atan2(v[0], v[1])


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def closest_point_on_segment(q, a, b) -> Point2:
    ax, ay = a
    ex, ey = b[0] - ax, b[1] - ay
    ee = ex * ex + ey * ey
    if ee == 0.0:
        return Point2(ax, ay)
    t = ((q[0] - ax) * ex + (q[1] - ay) * ey) / ee
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return Point2(ax + t * ex, ay + t * ey)


def point_segment_distance(q, a, b) -> float:
    return distance(q, closest_point_on_segment(q, a, b))


def _signed_area2(pts: Sequence[Sequence[float]]) -> float:
    s = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices."""

    vertices: tuple[Point2, ...]

    def __init__(self, vertices: Iterable[Sequence[float]]):
        pts = tuple(Point2(float(v[0]), float(v[1])) for v in vertices)
        object.__setattr__(self, "vertices", pts)
        self._validate()

    def _validate(self) -> None:
        pts = self.vertices
        n = len(pts)
        if n < 3:
            raise ValueError(f"polygon needs at least 3 vertices, got {n}")
        for p in pts:
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise ValueError(f"non-finite vertex {p}")
        if len(set(pts)) != n:
            raise ValueError("polygon has repeated vertices")
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            turn = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
            if not turn > 0.0:
                raise ValueError(
                    f"polygon is not strictly convex and counter-clockwise at vertex {i} {b}"
                )
        # a star-shaped CCW winding passes the local test; total turning must be one loop
        if _signed_area2(pts) <= 0.0 or _winding_turns(pts) != 1:
            raise ValueError("polygon vertices do not form a simple convex loop")

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return 0.5 * _signed_area2(self.vertices)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    @property
    def centroid(self) -> Point2:
        a6 = 3.0 * _signed_area2(self.vertices)
        cx = cy = 0.0
        pts = self.vertices
        for i in range(len(pts)):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % len(pts)]
            w = x0 * y1 - x1 * y0
            cx += (x0 + x1) * w
            cy += (y0 + y1) * w
        return Point2(cx / a6, cy / a6)

    def edges(self):
        pts = self.vertices
        for i in range(len(pts)):
            yield pts[i], pts[(i + 1) % len(pts)]

    def projections(self, axis) -> list[float]:
        ax, ay = axis
        return [p.x * ax + p.y * ay for p in self.vertices]

    def extent(self, axis) -> tuple[float, float]:
        pr = self.projections(axis)
        return min(pr), max(pr)


def _winding_turns(pts) -> int:
    total = 0.0
    n = len(pts)
    for i in range(n):
        a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
        h0 = math.atan2(b[1] - a[1], b[0] - a[0])
        h1 = math.atan2(c[1] - b[1], c[0] - b[0])
        d = (h1 - h0 + math.pi) % (2 * math.pi) - math.pi
        total += d
    return round(total / (2 * math.pi))


@dataclass(frozen=True)
class Disk:
    center: Point2
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")

    def contains(self, q) -> bool:
        dx = q[0] - self.center[0]
        dy = q[1] - self.center[1]
        return dx * dx + dy * dy <= self.radius * self.radius

    def intersects(self, other: "Disk") -> bool:
        return distance(self.center, other.center) < self.radius + other.radius


def normalize_vertices(points: Iterable[Sequence[float]]) -> ConvexPolygon:
    """Build a polygon from a convex vertex loop, merging duplicate and collinear vertices.

    Accepts either orientation.  Raises ValueError if nothing of positive area remains.
    """
    pts = [Point2(float(p[0]), float(p[1])) for p in points]
    if len(pts) >= 3 and _signed_area2(pts) < 0.0:
        pts.reverse()
    scale = 0.0
    for p in pts:
        scale = max(scale, abs(p.x), abs(p.y))
    span = 0.0
    if pts:
        xs = [p.x for p in pts]
        ys = [p.y for p in pts]
        span = max(max(xs) - min(xs), max(ys) - min(ys))
    dup_tol = max(span, scale) * _MERGE_RTOL * 16
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        out: list[Point2] = []
        for p in pts:
            if out and distance(out[-1], p) <= dup_tol:
                changed = True
                continue
            out.append(p)
        if len(out) > 1 and distance(out[0], out[-1]) <= dup_tol:
            out.pop()
            changed = True
        pts = out
        n = len(pts)
        if n < 3:
            break
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            ux, uy = b.x - a.x, b.y - a.y
            vx, vy = c.x - b.x, c.y - b.y
            turn = ux * vy - uy * vx
            if turn <= _MERGE_RTOL * 16 * math.hypot(ux, uy) * math.hypot(vx, vy) + 0.0:
                del pts[i]
                changed = True
                break
    if len(pts) < 3:
        raise ValueError("degenerate polygon after merging vertices")
    return ConvexPolygon(pts)


def polygon_area(p: ConvexPolygon) -> float:
    return p.area


def diameter(p: ConvexPolygon, theta: float) -> float:
    """Extent of ``p`` along bearing ``theta`` (height after rotating ``p`` by ``theta``)."""
    s, c = math.sin(theta), math.cos(theta)
    pr = [v.x * s + v.y * c for v in p.vertices]
    return max(pr) - min(pr)


def min_diameter(p: ConvexPolygon) -> tuple[float, float]:
    """Minimum width of ``p`` by rotating calipers over edge directions.

    Returns ``(theta_opt, d_min)`` with ``theta_opt`` in ``[0, pi)``; equal widths
    resolve to the smallest angle.
    """
    cands = []
    for a, b in p.edges():
        ex, ey = b.x - a.x, b.y - a.y
        # bearing of the edge normal (ey, -ex), folded to [0, pi)
        th = math.atan2(ey, -ex) % math.pi
        if th >= math.pi - 1e-13:
            th = 0.0
        cands.append((diameter(p, th), th))
    d_min = min(w for w, _ in cands)
    tol = d_min * 1e-12
    theta_opt = min(th for w, th in cands if w <= d_min + tol)
    return theta_opt, diameter(p, theta_opt)


def rotate(p: ConvexPolygon, alpha: float, about=(0.0, 0.0)) -> ConvexPolygon:
    c, s = math.cos(alpha), math.sin(alpha)
    ox, oy = about
    return ConvexPolygon(
        (ox + (v.x - ox) * c - (v.y - oy) * s, oy + (v.x - ox) * s + (v.y - oy) * c)
        for v in p.vertices
    )


def clip_halfplane(points: Sequence[Sequence[float]], axis, offset: float, keep_below: bool = True):
    """Sutherland-Hodgman against one half-plane ``q . axis <= offset`` (or ``>=``)."""
    ax, ay = axis
    sign = 1.0 if keep_below else -1.0
    out = []
    n = len(points)
    for i in range(n):
        p = points[i]
        q = points[(i + 1) % n]
        fp = sign * (p[0] * ax + p[1] * ay - offset)
        fq = sign * (q[0] * ax + q[1] * ay - offset)
        if fp <= 0.0:
            out.append((p[0], p[1]))
        if (fp < 0.0 < fq) or (fq < 0.0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _area_of(points) -> float:
    if len(points) < 3:
        return 0.0
    return 0.5 * abs(_signed_area2(points))


def area_below(p: ConvexPolygon, axis, offset: float) -> float:
    """Area of the part of ``p`` with ``q . axis <= offset``."""
    return _area_of(clip_halfplane(p.vertices, axis, offset, keep_below=True))


def offset_for_area(p: ConvexPolygon, axis, target_area: float, rtol: float = 1e-12) -> float:
    """Offset along unit ``axis`` whose lower part of ``p`` has ``target_area`` (bisection)."""
    total = p.area
    if not 0.0 < target_area < total:
        raise ValueError(f"target area {target_area} outside (0, {total})")
    lo, hi = p.extent(axis)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        a = area_below(p, axis, mid)
        if abs(a - target_area) <= rtol * total:
            return mid
        if a < target_area:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def slab(p: ConvexPolygon, axis, lo: float, hi: float) -> ConvexPolygon:
    """Part of ``p`` between the parallel lines ``q . axis = lo`` and ``q . axis = hi``."""
    pts = clip_halfplane(p.vertices, axis, hi, keep_below=True)
    pts = clip_halfplane(pts, axis, lo, keep_below=False)
    return normalize_vertices(pts)


def slice_polygon(
    p: ConvexPolygon, line_direction: float, target_area: float
) -> tuple[ConvexPolygon, ConvexPolygon]:
    """Cut ``p`` with a line of bearing ``line_direction`` so the left part has ``target_area``.

    "Left" is the side to the left of the directed cut line; for a vertical
    (bearing 0) cut that is the low-x side.
    """
    total = p.area
    if not 0.0 < target_area < total:
        raise ValueError(f"target area {target_area} outside (0, {total})")
    axis = bearing_vector(line_direction + math.pi / 2)  # right-hand normal of the line
    off = offset_for_area(p, axis, target_area)
    left = normalize_vertices(clip_halfplane(p.vertices, axis, off, keep_below=True))
    right = normalize_vertices(clip_halfplane(p.vertices, axis, off, keep_below=False))
    return left, right


def contains(p: ConvexPolygon, q, tol: float = 1e-9) -> bool:
    """Point-in-polygon; points on the boundary (within ``tol`` metres) count as inside."""
    qx, qy = q
    for a, b in p.edges():
        ex, ey = b.x - a.x, b.y - a.y
        cr = ex * (qy - a.y) - ey * (qx - a.x)
        if cr < -tol * math.hypot(ex, ey):
            return False
    return True


def boundary_distance(p: ConvexPolygon, q) -> float:
    """Distance from ``q`` to the polygon boundary (positive whether inside or outside)."""
    return min(point_segment_distance(q, a, b) for a, b in p.edges())


def inward_normals_near(p: ConvexPolygon, q, radius: float) -> list[Vec2]:
    """Inward unit normals of every edge whose segment is within ``radius`` of ``q``."""
    out = []
    for a, b in p.edges():
        if point_segment_distance(q, a, b) <= radius:
            out.append(Vec2(-(b.y - a.y), b.x - a.x).unit())
    return out


def clamp_to_polygon(p: ConvexPolygon, q) -> Point2:
    """``q`` itself if inside, else the nearest boundary point."""
    if contains(p, q, tol=0.0):
        return Point2(q[0], q[1])
    best = None
    best_d = math.inf
    for a, b in p.edges():
        c = closest_point_on_segment(q, a, b)
        d = distance(q, c)
        if d < best_d:
            best, best_d = c, d
    return best


def format_polygon(p: ConvexPolygon) -> str:
    return "".join(f"{v.x!r} {v.y!r}\n" for v in p.vertices)


def parse_polygon(text: str, source: str = "<polygon>") -> ConvexPolygon:
    """Parse the polygon text format: one ``x y`` vertex per line, CCW, '#' comments."""
    pts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"{source}:{lineno}: expected 'x y', got {raw.strip()!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValueError(f"{source}:{lineno}: non-numeric vertex {raw.strip()!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"{source}:{lineno}: non-finite vertex {raw.strip()!r}")
        pts.append((x, y))
    try:
        return ConvexPolygon(pts)
    except ValueError as exc:
        raise ValueError(f"{source}: {exc}") from None


def load_polygon(path) -> ConvexPolygon:
    with open(path) as fh:
        return parse_polygon(fh.read(), source=str(path))


def rectangle(x0: float, y0: float, x1: float, y1: float) -> ConvexPolygon:
    return ConvexPolygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def sample_uniform(poly: ConvexPolygon, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform in ``poly`` by fan triangulation."""
    v = np.asarray(poly.vertices, dtype=float)
    a = v[0]
    b = v[1:-1]
    c = v[2:]
    areas = 0.5 * np.abs((b[:, 0] - a[0]) * (c[:, 1] - a[1]) - (b[:, 1] - a[1]) * (c[:, 0] - a[0]))
    tri = rng.choice(len(areas), size=n, p=areas / areas.sum())
    r1 = rng.random(n)
    r2 = rng.random(n)
    flip = r1 + r2 > 1.0
    r1 = np.where(flip, 1.0 - r1, r1)
    r2 = np.where(flip, 1.0 - r2, r2)
    return a + r1[:, None] * (b[tri] - a) + r2[:, None] * (c[tri] - a)
