"""Synthetic user populations and disk counting over a uniform grid index."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import ConvexPolygon, Disk, Point2, boundary_distance, contains, sample_uniform

MAX_CENTER_DRAWS = 10_000


@dataclass(frozen=True)
class PopulationSpec:
    n_clusters: int
    cluster_radius: float  # R_c, m
    clustered_density: float  # lambda_c, users / m^2
    background_density: float  # lambda_nc, users / m^2
    area: ConvexPolygon
    # minimum distance between cluster centres; 0 lets clusters overlap freely
    min_center_separation: float = 0.0

    def __post_init__(self):
        if self.n_clusters < 0:
            raise ValueError("n_clusters must be >= 0")
        if not self.cluster_radius > 0:
            raise ValueError("cluster radius must be positive")
        if self.clustered_density < 0 or self.background_density < 0:
            raise ValueError("densities must be non-negative")
        if self.min_center_separation < 0:
            raise ValueError("min_center_separation must be >= 0")

    @property
    def expected_per_cluster(self) -> float:
        return self.clustered_density * math.pi * self.cluster_radius**2

    @property
    def expected_clustered(self) -> float:
        return self.n_clusters * self.expected_per_cluster

    @property
    def expected_background(self) -> float:
        return self.background_density * self.area.area


class UserPopulation:
    """Static users plus a CSR grid index (cells of ``cell_size`` metres, row-major).

    Users are stored in grid order, so every row of cells touched by a query is
    one contiguous slice of the coordinate arrays.
    """

    def __init__(self, xy, cluster_ids, cluster_centers, area: ConvexPolygon, cell_size: float = 500.0):
        if not cell_size > 0:
            raise ValueError("cell size must be positive")
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        cid = np.asarray(cluster_ids, dtype=np.int64).reshape(-1)
        if len(cid) != len(xy):
            raise ValueError("cluster_ids length does not match positions")
        self.area = area
        self.cell_size = float(cell_size)
        self.cluster_centers = tuple(Point2(float(x), float(y)) for x, y in cluster_centers)

        x0, y0, x1, y1 = area.bounds
        self.origin = (x0, y0)
        self.nx = max(1, int(math.floor((x1 - x0) / cell_size)) + 1)
        self.ny = max(1, int(math.floor((y1 - y0) / cell_size)) + 1)
        cx = np.clip(np.floor((xy[:, 0] - x0) / cell_size).astype(np.int64), 0, self.nx - 1)
        cy = np.clip(np.floor((xy[:, 1] - y0) / cell_size).astype(np.int64), 0, self.ny - 1)
        key = cy * self.nx + cx
        order = np.argsort(key, kind="stable")
        self.xs = np.ascontiguousarray(xy[order, 0])
        self.ys = np.ascontiguousarray(xy[order, 1])
        self.cluster_ids = cid[order]
        self._cell_key = key[order]
        self.cell_start = np.searchsorted(self._cell_key, np.arange(self.nx * self.ny + 1), side="left")

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack((self.xs, self.ys))

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_centers)

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_ids == cluster)

    def _rows(self, x: float, y: float, r: float):
        cs = self.cell_size
        ox, oy = self.origin
        cx0 = max(0, int(math.floor((x - r - ox) / cs)))
        cx1 = min(self.nx - 1, int(math.floor((x + r - ox) / cs)))
        cy0 = max(0, int(math.floor((y - r - oy) / cs)))
        cy1 = min(self.ny - 1, int(math.floor((y + r - oy) / cs)))
        if cx0 > cx1 or cy0 > cy1:
            return
        start = self.cell_start
        for row in range(cy0, cy1 + 1):
            base = row * self.nx
            s, e = start[base + cx0], start[base + cx1 + 1]
            if e > s:
                yield s, e

    def count(self, x: float, y: float, r: float, exclude: np.ndarray | None = None) -> int:
        """Users with distance <= r from (x, y), skipping those flagged in ``exclude``."""
        r2 = r * r
        total = 0
        xs, ys = self.xs, self.ys
        for s, e in self._rows(x, y, r):
            dx = xs[s:e] - x
            dy = ys[s:e] - y
            inside = dx * dx + dy * dy <= r2
            if exclude is not None:
                inside &= ~exclude[s:e]
            total += int(np.count_nonzero(inside))
        return total

    def indices(self, x: float, y: float, r: float) -> np.ndarray:
        r2 = r * r
        out = []
        xs, ys = self.xs, self.ys
        for s, e in self._rows(x, y, r):
            dx = xs[s:e] - x
            dy = ys[s:e] - y
            out.append(s + np.flatnonzero(dx * dx + dy * dy <= r2))
        if not out:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(out)

    def mark(self, mask: np.ndarray, x: float, y: float, r: float) -> None:
        """Set ``mask`` for every user inside the disk."""
        mask[self.indices(x, y, r)] = True

    def to_csv(self) -> str:
        buf = io.StringIO()
        for i, c in enumerate(self.cluster_centers):
            buf.write(f"# cluster_center,{i},{c.x!r},{c.y!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "cluster_id"])
        for x, y, c in zip(self.xs.tolist(), self.ys.tolist(), self.cluster_ids.tolist()):
            w.writerow([repr(x), repr(y), "" if c < 0 else c])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, area: ConvexPolygon, cell_size: float = 500.0) -> "UserPopulation":
        centers = []
        rows = []
        for line in text.splitlines():
            if line.startswith("# cluster_center,"):
                _, i, x, y = line[2:].split(",")
                centers.append((int(i), float(x), float(y)))
            elif line and not line.startswith("#"):
                rows.append(line)
        reader = csv.DictReader(rows)
        xy = []
        cid = []
        for rec in reader:
            xy.append((float(rec["x"]), float(rec["y"])))
            cid.append(int(rec["cluster_id"]) if rec["cluster_id"] not in ("", None) else -1)
        centers.sort()
        return cls(np.array(xy).reshape(-1, 2), cid, [(x, y) for _, x, y in centers], area, cell_size)


def count_in_disk(pop: UserPopulation, disk: Disk, exclude: np.ndarray | None = None) -> int:
    return pop.count(disk.center[0], disk.center[1], disk.radius, exclude)


def _draw_center(spec: PopulationSpec, rng: np.random.Generator, placed) -> Point2:
    area = spec.area
    for _ in range(MAX_CENTER_DRAWS):
        c = sample_uniform(area, 1, rng)[0]
        q = (float(c[0]), float(c[1]))
        if not contains(area, q, tol=0.0) or boundary_distance(area, q) < spec.cluster_radius:
            continue
        if spec.min_center_separation > 0 and any(
            math.hypot(q[0] - p.x, q[1] - p.y) < spec.min_center_separation for p in placed
        ):
            continue
        return Point2(*q)
    raise ValueError(
        f"could not place a cluster disk of radius {spec.cluster_radius} inside the area "
        f"after {MAX_CENTER_DRAWS} draws"
    )


def generate(spec: PopulationSpec, seed, cell_size: float = 500.0) -> UserPopulation:
    """Cluster centres uniform in the area (whole disk inside), then two independent PPPs."""
    rng = np.random.default_rng(seed)
    centers: list[Point2] = []
    for _ in range(spec.n_clusters):
        centers.append(_draw_center(spec, rng, centers))

    parts = []
    ids = []
    mean_c = spec.expected_per_cluster
    for i, c in enumerate(centers):
        k = int(rng.poisson(mean_c))
        rad = spec.cluster_radius * np.sqrt(rng.random(k))
        ang = 2.0 * np.pi * rng.random(k)
        parts.append(np.column_stack((c.x + rad * np.cos(ang), c.y + rad * np.sin(ang))))
        ids.append(np.full(k, i, dtype=np.int64))
    k_bg = int(rng.poisson(spec.expected_background))
    parts.append(sample_uniform(spec.area, k_bg, rng) if k_bg else np.empty((0, 2)))
    ids.append(np.full(k_bg, -1, dtype=np.int64))
    xy = np.vstack(parts) if parts else np.empty((0, 2))
    return UserPopulation(xy, np.concatenate(ids), centers, spec.area, cell_size)


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    code: str
    message: str


@dataclass
class ScenarioCheck:
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.level == "error"]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.level == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def __iter__(self):
        return iter(self.diagnostics)

    def __len__(self):
        return len(self.diagnostics)


def validate_scenario(spec: PopulationSpec, n_drones: int, coverage_radius: float) -> ScenarioCheck:
    """Check the modelling assumptions: sparse coverage, clustered majority, coverable clusters."""
    out = ScenarioCheck()
    rc, rd = spec.cluster_radius, coverage_radius
    if 2.0 * rc > rd:
        out.diagnostics.append(
            Diagnostic("error", "cluster-diameter", f"cluster diameter 2*R_c = {2 * rc:g} m exceeds R_d = {rd:g} m")
        )
    a_p = spec.area.area
    a_d = math.pi * rd * rd
    if a_p < 10.0 * n_drones * a_d:
        out.diagnostics.append(
            Diagnostic(
                "warning",
                "area-ratio",
                f"A_p / (n A_d) = {a_p / (n_drones * a_d):.3g} is not much greater than 1",
            )
        )
    u_c, u_o = spec.expected_clustered, spec.expected_background
    if u_o > 0.2 * u_c:
        ratio = math.inf if u_c == 0 else u_o / u_c
        out.diagnostics.append(
            Diagnostic("warning", "background-ratio", f"expected u_o / u_c = {ratio:.3g} is not much less than 1")
        )
    return out
