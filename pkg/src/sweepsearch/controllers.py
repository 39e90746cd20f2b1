"""Per-drone mission logic: sweep-and-search plus the random and attractive baselines.

Each controller is split into a ``decide_*`` phase (sense, update the mode
machine, choose a velocity) and :func:`integrate` (move).  The engine runs
collision avoidance between the two; the ``step_*`` functions do both for
use without an engine.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geom import ConvexPolygon, Disk, Point2, Vec2, bearing_vector, clamp_to_polygon, distance, inward_normals_near
from .sweeppath import ZigzagPath
from .users import UserPopulation

# positions closer than this count as "at" a waypoint
_AT = 1e-9


class Mode(enum.Enum):
    TRANSIT = "Transit"
    SWEEP = "Sweep"
    SEARCH = "Search"
    RETURN = "Return"
    DONE = "Done"
    FAILED = "Failed"


@dataclass(frozen=True)
class SearchParams:
    epsilon_threshold: float = 10.0  # users
    sample_time: float = 0.5  # s
    speed: float = 10.0  # m/s
    coverage_radius: float = 500.0  # m

    def __post_init__(self):
        for name in ("epsilon_threshold", "sample_time", "speed", "coverage_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def step_length(self) -> float:
        return self.speed * self.sample_time


@dataclass(frozen=True)
class Breakpoint:
    position: Point2
    velocity: Vec2
    path_cursor: int


@dataclass(frozen=True)
class SearchEvent:
    drone_id: int
    time: float
    encounter: Point2
    heading: float
    location: Point2
    served: int
    published: bool


@dataclass(frozen=True)
class Candidate:
    location: Point2
    served: int
    drone_id: int
    time: float = 0.0


class Blackboard:
    """Shared store of detected areas and candidate deployment locations.

    ``suppression`` selects how detected areas silence new encounters:

    * ``"overlap"``: no encounter while the drone's coverage disk intersects a
      detected area.
    * ``"users"``: users inside detected areas are left out of the sensed
      count, so a new cluster next to a detected one still raises the count.
    """

    def __init__(self, population: UserPopulation | None = None, suppression: str = "overlap", surviving=()):
        if suppression not in ("overlap", "users"):
            raise ValueError(f"unknown suppression mode {suppression!r}")
        self.population = population
        self.suppression = suppression
        self.detected_areas: list[Disk] = []
        self.candidates: list[Candidate] = []
        self.detected_mask = np.zeros(len(population) if population is not None else 0, dtype=bool)
        for disk in surviving:
            self.label(disk)

    def label(self, disk: Disk) -> None:
        self.detected_areas.append(disk)
        if self.population is not None:
            self.population.mark(self.detected_mask, disk.center[0], disk.center[1], disk.radius)

    def suppresses(self, disk: Disk) -> bool:
        if self.suppression == "users":
            return False
        return any(disk.intersects(d) for d in self.detected_areas)

    def sense(self, x: float, y: float, r: float) -> tuple[int, int]:
        """``(raw, new)`` user counts in the disk; ``new`` leaves out detected users."""
        pop = self.population
        raw = pop.count(x, y, r)
        if self.suppression == "users" and self.detected_areas:
            return raw, pop.count(x, y, r, self.detected_mask)
        return raw, raw

    def publish(self, location, served: int, radius: float, drone_id: int = -1, time: float = 0.0) -> bool:
        """Label the area around ``location`` as detected and record it as a candidate.

        A candidate within ``radius`` of an existing one is the same cluster
        found twice (two drones searching at once): the better of the two is
        kept in the earlier slot.  Returns True when a new candidate was added.
        """
        loc = Point2(float(location[0]), float(location[1]))
        self.label(Disk(loc, radius))
        for i, c in enumerate(self.candidates):
            if distance(c.location, loc) <= radius:
                if served > c.served:
                    self.candidates[i] = Candidate(loc, served, drone_id, time)
                    self._sort()
                return False
        self.candidates.append(Candidate(loc, served, drone_id, time))
        self._sort()
        return True

    def _sort(self) -> None:
        # list.sort is stable, so equal counts keep discovery order
        self.candidates.sort(key=lambda c: -c.served)


def detect_encounter(previous_count: int, current_count: int, position, board: Blackboard, params: SearchParams) -> bool:
    """True when the count rose by more than the threshold and the disk is not suppressed."""
    if current_count - previous_count <= params.epsilon_threshold:
        return False
    return not board.suppresses(Disk(Point2(position[0], position[1]), params.coverage_radius))


def arc_samples(center, heading: float, radius: float, step: float, area: ConvexPolygon | None = None) -> list[Point2]:
    """Front half of the circle around ``center`` from the left of ``heading`` to its right.

    The arc is cut into ``ceil(pi * radius / step)`` equal steps, so consecutive
    samples are at most ``step`` apart.  With ``area`` given, samples outside it
    are moved to the nearest boundary point.
    """
    h = bearing_vector(heading)
    left = h.left_perp()
    n = max(1, math.ceil(math.pi * radius / step - 1e-9))
    out = []
    for k in range(n + 1):
        phi = math.pi * k / n
        c, s = math.cos(phi), math.sin(phi)
        q = Point2(center[0] + radius * (c * left.dx + s * h.dx), center[1] + radius * (c * left.dy + s * h.dy))
        out.append(clamp_to_polygon(area, q) if area is not None else q)
    return out


def pick_best(keys: Sequence) -> int:
    """Index of the best sample along the arc.

    Samples with the highest key form runs of consecutive equal values; the
    middle of the first such run wins.  A run is the stretch of the arc where
    the whole cluster is in the disk, and its ends are where members start to
    drop out while a background user may drop in, so the middle is the
    placement with the most room on both sides.
    """
    top = max(keys)
    start = next(i for i, k in enumerate(keys) if k == top)
    end = start
    while end + 1 < len(keys) and keys[end + 1] == top:
        end += 1
    return (start + end) // 2


def search_arc(encounter_point, heading: float, population: UserPopulation, params: SearchParams, area=None, board=None):
    """Best sample on the front half-circle: ``(location, count)``; ties go to :func:`pick_best`.

    With a ``board`` in ``"users"`` mode samples are ranked by users not yet
    detected, then by the raw count; the returned count is always raw.
    """
    pts = arc_samples(encounter_point, heading, params.coverage_radius, params.step_length, area)
    keys = []
    for q in pts:
        if board is not None:
            raw, new = board.sense(q.x, q.y, params.coverage_radius)
        else:
            raw = new = population.count(q.x, q.y, params.coverage_radius)
        keys.append((new, raw))
    i = pick_best(keys)
    return pts[i], keys[i][1]


@dataclass
class DroneState:
    id: int
    position: Point2
    velocity: Vec2 = Vec2(0.0, 0.0)
    mode: Mode = Mode.SWEEP
    path: tuple = ()
    path_cursor: int = 0
    breakpoint: Optional[Breakpoint] = None
    last_count: int = 0
    search_log: list = field(default_factory=list)  # (Point2, raw, new)
    route: tuple = ()
    route_cursor: int = 0
    target: Optional[Point2] = None  # waypoint the drone snaps onto
    pending_paths: list = field(default_factory=list)  # (path, slab) waiting their turn
    sweep_path: Optional[ZigzagPath] = None
    path_slab: Optional[tuple[float, float]] = None  # offset interval the current path sweeps
    best: Optional[tuple[Point2, int]] = None  # baselines: best-known (location, n_d)
    published: int = 0
    searches: list = field(default_factory=list)  # SearchEvent per completed search
    search_heading: float = 0.0
    route_center: Optional[Point2] = None  # where the current search started
    detour: Optional[Point2] = None  # where avoidance pushed the drone off its sweep path
    previous: Optional[Point2] = None  # position one step ago

    @property
    def live(self) -> bool:
        return self.mode is not Mode.FAILED

    @property
    def moving(self) -> bool:
        return self.mode not in (Mode.DONE, Mode.FAILED)


def _toward(p, q, speed: float) -> Vec2:
    dx, dy = q[0] - p[0], q[1] - p[1]
    n = math.hypot(dx, dy)
    return Vec2(dx * speed / n, dy * speed / n)


def integrate(drone: DroneState, dt: float, velocity: Vec2 | None = None) -> None:
    """Explicit Euler step.  Without an override the drone lands on its target
    waypoint when that is within one step."""
    drone.previous = drone.position
    if velocity is None:
        v = drone.velocity
        t = drone.target
        if t is not None and drone.moving and distance(drone.position, t) <= math.hypot(v.dx, v.dy) * dt:
            drone.position = t
            return
    else:
        v = velocity
    drone.position = Point2(drone.position.x + v.dx * dt, drone.position.y + v.dy * dt)


def start_sweep(drone: DroneState, path, slab: tuple[float, float] | None = None) -> None:
    """Put the drone on a new path; it transits unless it already sits at the entry point."""
    if isinstance(path, ZigzagPath):
        drone.sweep_path = path
        path = path.waypoints
    else:
        drone.sweep_path = None
    drone.path_slab = slab
    drone.path = tuple(path)
    drone.path_cursor = 0
    drone.mode = Mode.TRANSIT
    drone.last_count = 0


def _begin_search(drone: DroneState, params: SearchParams, area) -> None:
    """Remember where to resume the sweep and lay out the search arc.

    The arc faces the direction the drone actually moved in during the last
    step, since that is the side users entered the coverage disk from.  A drone
    pushed off its path by collision avoidance resumes from the point where it
    left the path.
    """
    p = drone.position
    resume = drone.detour if drone.detour is not None else p
    v0 = _toward(resume, drone.path[drone.path_cursor], params.speed)
    drone.breakpoint = Breakpoint(resume, v0, drone.path_cursor)
    drone.detour = None
    mx, my = (p.x - drone.previous.x, p.y - drone.previous.y) if drone.previous is not None else (0.0, 0.0)
    if mx == 0.0 and my == 0.0:
        mx, my = v0
    heading = math.atan2(mx, my)
    drone.search_heading = heading
    drone.route_center = p
    drone.route = tuple(arc_samples(p, heading, params.coverage_radius, params.step_length, area))
    drone.route_cursor = 0
    drone.search_log = []
    drone.mode = Mode.SEARCH


def _finish_search(drone: DroneState, board: Blackboard, params: SearchParams, t: float) -> None:
    best = None
    if drone.search_log:
        i = pick_best([(new, raw) for _, raw, new in drone.search_log])
        q, raw, new = drone.search_log[i]
        best = ((new, raw), q)
    if best is not None:
        added = board.publish(best[1], best[0][1], params.coverage_radius, drone.id, t)
        drone.published += added
        centre = drone.route_center
        drone.searches.append(SearchEvent(drone.id, t, centre, drone.search_heading, best[1], best[0][1], added))
    drone.mode = Mode.RETURN
    drone.target = drone.breakpoint.position


def decide_sweep_search(
    drone: DroneState,
    board: Blackboard,
    params: SearchParams,
    area: ConvexPolygon | None = None,
    t: float = 0.0,
) -> None:
    """Sense and run one step of the Transit/Sweep/Search/Return machine; sets velocity and target."""
    r = params.coverage_radius
    v = params.speed
    p = drone.position
    if drone.mode is Mode.FAILED:
        drone.velocity = Vec2(0.0, 0.0)
        drone.target = None
        return

    if drone.mode is Mode.DONE and drone.pending_paths:
        start_sweep(drone, *drone.pending_paths.pop(0))

    if drone.mode is Mode.TRANSIT:
        entry = drone.path[0]
        if distance(p, entry) > _AT:
            drone.velocity = _toward(p, entry, v)
            drone.target = entry
            return
        drone.mode = Mode.SWEEP
        drone.path_cursor = 1
        drone.last_count = 0

    if drone.mode is Mode.SWEEP:
        raw, new = board.sense(p.x, p.y, r)
        path = drone.path
        if drone.detour is not None and distance(p, drone.detour) <= _AT:
            drone.detour = None
        if drone.detour is None:
            while drone.path_cursor < len(path) and distance(p, path[drone.path_cursor]) <= _AT:
                drone.path_cursor += 1
        if drone.path_cursor < len(path) and detect_encounter(drone.last_count, new, p, board, params):
            drone.last_count = new
            _begin_search(drone, params, area)
            return decide_sweep_search(drone, board, params, area, t)
        drone.last_count = new
        if drone.detour is not None:
            drone.velocity = _toward(p, drone.detour, v)
            drone.target = drone.detour
            return
        if drone.path_cursor >= len(path):
            if drone.pending_paths:
                start_sweep(drone, *drone.pending_paths.pop(0))
                return decide_sweep_search(drone, board, params, area, t)
            drone.mode = Mode.DONE
            drone.velocity = Vec2(0.0, 0.0)
            drone.target = None
            return
        wp = path[drone.path_cursor]
        drone.velocity = _toward(p, wp, v)
        drone.target = wp
        return

    if drone.mode is Mode.SEARCH:
        route = drone.route
        while drone.route_cursor < len(route) and distance(p, route[drone.route_cursor]) <= _AT:
            raw, new = board.sense(p.x, p.y, r)
            drone.search_log.append((p, raw, new))
            drone.route_cursor += 1
        if drone.route_cursor < len(route):
            q = route[drone.route_cursor]
            drone.velocity = _toward(p, q, v)
            drone.target = q
            return
        _finish_search(drone, board, params, t)

    if drone.mode is Mode.RETURN:
        bp = drone.breakpoint
        if distance(p, bp.position) > _AT:
            drone.velocity = _toward(p, bp.position, v)
            drone.target = bp.position
            return
        drone.mode = Mode.SWEEP
        drone.path_cursor = bp.path_cursor
        drone.velocity = bp.velocity
        drone.target = drone.path[bp.path_cursor]
        drone.breakpoint = None
        return

    if drone.mode is Mode.DONE:
        drone.velocity = Vec2(0.0, 0.0)
        drone.target = None


def step_sweep_search(
    drone: DroneState,
    board: Blackboard,
    population: UserPopulation,
    params: SearchParams,
    dt: float,
    area: ConvexPolygon | None = None,
    t: float = 0.0,
) -> DroneState:
    """One sense/decide/move step of sweep-and-search (no collision avoidance)."""
    if board.population is None:
        board.population = population
        board.detected_mask = np.zeros(len(population), dtype=bool)
    decide_sweep_search(drone, board, params, area, t)
    integrate(drone, dt)
    return drone


def finalize_deployment(board: Blackboard, n_drones: int) -> list[Point2]:
    """Locations of the top ``n_drones`` candidates (ties keep discovery order)."""
    return [c.location for c in board.candidates[: max(0, n_drones)]]


# --- baselines -------------------------------------------------------------


def _obstacle_normals(area: ConvexPolygon, p, others: Sequence, radius: float) -> list[Vec2]:
    """Unit normals pointing away from everything the coverage disk touches."""
    normals = list(inward_normals_near(area, p, radius))
    for q in others:
        dx, dy = p[0] - q[0], p[1] - q[1]
        d = math.hypot(dx, dy)
        if d <= 2.0 * radius:
            normals.append(Vec2(dx / d, dy / d) if d > 0 else Vec2(1.0, 0.0))
    return normals


def _free_direction(normals: list[Vec2], rng: np.random.Generator, tries: int = 64) -> Vec2:
    """Uniform direction from the half-circle around the combined normal that
    moves away from every obstacle; the combined normal if none is found."""
    sx = sum(n.dx for n in normals)
    sy = sum(n.dy for n in normals)
    s = math.hypot(sx, sy)
    base = math.atan2(sy, sx) if s > 0 else 0.0
    for _ in range(tries):
        a = base + rng.uniform(-math.pi / 2, math.pi / 2)
        u = Vec2(math.cos(a), math.sin(a))
        if all(u.dx * n.dx + u.dy * n.dy >= 0.0 for n in normals):
            return u
    if s > 0:
        return Vec2(sx / s, sy / s)
    return Vec2(math.cos(base), math.sin(base))


def _bounce(drone: DroneState, area, others, params: SearchParams, rng) -> None:
    v = params.speed
    normals = _obstacle_normals(area, drone.position, others, params.coverage_radius)
    vel = drone.velocity
    if any(vel.dx * n.dx + vel.dy * n.dy < 0.0 for n in normals):
        u = _free_direction(normals, rng)
        drone.velocity = Vec2(u.dx * v, u.dy * v)


def _track_best(drone: DroneState, population: UserPopulation, params: SearchParams) -> None:
    p = drone.position
    n = population.count(p.x, p.y, params.coverage_radius)
    if drone.best is None or n > drone.best[1]:
        drone.best = (p, n)
    drone.last_count = n


def random_heading(rng: np.random.Generator, speed: float) -> Vec2:
    a = rng.uniform(0.0, 2.0 * math.pi)
    return Vec2(speed * math.cos(a), speed * math.sin(a))


def decide_random_search(drone, population, params, area, others, rng) -> None:
    """Fly straight; turn into the free side when the coverage disk touches the
    boundary or another drone's disk."""
    if not drone.moving:
        return
    _track_best(drone, population, params)
    if drone.velocity.dx == 0.0 and drone.velocity.dy == 0.0:
        drone.velocity = random_heading(rng, params.speed)
    _bounce(drone, area, others, params, rng)
    drone.target = None


@dataclass(frozen=True)
class AttractiveParams:
    inertia: float = 0.9  # w
    attraction: float = 0.5  # c1
    # attraction switches on once the best-known count exceeds this many users;
    # until then the drone flies like the random searcher
    activation: float = 10.0


def decide_attractive_search(drone, population, params, area, others, rng, coeffs: AttractiveParams = AttractiveParams()) -> None:
    """Blend inertia with a random pull toward the drone's own best-known location."""
    if not drone.moving:
        return
    _track_best(drone, population, params)
    if drone.velocity.dx == 0.0 and drone.velocity.dy == 0.0:
        drone.velocity = random_heading(rng, params.speed)
    r = rng.random()
    if drone.best is not None and drone.best[1] > coeffs.activation:
        bx, by = drone.best[0]
        p = drone.position
        wx = coeffs.inertia * drone.velocity.dx + coeffs.attraction * r * (bx - p.x)
        wy = coeffs.inertia * drone.velocity.dy + coeffs.attraction * r * (by - p.y)
        n = math.hypot(wx, wy)
        if n > 0.0:
            drone.velocity = Vec2(wx * params.speed / n, wy * params.speed / n)
    _bounce(drone, area, others, params, rng)
    drone.target = None


def step_random_search(drone, board, population, params, dt, rng, area=None, others=()) -> DroneState:
    decide_random_search(drone, population, params, area, others, rng)
    if drone.moving:
        integrate(drone, dt)
    return drone


def step_attractive_search(
    drone, board, population, params, dt, rng, area=None, others=(), coeffs: AttractiveParams = AttractiveParams()
) -> DroneState:
    decide_attractive_search(drone, population, params, area, others, rng, coeffs)
    if drone.moving:
        integrate(drone, dt)
    return drone
