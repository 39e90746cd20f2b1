"""Deterministic time-stepped simulation, served-user metric, ensembles and CSV output."""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .avoid import AvoidanceParams, resolve_conflicts
from .controllers import (
    AttractiveParams,
    Blackboard,
    Candidate,
    DroneState,
    Mode,
    SearchParams,
    decide_attractive_search,
    decide_random_search,
    decide_sweep_search,
    integrate,
    random_heading,
    start_sweep,
)
from .decomp import DecompositionPlan, decompose, reassign_on_failure, uniform_proportions
from .geom import ConvexPolygon, Disk, Point2, Vec2, distance, sample_uniform, slab
from .sweeppath import covered_mask, generate_zigzag
from .users import PopulationSpec, ScenarioCheck, UserPopulation, generate, validate_scenario

CSV_HEADER = ("algorithm", "run", "seed", "t_s", "served_users", "n_candidates", "min_sep_m")


class Algorithm(enum.Enum):
    SWEEP = "SweepSearch"
    RANDOM = "RandomSearch"
    ATTRACTIVE = "AttractiveSearch"

    @classmethod
    def parse(cls, text: str) -> "Algorithm":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for a in cls:
            if a.value.lower() == key or a.value.lower().replace("search", "") == key:
                return a
        raise ValueError(f"unknown algorithm {text!r}; expected one of {[a.value for a in cls]}")


class ScenarioError(ValueError):
    def __init__(self, check: ScenarioCheck):
        self.check = check
        super().__init__("; ".join(f"{d.code}: {d.message}" for d in check.errors))


@dataclass(frozen=True)
class Failure:
    drone_id: int
    time: float


@dataclass(frozen=True)
class Scenario:
    area: ConvexPolygon
    population_spec: PopulationSpec
    n_drones: int = 5
    params: SearchParams = SearchParams()
    avoidance: AvoidanceParams = AvoidanceParams()
    surviving_bs: tuple[Disk, ...] = ()
    algorithm: Algorithm = Algorithm.SWEEP
    duration: float = 3600.0
    seed: int = 0
    proportions: Optional[tuple[float, ...]] = None
    suppression: str = "users"
    attractive: AttractiveParams = AttractiveParams()
    failures: tuple[Failure, ...] = ()
    double_count: bool = False
    blur_positions: bool = False
    coverage_samples: int = 10_000

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.n_drones < 1:
            raise ValueError("need at least one drone")
        if self.proportions is not None and len(self.proportions) != self.n_drones:
            raise ValueError("one proportion per drone")

    def check(self) -> ScenarioCheck:
        return validate_scenario(self.population_spec, self.n_drones, self.params.coverage_radius)

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.duration / self.params.sample_time - 1e-9))


@dataclass(frozen=True)
class Sample:
    t: float
    served_users: int
    n_candidates: int
    min_separation: float


@dataclass
class RunResult:
    algorithm: Algorithm
    seed: int
    time_series: list[Sample]
    final_deployment: list[Point2]
    min_pairwise_separation: float
    swept_fraction: float
    candidates: list[Candidate] = field(default_factory=list)
    trajectories: list[np.ndarray] = field(default_factory=list)
    diagnostics: ScenarioCheck = field(default_factory=ScenarioCheck)
    plan: Optional[DecompositionPlan] = None
    searches: list = field(default_factory=list)

    @property
    def final_served(self) -> int:
        return self.time_series[-1].served_users

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.time_series])

    @property
    def served(self) -> np.ndarray:
        return np.array([s.served_users for s in self.time_series])


def _ranked(candidates) -> list[tuple[Point2, int]]:
    out = []
    for c in candidates:
        if isinstance(c, Candidate):
            out.append((c.location, c.served))
        else:
            out.append((Point2(*c[0]), int(c[1])))
    # stable: equal counts keep their given order
    out.sort(key=lambda c: -c[1])
    return out


def served_users(candidates, n_drones: int, population: UserPopulation, coverage_radius: float, double_count: bool = False) -> int:
    """Distinct users inside the union of the top ``n_drones`` candidate disks."""
    top = _ranked(candidates)[: max(0, n_drones)]
    if not top:
        return 0
    if double_count:
        return sum(population.count(p.x, p.y, coverage_radius) for p, _ in top)
    mask = np.zeros(len(population), dtype=bool)
    for p, _ in top:
        population.mark(mask, p.x, p.y, coverage_radius)
    return int(np.count_nonzero(mask))


def scenario_population(scenario: Scenario) -> UserPopulation:
    """The user population a run of ``scenario`` sees (depends on the seed only)."""
    return generate(scenario.population_spec, scenario.seed, cell_size=scenario.params.coverage_radius)


def _min_separation(drones: Sequence[DroneState]) -> float:
    pts = [d.position for d in drones if d.live]
    best = math.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = min(best, distance(pts[i], pts[j]))
    return best


class _Run:
    def __init__(self, scenario: Scenario, keep_trajectories: bool):
        sc = self.sc = scenario
        self.check = sc.check()
        if not self.check.ok:
            raise ScenarioError(self.check)
        self.params = sc.params
        self.pop = scenario_population(sc)
        self.rng = np.random.default_rng([sc.seed, 1])
        self.board = Blackboard(self.pop, suppression=sc.suppression, surviving=sc.surviving_bs)
        self.keep = keep_trajectories
        self.plan: Optional[DecompositionPlan] = None
        self.slabs: dict[int, tuple[float, float]] = {}
        self.drones = self._place()
        self.held: dict[int, Vec2] = {}
        self.traj = [[d.position] for d in self.drones]
        self._served_key = None
        self._served_val = 0
        self.best_served = -1
        self.best_deployment: list[Point2] = []
        self.samples: list[Sample] = []
        self.min_sep = math.inf

    # -- setup -------------------------------------------------------------

    def _place(self) -> list[DroneState]:
        sc = self.sc
        if sc.algorithm is Algorithm.SWEEP:
            props = sc.proportions or uniform_proportions(sc.n_drones)
            self.plan = decompose(sc.area, props)
            drones = []
            for sub in self.plan.sub_areas:
                zz = generate_zigzag(sub.polygon, self.plan.sweep_direction, self.params.coverage_radius)
                d = DroneState(sub.drone_id, zz.waypoints[0])
                start_sweep(d, zz, (sub.lo, sub.hi))
                self.slabs[d.id] = (sub.lo, sub.hi)
                drones.append(d)
            return drones
        drones = []
        placed: list[Point2] = []
        while len(placed) < sc.n_drones:
            q = sample_uniform(sc.area, 1, self.rng)[0]
            q = Point2(float(q[0]), float(q[1]))
            if all(distance(q, p) > sc.avoidance.safe_distance for p in placed):
                placed.append(q)
        for i, q in enumerate(placed):
            drones.append(DroneState(i, q, velocity=random_heading(self.rng, self.params.speed), mode=Mode.SWEEP))
        return drones

    # -- failures ----------------------------------------------------------

    def _fail(self, drone: DroneState) -> None:
        pending = list(drone.pending_paths)
        was_done = drone.mode is Mode.DONE
        was_transit = drone.mode is Mode.TRANSIT
        cursor = drone.breakpoint.path_cursor if drone.breakpoint is not None else drone.path_cursor
        zz = drone.sweep_path
        drone.mode = Mode.FAILED
        drone.velocity = Vec2(0.0, 0.0)
        drone.target = None
        drone.breakpoint = None
        drone.pending_paths = []
        if self.sc.algorithm is not Algorithm.SWEEP or self.plan is None:
            return
        jobs = []
        if not was_done and zz is not None and drone.id in self.slabs:
            lo, hi = drone.path_slab or self.slabs[drone.id]
            half = 0.5 * zz.lap_spacing
            passed = max(0, cursor - 1)
            lap = max([k for k, s in enumerate(zz.lap_starts) if s <= passed] or [0])
            off = zz.lap_offsets[lap]
            increasing = zz.lap_offsets[0] <= zz.lap_offsets[-1]
            if increasing:
                lo = lo if was_transit else max(lo, off - half)
            elif not was_transit:
                hi = min(hi, off + half)
            if hi - lo > 1e-6:
                jobs.append((lo, hi))
        for entry in pending:
            jobs.append(entry[1])
        for lo, hi in jobs:
            self._hand_over(drone.id, lo, hi)

    def _hand_over(self, failed_id: int, lo: float, hi: float) -> None:
        plan = self.plan
        poly = slab(plan.parent, plan.axis, lo, hi)
        try:
            self.plan = reassign_on_failure(plan, failed_id, poly)
        except ValueError:
            return
        heir_id = self.plan.sub_areas[-1].drone_id
        heir = self.drones[heir_id]
        zz = generate_zigzag(poly, plan.sweep_direction, self.params.coverage_radius)
        here = heir.path[-1] if heir.path else heir.position
        if distance(here, zz.waypoints[-1]) < distance(here, zz.waypoints[0]):
            zz = zz.reversed()
        heir.pending_paths.append((zz, (lo, hi)))

    # -- stepping ----------------------------------------------------------

    def _decide(self, t: float) -> None:
        sc, params = self.sc, self.params
        for d in self.drones:
            if not d.live:
                continue
            if sc.algorithm is Algorithm.SWEEP:
                before = d.sweep_path
                decide_sweep_search(d, self.board, params, sc.area, t)
                if d.sweep_path is not before and d.path_slab is not None:
                    self.slabs[d.id] = d.path_slab
                continue
            others = [o.position for o in self.drones if o.live and o.id != d.id]
            if sc.algorithm is Algorithm.RANDOM:
                decide_random_search(d, self.pop, params, sc.area, others, self.rng)
            else:
                decide_attractive_search(d, self.pop, params, sc.area, others, self.rng, sc.attractive)

    def _avoid(self) -> dict[int, Vec2]:
        sc = self.sc
        live = [d for d in self.drones if d.live]
        states = {}
        for d in live:
            p = d.position
            if sc.blur_positions:
                r = sc.avoidance.shared_location_radius * math.sqrt(self.rng.random())
                a = self.rng.uniform(0.0, 2.0 * math.pi)
                p = Point2(p.x + r * math.cos(a), p.y + r * math.sin(a))
            states[d.id] = (p, d.velocity)
        speeds = {d.id: self.params.speed for d in live}
        held = {k: v for k, v in self.held.items() if k in states}
        self.held = resolve_conflicts(states, sc.avoidance, speeds, held)
        return self.held

    def _candidates(self):
        if self.sc.algorithm is Algorithm.SWEEP:
            return [(c.location, c.served) for c in self.board.candidates]
        return [d.best for d in self.drones if d.best is not None]

    def _record(self, t: float) -> None:
        cands = self._candidates()
        n_live = sum(1 for d in self.drones if d.live)
        top = _ranked(cands)[:n_live]
        key = tuple(top)
        if key != self._served_key:
            self._served_key = key
            self._served_val = served_users(top, n_live, self.pop, self.params.coverage_radius, self.sc.double_count)
        if self._served_val > self.best_served:
            self.best_served = self._served_val
            self.best_deployment = [p for p, _ in top]
        sep = _min_separation(self.drones)
        self.min_sep = min(self.min_sep, sep)
        self.samples.append(Sample(t, self.best_served, len(cands), sep))

    def run(self) -> RunResult:
        sc = self.sc
        dt = self.params.sample_time
        failures = sorted(sc.failures, key=lambda f: (f.time, f.drone_id))
        fi = 0
        self._record(0.0)
        for k in range(sc.n_steps):
            t = k * dt
            while fi < len(failures) and failures[fi].time <= t:
                f = failures[fi]
                fi += 1
                if 0 <= f.drone_id < len(self.drones) and self.drones[f.drone_id].live:
                    self._fail(self.drones[f.drone_id])
            self._decide(t)
            overrides = self._avoid()
            for d in self.drones:
                if d.live:
                    if d.id in overrides and d.mode is Mode.SWEEP and d.detour is None:
                        d.detour = d.position
                    integrate(d, dt, overrides.get(d.id))
                    if self.keep or sc.algorithm is Algorithm.SWEEP:
                        self.traj[d.id].append(d.position)
            self._record((k + 1) * dt)
        return self._result()

    def _result(self) -> RunResult:
        sc = self.sc
        mc = np.random.default_rng([sc.seed, 2])
        pts = sample_uniform(sc.area, sc.coverage_samples, mc)
        lines = [np.asarray(t, dtype=float) for t in self.traj]
        frac = float(np.mean(covered_mask(pts, lines, self.params.coverage_radius)))
        cands = list(self.board.candidates) if sc.algorithm is Algorithm.SWEEP else [
            Candidate(d.best[0], d.best[1], d.id) for d in self.drones if d.best is not None
        ]
        return RunResult(
            algorithm=sc.algorithm,
            seed=sc.seed,
            time_series=self.samples,
            final_deployment=self.best_deployment,
            min_pairwise_separation=self.min_sep,
            swept_fraction=frac,
            candidates=cands,
            trajectories=lines if self.keep else [],
            diagnostics=self.check,
            plan=self.plan,
            searches=sorted((e for d in self.drones for e in d.searches), key=lambda e: (e.time, e.drone_id)),
        )


def run(scenario: Scenario, keep_trajectories: bool = True) -> RunResult:
    """Simulate one scenario.  Identical scenarios give identical results."""
    return _Run(scenario, keep_trajectories).run()


@dataclass
class EnsembleResult:
    algorithm: Algorithm
    base_seed: int
    times: np.ndarray
    per_run: np.ndarray  # (n_runs, n_samples) served users
    results: list[RunResult]

    @property
    def mean(self) -> np.ndarray:
        return self.per_run.mean(axis=0)

    @property
    def seeds(self) -> list[int]:
        return [r.seed for r in self.results]


def _run_quiet(scenario: Scenario) -> RunResult:
    return run(scenario, keep_trajectories=False)


def ensemble(scenario: Scenario, n_runs: int, base_seed: int, workers: int = 1) -> EnsembleResult:
    """``n_runs`` runs with seeds ``base_seed + i``; each run draws its own population."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    scs = [replace(scenario, seed=base_seed + i) for i in range(n_runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_quiet, scs))
    else:
        results = [_run_quiet(s) for s in scs]
    return EnsembleResult(
        scenario.algorithm,
        base_seed,
        results[0].times,
        np.vstack([r.served for r in results]),
        results,
    )


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def runs_csv(rows: Sequence[tuple[int, RunResult]]) -> str:
    """One row per sample per run: ``rows`` are ``(run_index, result)`` pairs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for run_index, res in rows:
        for s in res.time_series:
            w.writerow([res.algorithm.value, run_index, res.seed, _fmt(s.t), s.served_users, s.n_candidates, _fmt(s.min_separation)])
    return buf.getvalue()


def aggregate_csv(ensembles: Sequence[EnsembleResult]) -> str:
    """Mean served users per (algorithm, t_s)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("algorithm", "t_s", "mean_served_users", "n_runs"))
    for ens in ensembles:
        mean = ens.mean
        for t, m in zip(ens.times, mean):
            w.writerow([ens.algorithm.value, _fmt(t), _fmt(m), len(ens.results)])
    return buf.getvalue()


def crossing_time(lead: np.ndarray, others: Sequence[np.ndarray], times: np.ndarray) -> Optional[float]:
    """Earliest time after which ``lead`` stays >= every curve in ``others``; None if never."""
    ok = np.all([lead >= o for o in others], axis=0)
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    i = 0 if len(bad) == 0 else bad[-1] + 1
    return float(times[i])
