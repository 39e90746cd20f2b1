"""Command-line entry point: decompose, channel, simulate, compare, config."""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import channel as ch
from .avoid import AvoidanceParams
from .controllers import SearchParams
from .decomp import DecompositionPlan, decompose, uniform_proportions
from .engine import (
    Algorithm,
    EnsembleResult,
    Scenario,
    ScenarioError,
    aggregate_csv,
    crossing_time,
    ensemble,
    runs_csv,
)
from .geom import ConvexPolygon, bearing_vector, load_polygon
from .sweeppath import generate_zigzag
from .users import PopulationSpec

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    """Flat key/value run configuration; field names are the file keys."""

    area_file: str
    n_drones: int
    n_clusters: int
    duration_s: float
    seed: int
    r_c_m: float = 250.0
    r_d_m: float = 500.0
    lambda_c: float = 0.02
    lambda_nc: float = 3e-6
    eps_th: float = 10.0
    v_mps: float = 10.0
    t_s_s: float = 0.5
    d_safe_m: float = 50.0
    r_s_m: float = 10.0
    margin_m: float = 100.0
    u_max_m: float = 200.0
    algorithm: str = Algorithm.SWEEP.value
    runs: int = 1


REQUIRED_KEYS = ("area_file", "n_drones", "n_clusters", "duration_s", "seed")
_TYPES = {f.name: f.type for f in fields(Config)}


def _convert(key: str, value: str, where: str):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            x = float(value)
            if not math.isfinite(x):
                raise ValueError
            return x
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {kind}, got {value!r}") from None
    if key == "algorithm":
        try:
            return Algorithm.parse(value).value
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return value


def parse_config(text: str, source: str = "<config>") -> Config:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _convert(key, value, where)
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")
    return Config(**values)


def format_config(cfg: Config) -> str:
    out = []
    for f in fields(Config):
        v = getattr(cfg, f.name)
        out.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
    return "\n".join(out) + "\n"


def load_config(path) -> Config:
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))


def resolve_area(cfg: Config, base_dir=None) -> ConvexPolygon:
    p = Path(cfg.area_file)
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    return load_polygon(p)


def build_scenario(cfg: Config, area: ConvexPolygon) -> Scenario:
    try:
        pop = PopulationSpec(cfg.n_clusters, cfg.r_c_m, cfg.lambda_c, cfg.lambda_nc, area)
        params = SearchParams(cfg.eps_th, cfg.t_s_s, cfg.v_mps, cfg.r_d_m)
        avoid = AvoidanceParams(cfg.r_s_m, cfg.d_safe_m, cfg.margin_m, cfg.u_max_m)
        return Scenario(
            area,
            pop,
            n_drones=cfg.n_drones,
            params=params,
            avoidance=avoid,
            algorithm=Algorithm.parse(cfg.algorithm),
            duration=cfg.duration_s,
            seed=cfg.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def scenario_config(sc: Scenario, area_file: str, runs: int = 1) -> Config:
    """Inverse of :func:`build_scenario` for the keys a config file can express."""
    ps, sp, av = sc.population_spec, sc.params, sc.avoidance
    return Config(
        area_file=area_file,
        n_drones=sc.n_drones,
        n_clusters=ps.n_clusters,
        duration_s=sc.duration,
        seed=sc.seed,
        r_c_m=ps.cluster_radius,
        r_d_m=sp.coverage_radius,
        lambda_c=ps.clustered_density,
        lambda_nc=ps.background_density,
        eps_th=sp.epsilon_threshold,
        v_mps=sp.speed,
        t_s_s=sp.sample_time,
        d_safe_m=av.safe_distance,
        r_s_m=av.shared_location_radius,
        margin_m=av.target_margin,
        u_max_m=av.max_correction,
        algorithm=sc.algorithm.value,
        runs=runs,
    )


def plan_csv(plan: DecompositionPlan) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("drone_id", "proportion", "area_m2", "vertex", "x", "y"))
    for sub in plan.sub_areas:
        for k, v in enumerate(sub.polygon.vertices):
            w.writerow([sub.drone_id, repr(sub.proportion), repr(sub.polygon.area), k, repr(v.x), repr(v.y)])
    return buf.getvalue()


_PALETTE = ("#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5")


def plan_svg(plan: DecompositionPlan, paths=(), width: int = 800) -> str:
    """Sub-areas as filled polygons with optional zigzag polylines on top."""
    x0, y0, x1, y1 = plan.parent.bounds
    span = max(x1 - x0, y1 - y0) or 1.0
    pad = 0.02 * span
    scale = width / (span + 2 * pad)
    height = int(math.ceil((y1 - y0 + 2 * pad) * scale))

    def xy(p):
        return (p[0] - x0 + pad) * scale, (y1 - p[1] + pad) * scale

    def pt(p):
        u, v = xy(p)
        return f"{u:.2f},{v:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    for sub in plan.sub_areas:
        colour = _PALETTE[sub.drone_id % len(_PALETTE)]
        pts = " ".join(pt(v) for v in sub.polygon.vertices)
        out.append(f'<polygon points="{pts}" fill="{colour}" stroke="#333" stroke-width="1"/>')
    for path in paths:
        pts = " ".join(pt(v) for v in path)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#000" stroke-width="0.8"/>')
    pts = " ".join(pt(v) for v in plan.parent.vertices)
    out.append(f'<polygon points="{pts}" fill="none" stroke="#000" stroke-width="2"/>')
    # sweep-direction arrow from the centroid
    c = plan.parent.centroid
    t = bearing_vector(plan.sweep_direction)
    n = t.left_perp()
    L = 0.15 * span
    tip = (c.x + L * t.dx, c.y + L * t.dy)
    head = [
        tip,
        (tip[0] - 0.2 * L * t.dx + 0.1 * L * n.dx, tip[1] - 0.2 * L * t.dy + 0.1 * L * n.dy),
        (tip[0] - 0.2 * L * t.dx - 0.1 * L * n.dx, tip[1] - 0.2 * L * t.dy - 0.1 * L * n.dy),
    ]
    (u0, v0), (u1, v1) = xy(c), xy(tip)
    out.append(f'<line x1="{u0:.2f}" y1="{v0:.2f}" x2="{u1:.2f}" y2="{v1:.2f}" stroke="#c00" stroke-width="3"/>')
    out.append(f'<polygon points="{" ".join(pt(p) for p in head)}" fill="#c00"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def paths_csv(paths) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("drone_id", "waypoint", "x", "y"))
    for i, path in enumerate(paths):
        for k, v in enumerate(path):
            w.writerow([i, k, repr(v[0]), repr(v[1])])
    return buf.getvalue()


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _proportions(text: str | None, n: int | None) -> list[float]:
    if text:
        try:
            return [float(x) for x in text.split(",")]
        except ValueError:
            raise ConfigError(f"bad proportions {text!r}") from None
    return uniform_proportions(n or 1)


def cmd_decompose(args) -> int:
    area = load_polygon(args.polygon)
    plan = decompose(area, _proportions(args.proportions, args.drones))
    _write(args.out, plan_csv(plan))
    paths = []
    if args.radius:
        paths = [list(generate_zigzag(s.polygon, plan.sweep_direction, args.radius).waypoints) for s in plan.sub_areas]
    elif args.paths:
        raise ConfigError("--paths needs --radius")
    if args.paths:
        _write(args.paths, paths_csv(paths))
    if args.svg:
        _write(args.svg, plan_svg(plan, paths))
    return EXIT_OK


def cmd_channel(args) -> int:
    env = ch.PRESETS[args.env]
    cfg = ch.ChannelConfig(carrier_frequency=args.fc, loss_threshold=args.lth)
    if not (0 < args.h_min < args.h_max and args.h_step > 0):
        raise ConfigError("need 0 < h-min < h-max and h-step > 0")
    n = int(math.floor((args.h_max - args.h_min) / args.h_step + 1e-9)) + 1
    heights = [args.h_min + i * args.h_step for i in range(n)]
    h_star, r_star = ch.optimal_altitude(env, cfg, args.h_min, args.h_max)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("kind", "h_m", "r_d_m"))
    for h, r in ch.radius_table(env, cfg, heights):
        w.writerow(["grid", repr(h), repr(r)])
    w.writerow(["optimum", repr(h_star), repr(r_star)])
    _write(args.out, buf.getvalue())
    return EXIT_OK


def _load_scenario(path):
    cfg = load_config(path)
    area = resolve_area(cfg, os.path.dirname(os.path.abspath(path)))
    sc = build_scenario(cfg, area)
    check = sc.check()
    for d in check.warnings:
        print(f"warning: {d.code}: {d.message}", file=sys.stderr)
    if not check.ok:
        raise ScenarioError(check)
    return cfg, sc


def _ensembles(sc: Scenario, algorithms, runs: int, workers: int) -> list[EnsembleResult]:
    return [ensemble(replace(sc, algorithm=a), runs, sc.seed, workers=workers) for a in algorithms]


def _emit(ensembles: list[EnsembleResult], out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(i, r) for ens in ensembles for i, r in enumerate(ens.results)]
    (out / "runs.csv").write_text(runs_csv(rows))
    (out / "aggregate.csv").write_text(aggregate_csv(ensembles))


def cmd_simulate(args) -> int:
    cfg, sc = _load_scenario(args.config)
    ens = _ensembles(sc, [sc.algorithm], args.runs or cfg.runs, args.workers)
    _emit(ens, args.out)
    e = ens[0]
    print(f"{e.algorithm.value}: {len(e.results)} runs, mean served at end {e.mean[-1]:.1f}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg, sc = _load_scenario(args.config)
    ens = _ensembles(sc, list(Algorithm), args.runs or cfg.runs, args.workers)
    _emit(ens, args.out)
    lead, others = ens[0], ens[1:]
    t = crossing_time(lead.mean, [o.mean for o in others], lead.times)
    for e in ens:
        print(f"{e.algorithm.value}: mean served at end {e.mean[-1]:.1f}", file=sys.stderr)
    print(f"crossing time: {'never' if t is None else f'{t:g} s'}", file=sys.stderr)
    return EXIT_OK


def cmd_config(args) -> int:
    cfg = load_config(args.config)
    _write(args.out, format_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sweepsearch", description="Sweep-and-search placement of drone base stations.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="split a convex polygon into proportional sub-areas")
    p.add_argument("polygon", help="polygon file, one 'x y' vertex per line")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--proportions", help="comma-separated proportions summing to 1")
    g.add_argument("--drones", type=int, help="equal split among this many drones")
    p.add_argument("--out", default="-", help="plan CSV (default stdout)")
    p.add_argument("--svg", help="also write an SVG drawing")
    p.add_argument("--radius", type=float, help="coverage radius for zigzag paths (drawn in the SVG)")
    p.add_argument("--paths", help="write zigzag waypoints as CSV (needs --radius)")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("channel", help="coverage radius versus altitude")
    p.add_argument("--env", choices=sorted(ch.PRESETS), default="urban")
    p.add_argument("--fc", type=float, default=2.0e9, help="carrier frequency, Hz")
    p.add_argument("--lth", type=float, default=100.0, help="path-loss threshold, dB")
    p.add_argument("--h-min", type=float, default=10.0)
    p.add_argument("--h-max", type=float, default=3000.0)
    p.add_argument("--h-step", type=float, default=10.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_channel)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run the configured algorithm"),
        ("compare", cmd_compare, "run all three algorithms on the same seeds"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.add_argument("--out", default="out", help="output directory for runs.csv and aggregate.csv")
        p.add_argument("--runs", type=int, help="override the config's run count")
        p.add_argument("--workers", type=int, default=1, help="parallel processes")
        p.set_defaults(func=func)

    p = sub.add_parser("config", help="echo a config in canonical form")
    p.add_argument("config")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_config)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        # ConfigError, ScenarioError and polygon parse errors all land here
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
