import csv
import io
import math
from pathlib import Path

import numpy as np
import pytest

from sweepsearch.cli import (
    ConfigError,
    build_scenario,
    format_config,
    main,
    parse_config,
    resolve_area,
    scenario_config,
)
from sweepsearch.geom import ConvexPolygon, polygon_area

DATA = Path(__file__).parent / "data"

TABLE2 = """\
# reference parameters
area_file = {area}
n_drones = 5
n_clusters = {n_clusters}
r_c_m = 250
r_d_m = 500
lambda_c = 0.02
lambda_nc = 3e-6
eps_th = 10
v_mps = 10
t_s_s = 0.5
d_safe_m = 50
r_s_m = 10
margin_m = 100
u_max_m = 200
algorithm = SweepSearch
duration_s = {duration}
seed = 7
runs = {runs}
"""


def write_config(tmp_path, n_clusters=2, duration=600, runs=1, **extra):
    text = TABLE2.format(area=DATA / "field_10km.txt", n_clusters=n_clusters, duration=duration, runs=runs)
    for k, v in extra.items():
        text += f"{k} = {v}\n"
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return p


def read_plan(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    polys = {}
    for r in rows:
        polys.setdefault(int(r["drone_id"]), []).append((float(r["x"]), float(r["y"])))
    return {k: ConvexPolygon(v) for k, v in polys.items()}


# --- decompose ----------------------------------------------------------------------------


def test_decompose_golden(tmp_path):
    out = tmp_path / "plan.csv"
    assert main(["decompose", str(DATA / "unit_square.txt"), "--proportions", "0.5,0.5", "--out", str(out)]) == 0
    assert out.read_text() == (DATA / "unit_square_halves.csv").read_text()
    polys = read_plan(out.read_text())
    assert [polygon_area(p) for p in polys.values()] == [0.5, 0.5]


def test_decompose_pentagon_five_shares(tmp_path, capsys):
    svg = tmp_path / "plan.svg"
    paths = tmp_path / "paths.csv"
    rc = main(["decompose", str(DATA / "pentagon.txt"), "--drones", "5", "--svg", str(svg),
               "--radius", "500", "--paths", str(paths)])
    assert rc == 0
    polys = read_plan(capsys.readouterr().out)
    total = math.fsum(p.area for p in polys.values())
    assert len(polys) == 5
    for p in polys.values():
        assert p.area == pytest.approx(0.2 * total, rel=1e-6)
    text = svg.read_text()
    assert text.startswith("<svg") and text.count("<polyline") == 5
    assert len(list(csv.DictReader(paths.open()))) > 10


def test_decompose_malformed_polygon(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 0\n10 0\n10 ten\n0 10\n")
    assert main(["decompose", str(bad)]) == 2
    assert f"{bad}:3" in capsys.readouterr().err


def test_decompose_bad_proportions(capsys):
    assert main(["decompose", str(DATA / "unit_square.txt"), "--proportions", "0.5,0.6"]) == 2


def test_missing_file_is_runtime_error(tmp_path, capsys):
    assert main(["decompose", str(tmp_path / "nope.txt")]) == 1


# --- channel -------------------------------------------------------------------------------


def test_channel_table(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["channel", "--env", "urban", "--h-min", "10", "--h-max", "2000", "--h-step", "1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    grid = [(float(r["h_m"]), float(r["r_d_m"])) for r in rows if r["kind"] == "grid"]
    (opt,) = [r for r in rows if r["kind"] == "optimum"]
    h = np.array([g[0] for g in grid])
    r = np.array([g[1] for g in grid])
    k = int(np.argmax(r))
    assert 0 < k < len(r) - 1
    assert np.all(np.diff(r[: k + 1]) >= 0) and np.all(np.diff(r[k:]) <= 0)
    assert abs(float(opt["h_m"]) - h[k]) <= 1.0


def test_channel_rejects_bad_range():
    assert main(["channel", "--h-min", "100", "--h-max", "50"]) == 2


# --- config ---------------------------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfg = parse_config(write_config(tmp_path).read_text())
    again = parse_config(format_config(cfg))
    assert again == cfg
    sc = build_scenario(cfg, resolve_area(cfg))
    assert scenario_config(sc, cfg.area_file, cfg.runs) == cfg
    assert build_scenario(again, resolve_area(again)) == sc


def test_config_echo_cli(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["config", str(path)]) == 0
    assert parse_config(capsys.readouterr().out) == parse_config(path.read_text())


def test_config_defaults_fill_optional_keys():
    cfg = parse_config("area_file = a.txt\nn_drones = 3\nn_clusters = 1\nduration_s = 10\nseed = 1\n")
    assert cfg.r_d_m == 500.0 and cfg.algorithm == "SweepSearch" and cfg.runs == 1


@pytest.mark.parametrize(
    "text,match",
    [
        ("area_file = a\nn_drones = 5\nn_clusters = 2\nduration_s = 1\nseed = 1\ncolour = red\n", "6: unknown key"),
        ("area_file = a\nn_drones = 5\nn_clusters = 2\nseed = 1\n", "missing required keys: duration_s"),
        ("area_file = a\nn_drones = five\n", "2: n_drones expects int"),
        ("area_file = a\narea_file = b\n", "2: duplicate key"),
        ("area_file a\n", "1: expected 'key = value'"),
        ("algorithm = greedy\n", "unknown algorithm"),
        ("r_c_m = nan\n", "r_c_m expects float"),
    ],
)
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text, source="cfg")


def test_unknown_key_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, colour="red")
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_validation_failure_exit_code(tmp_path, capsys):
    path = write_config(tmp_path)
    path.write_text(path.read_text().replace("r_c_m = 250", "r_c_m = 300"))
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "cluster-diameter" in capsys.readouterr().err


# --- simulate / compare -------------------------------------------------------------------------


@pytest.mark.parametrize("n_clusters", [2, 5])
def test_compare_combined_csv(tmp_path, n_clusters):
    path = write_config(tmp_path, n_clusters=n_clusters, duration=300, runs=2)
    out = tmp_path / "out"
    assert main(["compare", str(path), "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "runs.csv").open()))
    assert {r["algorithm"] for r in rows} == {"SweepSearch", "RandomSearch", "AttractiveSearch"}
    # the same run index uses the same seed for every algorithm
    seeds = {(r["algorithm"], r["run"]): r["seed"] for r in rows}
    for run_index in ("0", "1"):
        assert len({seeds[(a, run_index)] for a in ("SweepSearch", "RandomSearch", "AttractiveSearch")}) == 1
    agg = list(csv.DictReader((out / "aggregate.csv").open()))
    assert len(agg) == 3 * 601


def test_simulate_repeat_byte_identical(tmp_path):
    path = write_config(tmp_path, duration=200, runs=2)
    for name in ("a", "b"):
        assert main(["simulate", str(path), "--out", str(tmp_path / name)]) == 0
    for f in ("runs.csv", "aggregate.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_area_file_relative_to_config(tmp_path):
    (tmp_path / "sq.txt").write_text((DATA / "field_10km.txt").read_text())
    path = write_config(tmp_path, duration=10)
    path.write_text(path.read_text().replace(str(DATA / "field_10km.txt"), "sq.txt"))
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 0
