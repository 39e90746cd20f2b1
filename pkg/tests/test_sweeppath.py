import math

import numpy as np
import pytest

from sweepsearch.geom import contains, min_diameter, rectangle, sample_uniform
from sweepsearch.sweeppath import covered_mask, generate_zigzag, lap_count, path_length

from conftest import random_convex_polygon


def sweep_dir(p):
    return min_diameter(p)[0] + math.pi / 2


def full_coverage(p, path, radius, n=10_000, seed=0):
    pts = sample_uniform(p, n, np.random.default_rng(seed))
    return covered_mask(pts, [np.asarray(path.waypoints)], radius)


def test_square_single_lap_through_midline():
    sq = rectangle(0, 0, 1000, 1000)
    zz = generate_zigzag(sq, sweep_dir(sq), 500.0)
    assert zz.n_laps == 1
    assert zz.lap_offsets == pytest.approx((500.0,))
    wps = np.asarray(zz.waypoints)
    assert np.allclose(wps[:, 1], 500.0)
    for corner in sq.vertices:
        d = np.min(np.hypot(*(wps - np.asarray(corner)).T))
        assert d == pytest.approx(500.0)
    assert full_coverage(sq, zz, 500.0).all()


def test_square_two_laps():
    sq = rectangle(0, 0, 1000, 1000)
    zz = generate_zigzag(sq, sweep_dir(sq), 250.0)
    assert zz.lap_offsets == pytest.approx((250.0, 750.0))
    assert zz.lap_spacing == 500.0
    assert full_coverage(sq, zz, 250.0).all()


def test_thin_area_single_lap():
    thin = rectangle(0, 0, 5000, 600)
    zz = generate_zigzag(thin, sweep_dir(thin), 500.0)
    assert zz.n_laps == 1
    assert zz.lap_offsets == pytest.approx((300.0,))


def test_path_length_examples():
    assert path_length([(0, 0), (100, 0)]) == 100.0
    assert path_length([(0, 0), (10, 0), (10, 10), (0, 10), (0, 0)]) == 40.0
    strip = rectangle(0, 0, 10_000, 2_000)
    zz = generate_zigzag(strip, sweep_dir(strip), 500.0)
    assert zz.n_laps == 2
    assert path_length(zz) == pytest.approx(21_000.0)
    with pytest.raises(ValueError):
        path_length([(0, 0)])


def test_zigzag_validation():
    sq = rectangle(0, 0, 1, 1)
    with pytest.raises(ValueError):
        generate_zigzag(sq, 0.0, 0.0)
    with pytest.raises(ValueError):
        generate_zigzag(sq, 0.0, 1.0, overlap=1.0)


def test_overlap_tightens_spacing():
    sq = rectangle(0, 0, 4000, 4000)
    zz = generate_zigzag(sq, sweep_dir(sq), 500.0, overlap=0.2)
    assert zz.lap_spacing == pytest.approx(800.0)
    assert zz.n_laps == lap_count(4000.0, 800.0) == 5


def test_random_areas_fully_covered():
    rng = np.random.default_rng(5)
    for i in range(50):
        p = random_convex_polygon(rng, scale=float(rng.uniform(800, 4000)))
        radius = float(rng.uniform(200, 600))
        zz = generate_zigzag(p, sweep_dir(p), radius)
        assert all(contains(p, q, tol=1e-6) for q in zz.waypoints)
        lo, hi = p.extent(zz.offset_axis)
        assert zz.n_laps == lap_count(hi - lo, 2 * radius)
        assert full_coverage(p, zz, radius, seed=i).all(), f"area {i} not fully covered"


def test_optimal_direction_minimises_laps():
    rng = np.random.default_rng(8)
    for _ in range(30):
        p = random_convex_polygon(rng, scale=3000.0)
        best = generate_zigzag(p, sweep_dir(p), 300.0).n_laps
        for k in range(8):
            other = generate_zigzag(p, k * math.pi / 8, 300.0).n_laps
            assert best <= other


def test_reversed_path():
    sq = rectangle(0, 0, 3000, 3000)
    zz = generate_zigzag(sq, sweep_dir(sq), 500.0)
    rz = zz.reversed()
    assert rz.waypoints == zz.waypoints[::-1]
    assert path_length(rz) == pytest.approx(path_length(zz))


def test_covered_mask_exact_boundary():
    line = np.array([[0.0, 0.0], [10.0, 0.0]])
    pts = np.array([[5.0, 2.0], [5.0, 2.0000001], [12.0, 0.0], [-2.0, 0.0]])
    assert covered_mask(pts, [line], 2.0).tolist() == [True, False, True, True]
