import math

import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from sweepsearch.geom import ConvexPolygon, normalize_vertices, rectangle


def random_convex_polygon(rng: np.random.Generator, n_min: int = 5, n_max: int = 12, scale: float = 1000.0) -> ConvexPolygon:
    """Hull of points on a squashed, jittered circle; between n_min and n_max vertices."""
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        ang = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
        r = scale * rng.uniform(0.5, 1.0, n)
        sx, sy = rng.uniform(0.3, 1.0, 2)
        pts = np.column_stack((sx * r * np.cos(ang), sy * r * np.sin(ang)))
        hull = ConvexHull(pts)
        if len(hull.vertices) < 3:
            continue
        try:
            return normalize_vertices(pts[hull.vertices])
        except ValueError:
            continue


@st.composite
def convex_polygons(draw, n_min=3, n_max=12, scale=1000.0):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_convex_polygon(np.random.default_rng(seed), max(3, n_min), n_max, scale)


def equilateral_triangle(side: float = 1.0) -> ConvexPolygon:
    return ConvexPolygon([(0.0, 0.0), (side, 0.0), (0.5 * side, side * math.sqrt(3.0) / 2.0)])


@pytest.fixture
def unit_square():
    return rectangle(0.0, 0.0, 1.0, 1.0)


@pytest.fixture
def field_10km():
    return rectangle(0.0, 0.0, 10_000.0, 10_000.0)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
