import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sweepsearch.avoid import (
    AvoidanceParams,
    NoRelativeMotion,
    RelativeState,
    closest_approach_time,
    pass_distance,
    plan_avoidance,
    resolve_conflicts,
    steer,
)
from sweepsearch.geom import Vec2

from oracles import conflict_rollouts, orthogonality_residual

P = AvoidanceParams()
finite = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)


def rel(d, c):
    return RelativeState(Vec2(*d), Vec2(*c))


# --- pass distance and closest approach -----------------------------------------


def test_pass_distance_examples():
    assert pass_distance(rel((-10, 0), (2, 0))) == pytest.approx((0.0, 0.0))
    dp = pass_distance(rel((-10, -1), (2, 0)))
    assert dp == pytest.approx((0.0, -1.0))
    # propagate: at t = 5 the relative position is the pass vector
    assert (-10 + 2 * 5, -1 + 0 * 5) == pytest.approx(dp)
    assert pass_distance(rel((0, 3), (5, 0))) == pytest.approx((0.0, 3.0))


def test_closest_approach_examples():
    r = rel((-10, 0), (2, 0))
    tau = closest_approach_time(r)
    assert tau == 5.0
    assert (r.d.dx + r.c.dx * tau, r.d.dy + r.c.dy * tau) == pytest.approx(tuple(pass_distance(r)))
    assert closest_approach_time(rel((10, 0), (2, 0))) == -5.0
    assert closest_approach_time(rel((0, 3), (5, 0))) == 0.0


def test_zero_relative_velocity_signals():
    with pytest.raises(NoRelativeMotion):
        pass_distance(rel((1, 1), (0, 0)))
    with pytest.raises(NoRelativeMotion):
        closest_approach_time(rel((1, 1), (0, 0)))


def test_orthogonality_10k_states():
    assert orthogonality_residual(10_000, pass_distance, rel) <= 1e-9


def test_tau_minimises_sampled_separation():
    rng = np.random.default_rng(2)
    for _ in range(2000):
        d = rng.uniform(-2000, 2000, 2)
        c = rng.uniform(-30, 30, 2)
        tau = closest_approach_time(rel(d, c))
        best = math.hypot(*(d + c * tau))
        ts = np.linspace(tau - 200, tau + 200, 801)
        seps = np.hypot(d[0] + c[0] * ts, d[1] + c[1] * ts)
        assert best <= seps.min() + 1e-9 * max(1.0, best)
        assert best == pytest.approx(math.hypot(*pass_distance(rel(d, c))), rel=1e-9, abs=1e-9)


# --- planning ------------------------------------------------------------------------


def test_separating_pair_not_corrected():
    assert plan_avoidance(((0, 0), (-10, 0)), ((10, 0), (10, 0)), P) is None


def test_far_miss_not_corrected():
    assert plan_avoidance(((0, 0), (10, 0)), ((500, 80), (-10, 0)), P) is None


def test_head_on_split_and_direction():
    a = ((-100.0, 0.0), (10.0, 0.0))
    b = ((100.0, 0.0), (-10.0, 0.0))
    ua, ub = plan_avoidance(a, b, P)
    tau = 10.0
    vsa = (ua[0] - 10.0 * tau, ua[1])
    vsb = (ub[0] + 10.0 * tau, ub[1])
    # c = (20, 0); its left perpendicular is +y
    assert vsa == pytest.approx((0.0, 50.0))
    assert vsb == pytest.approx((0.0, -50.0))
    assert math.hypot(*vsa) + math.hypot(*vsb) == pytest.approx(P.target_margin)


def test_speed_proportional_split():
    a = ((-100.0, -10.0), (10.0, 0.0))
    b = ((50.0, 0.0), (-5.0, 0.0))
    ua, ub = plan_avoidance(a, b, P)
    tau = 10.0
    vsa = np.subtract(ua, (10.0 * tau, 0.0))
    vsb = np.subtract(ub, (-5.0 * tau, 0.0))
    assert np.linalg.norm(vsa) == pytest.approx(100.0 * 5 / 15)
    assert np.linalg.norm(vsb) == pytest.approx(100.0 * 10 / 15)
    # A passes below B already, so A is pushed further down
    assert vsa[1] < 0 < vsb[1]


def test_correction_clamped():
    params = AvoidanceParams(max_correction=60.0)
    ua, ub = plan_avoidance(((-200, 0), (10, 0)), ((200, 0), (-10, 0)), params)
    assert math.hypot(*ua) == pytest.approx(60.0)
    assert math.hypot(*ub) == pytest.approx(60.0)


def test_identical_velocities():
    assert plan_avoidance(((0, 0), (10, 0)), ((100, 0), (10, 0)), P) is None
    ua, ub = plan_avoidance(((0, 0), (10, 0)), ((30, 0), (10, 0)), P)
    assert ua == pytest.approx((-50.0, 0.0))
    assert ub == pytest.approx((50.0, 0.0))
    ua, ub = plan_avoidance(((0, 0), (0, 0)), ((0, 0), (0, 0)), P)
    assert all(math.isfinite(x) for x in (*ua, *ub))


@settings(max_examples=300, deadline=None)
@given(finite, finite, st.floats(-30, 30), st.floats(-30, 30), st.floats(-30, 30), st.floats(-30, 30))
def test_planning_always_finite(dx, dy, vax, vay, vbx, vby):
    out = plan_avoidance(((0.0, 0.0), (vax, vay)), ((dx, dy), (vbx, vby)), P)
    if out is not None:
        for u in out:
            assert all(math.isfinite(x) for x in u)
            assert math.hypot(*u) <= P.max_correction * (1 + 1e-12)


def test_horizon_defers_distant_conflicts():
    a = ((-1000.0, 0.0), (10.0, 0.0))
    b = ((1000.0, 0.0), (-10.0, 0.0))
    assert plan_avoidance(a, b, P) is None  # tau = 100 s
    assert plan_avoidance(a, b, AvoidanceParams(horizon=200.0)) is not None


@pytest.mark.parametrize(
    "kw", [dict(safe_distance=20.0), dict(target_margin=0.0), dict(max_correction=-1.0), dict(horizon=0.0)]
)
def test_params_validation(kw):
    with pytest.raises(ValueError):
        AvoidanceParams(**kw)


def test_steer():
    assert steer(Vec2(3.0, 4.0), 10.0) == pytest.approx((6.0, 8.0))
    assert steer(Vec2(0.0, 0.0), 10.0) == (0.0, 0.0)


# --- multi-drone resolution ------------------------------------------------------------


def test_nearest_conflict_first_and_one_manoeuvre_each():
    # 0-1 head-on at 120 m and 0-2 crossing at 141 m; 1-2 miss by 57 m
    states = {
        0: ((0.0, 0.0), (10.0, 0.0)),
        1: ((120.0, 0.0), (-10.0, 0.0)),
        2: ((100.0, -100.0), (0.0, 10.0)),
    }
    assert plan_avoidance(states[0], states[2], P) is not None
    assert plan_avoidance(states[1], states[2], P) is None
    out = resolve_conflicts(states, P, {k: 10.0 for k in states})
    assert set(out) == {0, 1}
    ua, ub = plan_avoidance(states[0], states[1], P)
    assert out[0] == pytest.approx(tuple(steer(ua, 10.0)))
    assert out[1] == pytest.approx(tuple(steer(ub, 10.0)))


def test_no_conflict_no_override():
    states = {0: ((0.0, 0.0), (10.0, 0.0)), 1: ((0.0, 1000.0), (10.0, 0.0))}
    assert resolve_conflicts(states, P, {0: 10.0, 1: 10.0}) == {}


# --- kinematic rollouts --------------------------------------------------------------------


def test_conflict_rollouts_keep_safe_distance():
    # default params: r_s 10 m, d_safe 50 m, margin 100 m, u_max 200 m, horizon 30 s;
    # geometry family documented in oracles.conflict_rollouts
    closest = conflict_rollouts(1000, P)
    assert min(closest) >= P.safe_distance, f"closest approach {min(closest):.3f} m"
