"""Pairwise collision avoidance from the point of closest approach."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geom import Vec2


class NoRelativeMotion(ValueError):
    """Relative velocity is zero, so closest approach is undefined."""


@dataclass(frozen=True)
class RelativeState:
    d: Vec2  # position(A) - position(B)
    c: Vec2  # velocity(A) - velocity(B)

    @classmethod
    def of(cls, pos_a, vel_a, pos_b, vel_b) -> "RelativeState":
        return cls(Vec2(pos_a[0] - pos_b[0], pos_a[1] - pos_b[1]), Vec2(vel_a[0] - vel_b[0], vel_a[1] - vel_b[1]))


@dataclass(frozen=True)
class AvoidanceParams:
    shared_location_radius: float = 10.0  # r_s
    safe_distance: float = 50.0  # d_safe
    target_margin: float = 100.0  # d*_margin
    max_correction: float = 200.0  # u_max
    # conflicts further ahead than this many seconds are left for later steps
    horizon: float = 30.0

    def __post_init__(self):
        if not self.safe_distance > 2.0 * self.shared_location_radius:
            raise ValueError("safe distance must exceed twice the shared-location radius")
        if not self.target_margin > 0:
            raise ValueError("target margin must be positive")
        if not self.max_correction > 0:
            raise ValueError("max correction must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


def _cc(rel: RelativeState) -> float:
    cc = rel.c.dx * rel.c.dx + rel.c.dy * rel.c.dy
    if cc == 0.0:
        raise NoRelativeMotion("relative velocity is zero")
    return cc


def pass_distance(rel: RelativeState) -> Vec2:
    """Component of ``d`` perpendicular to ``c``: the miss vector if nobody manoeuvres."""
    cc = _cc(rel)
    norm = math.sqrt(cc)
    nx, ny = -rel.c.dy / norm, rel.c.dx / norm
    k = rel.d.dx * nx + rel.d.dy * ny
    return Vec2(k * nx, k * ny)


def closest_approach_time(rel: RelativeState) -> float:
    """Time at which ``d + c t`` is shortest; negative when the pair is already separating."""
    cc = _cc(rel)
    return -(rel.d.dx * rel.c.dx + rel.d.dy * rel.c.dy) / cc


def _clamp(u: Vec2, limit: float) -> Vec2:
    n = math.hypot(u.dx, u.dy)
    if n > limit:
        return Vec2(u.dx * limit / n, u.dy * limit / n)
    return u


def plan_avoidance(state_a, state_b, params: AvoidanceParams) -> Optional[tuple[Vec2, Vec2]]:
    """Displacement setpoints ``(u_A, u_B)`` relative to each drone, or None if no conflict.

    ``state_a``/``state_b`` are ``(position, velocity)`` pairs.  The lateral
    push of ``target_margin`` is split between the drones in proportion to the
    other drone's speed, each setpoint is clamped to ``max_correction``.
    """
    (pa, va), (pb, vb) = state_a, state_b
    rel = RelativeState.of(pa, va, pb, vb)
    margin = params.target_margin
    d_safe = params.safe_distance
    cc = rel.c.dx * rel.c.dx + rel.c.dy * rel.c.dy
    if cc == 0.0:
        dist = math.hypot(rel.d.dx, rel.d.dy)
        if dist > d_safe:
            return None
        # no closest approach exists; push the pair apart along the line of centres
        dh = Vec2(1.0, 0.0) if dist == 0.0 else Vec2(rel.d.dx / dist, rel.d.dy / dist)
        lim = params.max_correction
        return _clamp(dh * (0.5 * margin), lim), _clamp(dh * (-0.5 * margin), lim)

    tau = closest_approach_time(rel)
    if tau <= 0.0 or tau > params.horizon:
        return None
    dp = pass_distance(rel)
    dp_norm = math.hypot(dp.dx, dp.dy)
    if dp_norm - d_safe > 0.0:
        return None
    sa = math.hypot(va[0], va[1])
    sb = math.hypot(vb[0], vb[1])
    if sa + sb == 0.0:
        return None
    if dp_norm > 0.0:
        dh = Vec2(dp.dx / dp_norm, dp.dy / dp_norm)
    else:
        # exact head-on: A goes to the left of the relative velocity
        cn = math.sqrt(cc)
        dh = Vec2(-rel.c.dy / cn, rel.c.dx / cn)
    vsa = dh * (margin * sb / (sa + sb))
    vsb = dh * (-margin * sa / (sa + sb))
    u_a = Vec2(va[0] * tau, va[1] * tau) + vsa
    u_b = Vec2(vb[0] * tau, vb[1] * tau) + vsb
    lim = params.max_correction
    return _clamp(u_a, lim), _clamp(u_b, lim)


def steer(u: Vec2, speed: float) -> Vec2:
    """Velocity of magnitude ``speed`` towards the displacement setpoint ``u``."""
    n = math.hypot(u.dx, u.dy)
    if n == 0.0:
        return Vec2(0.0, 0.0)
    return Vec2(u.dx * speed / n, u.dy * speed / n)


def resolve_conflicts(states, params: AvoidanceParams, speeds, held=None) -> dict[int, Vec2]:
    """Override velocities for one step, nearest conflicting pair first.

    ``states`` maps drone id to ``(position, mission velocity)``; a pair is in
    conflict when its mission velocities are.  ``held`` holds the overrides
    flown in the previous step.  While a conflict lasts the pair re-plans from
    the velocities it is actually flying, so the deflection accumulates until
    those velocities are conflict free, and then holds them until the mission
    velocities clear.  ``speeds`` is the speed each drone manoeuvres at.  A
    drone takes part in at most one manoeuvre per step.
    """
    held = held or {}
    ids = sorted(states)
    conflicts = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if plan_avoidance(states[a], states[b], params) is not None:
                pa, pb = states[a][0], states[b][0]
                conflicts.append((math.hypot(pa[0] - pb[0], pa[1] - pb[1]), a, b))
    conflicts.sort()
    out: dict[int, Vec2] = {}
    for _, a, b in conflicts:
        if a in out or b in out:
            continue
        va = held.get(a, states[a][1])
        vb = held.get(b, states[b][1])
        plan = plan_avoidance((states[a][0], va), (states[b][0], vb), params)
        if plan is None:
            out[a], out[b] = Vec2(*va), Vec2(*vb)
            continue
        for k, u, cur in ((a, plan[0], va), (b, plan[1], vb)):
            w = steer(u, speeds[k])
            out[k] = w if (w.dx or w.dy) else Vec2(*cur)
    return out
