"""Air-to-ground mean path loss and the altitude that maximises coverage radius."""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 2.998e8  # m/s

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Environment:
    a: float
    b: float
    eta_los: float  # dB
    eta_nlos: float  # dB
    name: str = "custom"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("environment constants a and b must be positive")
        if not (self.eta_nlos >= self.eta_los >= 0):
            raise ValueError("need eta_nlos >= eta_los >= 0")


# Al-Hourani, Kandeepan & Lardner (2014), "Optimal LAP altitude for maximum coverage".
PRESETS = {
    "suburban": Environment(a=4.88, b=0.43, eta_los=0.1, eta_nlos=21.0, name="suburban"),
    "urban": Environment(a=9.61, b=0.16, eta_los=1.0, eta_nlos=20.0, name="urban"),
    "dense-urban": Environment(a=12.08, b=0.11, eta_los=1.6, eta_nlos=23.0, name="dense-urban"),
    "highrise-urban": Environment(a=27.23, b=0.08, eta_los=2.3, eta_nlos=34.0, name="highrise-urban"),
}


@dataclass(frozen=True)
class ChannelConfig:
    carrier_frequency: float = 2.0e9  # Hz
    loss_threshold: float = 100.0  # dB
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.carrier_frequency > 0:
            raise ValueError("carrier frequency must be positive")
        if not self.loss_threshold > 0:
            raise ValueError("loss threshold must be positive")


@dataclass(frozen=True)
class CoverageRadius:
    radius: float
    covered: bool


def _check(h: float, r: float) -> None:
    if not h > 0:
        raise ValueError(f"altitude must be positive, got {h}")
    if not r >= 0:
        raise ValueError(f"horizontal distance must be non-negative, got {r}")


def elevation_deg(h: float, r: float) -> float:
    return 90.0 if r == 0 else math.degrees(math.atan(h / r))


def p_los(h: float, r: float, env: Environment) -> float:
    _check(h, r)
    phi = elevation_deg(h, r)
    return 1.0 / (1.0 + env.a * math.exp(-env.b * (phi - env.a)))


def free_space_loss(distance: float, cfg: ChannelConfig) -> float:
    return 20.0 * math.log10(4.0 * math.pi * cfg.carrier_frequency * distance / cfg.speed_of_light)


def path_loss(h: float, r: float, env: Environment, cfg: ChannelConfig) -> float:
    _check(h, r)
    pl = p_los(h, r, env)
    return free_space_loss(math.hypot(h, r), cfg) + pl * env.eta_los + (1.0 - pl) * env.eta_nlos


def coverage_radius(h: float, env: Environment, cfg: ChannelConfig) -> CoverageRadius:
    """Horizontal distance where the path loss reaches the threshold, by bisection.

    Bisects down to floating-point resolution, well inside the 1 cm requirement,
    so that finite differences of r(h) stay meaningful.
    """
    lth = cfg.loss_threshold
    if path_loss(h, 0.0, env, cfg) >= lth:
        return CoverageRadius(0.0, False)
    lo, hi = 0.0, max(h, 1.0)
    while path_loss(h, hi, env, cfg) < lth:
        lo, hi = hi, 2.0 * hi
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if path_loss(h, mid, env, cfg) < lth:
            lo = mid
        else:
            hi = mid
    return CoverageRadius(0.5 * (lo + hi), True)


def radius_at(h: float, env: Environment, cfg: ChannelConfig) -> float:
    return coverage_radius(h, env, cfg).radius


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-4) -> float:
    """Maximiser of a unimodal ``f`` on ``[lo, hi]``."""
    c = hi - _INV_GOLDEN * (hi - lo)
    d = lo + _INV_GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_GOLDEN * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def optimal_altitude(
    env: Environment,
    cfg: ChannelConfig,
    h_min: float = 10.0,
    h_max: float = 10_000.0,
    tol: float = 1e-3,
    coarse_points: int = 200,
) -> tuple[float, float]:
    """Altitude maximising the coverage radius, and that radius.

    r(h) is zero on a plateau above the coverage ceiling, so a coarse scan first
    brackets the peak; golden-section search then refines inside the bracket.
    """
    step = (h_max - h_min) / (coarse_points - 1)
    grid = [h_min + i * step for i in range(coarse_points)]
    vals = [radius_at(h, env, cfg) for h in grid]
    k = max(range(coarse_points), key=lambda i: vals[i])
    if vals[k] <= 0.0:
        raise ValueError(f"no coverage anywhere in altitude bracket [{h_min}, {h_max}]")
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, coarse_points - 1)]
    h_star = golden_section_max(lambda h: radius_at(h, env, cfg), lo, hi, tol=tol)
    return h_star, radius_at(h_star, env, cfg)


def radius_table(env: Environment, cfg: ChannelConfig, heights) -> list[tuple[float, float]]:
    return [(h, radius_at(h, env, cfg)) for h in heights]
