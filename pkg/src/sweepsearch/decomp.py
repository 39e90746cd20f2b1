"""Split a convex operating area into proportional slabs sharing one sweep direction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geom import ConvexPolygon, bearing_vector, clip_halfplane, min_diameter, normalize_vertices, offset_for_area, slab


@dataclass(frozen=True)
class SubArea:
    polygon: ConvexPolygon
    proportion: float
    drone_id: int
    lo: float  # offset interval along the min-diameter axis
    hi: float


@dataclass(frozen=True)
class DecompositionPlan:
    parent: ConvexPolygon
    sweep_direction: float
    min_diameter_direction: float
    d_min: float
    sub_areas: tuple[SubArea, ...]
    failed: frozenset = field(default_factory=frozenset)

    @property
    def axis(self):
        """Unit vector along the min-diameter direction; sub-area offsets are measured on it."""
        return bearing_vector(self.min_diameter_direction)

    @property
    def n_drones(self) -> int:
        return len({s.drone_id for s in self.sub_areas})

    def region_of(self, drone_id: int) -> list[SubArea]:
        return [s for s in self.sub_areas if s.drone_id == drone_id]

    def assigned_area(self, drone_id: int) -> float:
        return sum(s.polygon.area for s in self.region_of(drone_id))

    def merged_region(self, drone_id: int) -> ConvexPolygon:
        """The drone's assignment as one polygon; its slabs must be contiguous."""
        parts = sorted(self.region_of(drone_id), key=lambda s: s.lo)
        if not parts:
            raise KeyError(drone_id)
        for a, b in zip(parts, parts[1:]):
            if not math.isclose(a.hi, b.lo, rel_tol=0, abs_tol=1e-9 * max(1.0, abs(a.hi))):
                raise ValueError(f"drone {drone_id} holds non-contiguous slabs")
        lo, hi = parts[0].lo, parts[-1].hi
        plo, phi = self.parent.extent(self.axis)
        if lo <= plo and hi >= phi:
            return self.parent
        return slab(self.parent, self.axis, lo, hi)


def _check_proportions(proportions) -> list[float]:
    props = [float(x) for x in proportions]
    if not props:
        raise ValueError("need at least one proportion")
    if any(not (x > 0) for x in props):
        raise ValueError(f"proportions must be positive: {props}")
    if abs(math.fsum(props) - 1.0) > 1e-9:
        raise ValueError(f"proportions must sum to 1, got {math.fsum(props)!r}")
    return props


def uniform_proportions(n: int) -> list[float]:
    return [1.0 / n] * n


def decompose(p: ConvexPolygon, proportions) -> DecompositionPlan:
    """Cut ``p`` into slabs of area ``proportion * A_p`` with divide lines along the sweep direction.

    Slabs are ordered by increasing offset along the min-diameter axis and
    sub-area ``i`` goes to drone ``i``.
    """
    props = _check_proportions(proportions)
    theta_opt, d_min = min_diameter(p)
    axis = bearing_vector(theta_opt)
    total = p.area
    lo_all, hi_all = p.extent(axis)

    cuts = [lo_all]
    remainder = p
    for prop in props[:-1]:
        off = offset_for_area(remainder, axis, prop * total)
        cuts.append(off)
        remainder = normalize_vertices(clip_halfplane(remainder.vertices, axis, off, keep_below=False))
    cuts.append(hi_all)

    subs = []
    for i, prop in enumerate(props):
        lo, hi = cuts[i], cuts[i + 1]
        poly = p if len(props) == 1 else slab(p, axis, lo, hi)
        subs.append(SubArea(poly, prop, i, lo, hi))
    return DecompositionPlan(
        parent=p,
        sweep_direction=theta_opt + math.pi / 2,
        min_diameter_direction=theta_opt,
        d_min=d_min,
        sub_areas=tuple(subs),
    )


def reassign_on_failure(plan: DecompositionPlan, failed: int, unswept: ConvexPolygon) -> DecompositionPlan:
    """Hand the unswept part of a failed drone's slab to the live neighbour across a dividing line.

    The neighbour on the unswept side is preferred; when nothing has been swept
    both sides qualify and the lower drone id wins.
    """
    axis = plan.axis
    u_lo, u_hi = unswept.extent(axis)
    scale = max(1.0, plan.d_min)
    tol = 1e-7 * scale

    owner = None
    for s in plan.sub_areas:
        if s.drone_id == failed and s.lo - tol <= u_lo and u_hi <= s.hi + tol:
            owner = s
            break
    if owner is None:
        raise ValueError(f"unswept region is not inside any sub-area of drone {failed}")
    dead = plan.failed | {failed}

    def neighbour_at(offset: float):
        for s in plan.sub_areas:
            if s.drone_id in dead:
                continue
            if abs(s.hi - offset) <= tol or abs(s.lo - offset) <= tol:
                return s.drone_id
        return None

    low_n = neighbour_at(owner.lo)
    high_n = neighbour_at(owner.hi)
    touches_lo = u_lo <= owner.lo + tol
    touches_hi = u_hi >= owner.hi - tol
    if touches_lo and touches_hi:
        order = sorted(x for x in (low_n, high_n) if x is not None)
    elif touches_hi:
        order = [x for x in (high_n, low_n) if x is not None]
    else:
        order = [x for x in (low_n, high_n) if x is not None]
    if not order:
        raise ValueError(f"drone {failed} failed and has no adjacent live drone to take over")
    heir = order[0]

    total = plan.parent.area
    new_subs = []
    for s in plan.sub_areas:
        if s is not owner:
            new_subs.append(s)
            continue
        # keep the swept remainder with the failed drone for bookkeeping
        keep = []
        if u_lo > s.lo + tol:
            keep.append((s.lo, u_lo))
        if u_hi < s.hi - tol:
            keep.append((u_hi, s.hi))
        for lo, hi in keep:
            poly = slab(plan.parent, axis, lo, hi)
            new_subs.append(SubArea(poly, poly.area / total, failed, lo, hi))
    moved_lo, moved_hi = max(u_lo, owner.lo), min(u_hi, owner.hi)
    if touches_lo:
        moved_lo = owner.lo
    if touches_hi:
        moved_hi = owner.hi
    moved = owner.polygon if (touches_lo and touches_hi) else slab(plan.parent, axis, moved_lo, moved_hi)
    new_subs.append(SubArea(moved, moved.area / total, heir, moved_lo, moved_hi))
    return replace(plan, sub_areas=tuple(new_subs), failed=dead)
