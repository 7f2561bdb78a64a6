"""Flux and charge bound checks: each returns a :class:`BoundCheck`.

Every check evaluates its left-hand side at the requested quadrature order
and again at twice that order; the refined value is reported and the check
is flagged unstable when the two differ by more than the stability tolerance.
"""
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.api.schemas import BoundCheck
from src.config import settings
from src.errors import FluxError
from src.fields.analytic import AnalyticField
from src.fields.sampling import RegionSampler, map_samples, oscillation
from src.flux.convective import convective_flux, default_resolution
from src.geometry.blocks import Block, block
from src.geometry.influence import clip_level_cap, h_range_on_block, level_cap_zones
from src.geometry.quadrature import surface_quadrature
from src.geometry.surfaces import Annulus, CylinderSegment, Disc, LevelCap, Rectangle, Surface
from src.logging.logger import get_logger

logger = get_logger(__name__)


# --- samplers ---

def surface_sampler(surface: Surface, count: Optional[int] = None) -> RegionSampler:
    return map_samples(lambda st: surface.point(st[:, 0], st[:, 1]), surface.descriptor(), count, dim=2)


def block_sampler(blk: Block, count: Optional[int] = None) -> RegionSampler:
    """Volume-uniform points of the block closure (corners of the (x1, r, phi) box included)."""
    def mapping(v):
        x1 = blk.x1_lo + v[:, 0] * (blk.x1_hi - blk.x1_lo)
        r = np.sqrt(blk.r_in ** 2 + v[:, 1] * (blk.r_out ** 2 - blk.r_in ** 2))
        phi = 2 * np.pi * v[:, 2]
        return np.stack([x1, r * np.cos(phi), r * np.sin(phi)], axis=-1)

    return map_samples(mapping, blk.descriptor(), count)


def caps_sampler(caps: Sequence[LevelCap], count: Optional[int] = None) -> RegionSampler:
    pts = np.vstack([surface_sampler(cap, count).points for cap in caps])
    return RegionSampler(points=pts, region={"kind": "level_caps", "caps": [c.descriptor() for c in caps]})


# --- refinement ---

def refined_pair(evaluate: Callable[[int], float], order: Optional[int] = None) -> Tuple[float, float]:
    """Values at ``order`` and ``2 * order``."""
    order = settings.QUAD_ORDER if order is None else int(order)
    return evaluate(order), evaluate(2 * order)


def is_stable(coarse: float, fine: float, floor: float, tol: Optional[float] = None) -> bool:
    """Relative drift below ``tol``; values below ``floor`` in size count as converged zeros."""
    tol = settings.STABILITY_TOL if tol is None else tol
    return abs(fine - coarse) <= tol * max(abs(fine), abs(coarse), floor)


def _floor(rhs_factor: float) -> float:
    return max(1e-10 * rhs_factor, 1e-14)


def _finish(lemma: str, fld: AnalyticField, region: Dict, coarse: float, fine: float, rhs: float,
            **extra) -> BoundCheck:
    stable = is_stable(coarse, fine, _floor(rhs))
    if not stable:
        logger.warning("refinement unstable", lemma=lemma, coarse=coarse, fine=fine)
    return BoundCheck.build(
        lemma, fine, rhs,
        refinement_stable=stable,
        field=fld.descriptor(),
        region=region,
        extra={"lhs_coarse": abs(coarse), **extra},
    )


def boundary_flux(fld: AnalyticField, surfaces: Sequence[Surface], order: Optional[int] = None) -> float:
    res = default_resolution(fld)
    return sum(convective_flux(fld, s, surface_quadrature(s, order, res)) for s in surfaces)


# --- Lemma 2.1: rectangles ---

def rectangle_bound_check(fld: AnalyticField, rect: Rectangle, sampler: Optional[RegionSampler] = None,
                          order: Optional[int] = None, optimize_shift: bool = False) -> BoundCheck:
    """|flux(R)| against max(l1, l2) w(R)^2.

    The oscillation is frame independent but the open-surface flux is not. With
    ``optimize_shift`` the flux of u - c is evaluated for c in {0, sample mean,
    centre velocity} and the smallest is reported; the raw ratio is kept in
    ``extra``.
    """
    l1, l2 = rect.side_lengths
    if min(l1, l2) <= 0:
        raise FluxError("degenerate rectangle")
    sampler = sampler or surface_sampler(rect)
    w = oscillation(fld, sampler)
    rhs = max(l1, l2) * w ** 2

    shifts = {"none": np.zeros(3)}
    if optimize_shift:
        shifts["mean"] = np.mean(fld.eval(sampler.points), axis=0)
        shifts["centre"] = fld.eval(rect.point(0.5, 0.5))
    results = {}
    for label, c in shifts.items():
        moving = fld.shifted(c) if np.any(c) else fld
        results[label] = refined_pair(lambda k: abs(convective_flux(moving, rect, order=k)), order)
    best = min(results, key=lambda lab: results[lab][1])
    coarse, fine = results[best]
    raw = results["none"][1]
    return _finish("2.1", fld, rect.descriptor(), coarse, fine, rhs, w=w, shift=best,
                   ratio_raw=raw / rhs if rhs > 0 else None)


# --- Lemma 2.2: discs, annuli, cylinders ---

def surface_rhs_factor(surface: Surface, w: float) -> float:
    if isinstance(surface, Disc):
        return surface.radius * w ** 2
    if isinstance(surface, Annulus):
        return surface.r_out * w ** 2
    if isinstance(surface, CylinderSegment):
        return max(surface.length, surface.radius) * w ** 2
    raise FluxError(f"surface bound check applies to discs, annuli and cylinders, not {surface.kind}")


def surface_bound_check(fld: AnalyticField, surface: Surface, sampler: Optional[RegionSampler] = None,
                        order: Optional[int] = None) -> BoundCheck:
    surface_rhs_factor(surface, 0.0)
    sampler = sampler or surface_sampler(surface)
    w = oscillation(fld, sampler)
    rhs = surface_rhs_factor(surface, w)
    coarse, fine = refined_pair(lambda k: abs(convective_flux(fld, surface, order=k)), order)
    return _finish("2.2", fld, surface.descriptor(), coarse, fine, rhs, w=w)


# --- Corollary 2.3: block charges ---

def block_charge(fld: AnalyticField, blk: Block, shift=None, order: Optional[int] = None) -> float:
    """C(B) = -(outward flux of (v . grad) v) with v = u - shift.

    ``shift`` defaults to the velocity at the block's reference point; pass
    zeros for the lab frame. The charge itself is frame independent.
    """
    c = fld.eval(blk.reference_point()) if shift is None else np.asarray(shift, dtype=float)
    moving = fld.shifted(c) if np.any(c) else fld
    return -boundary_flux(moving, blk.boundary, order)


def charge_bound_check(fld: AnalyticField, blk: Block, sampler: Optional[RegionSampler] = None,
                       order: Optional[int] = None) -> BoundCheck:
    """|C(blk)| against 2^n w(blk)^2."""
    sampler = sampler or block_sampler(blk)
    w = oscillation(fld, sampler)
    rhs = blk.scale * w ** 2
    coarse, fine = refined_pair(lambda k: abs(block_charge(fld, blk, order=k)), order)
    extra = {"w": w}
    if blk.kind == "shell_Bn":
        # flux through the cut face stands in for the neglected x1 < -2^(n+K) part
        cut = blk.boundary[0]
        c = fld.eval(blk.reference_point())
        extra["truncation_face_flux"] = abs(convective_flux(fld.shifted(c) if np.any(c) else fld, cut, order=order))
        extra["tail_bound_factor"] = blk.r_out * w ** 2
    return _finish("2.3c", fld, blk.descriptor(), coarse, fine, rhs, **extra)


# --- Lemma 2.4: level caps ---

def level_cap_flux(fld: AnalyticField, caps: Sequence[LevelCap], order: Optional[int] = None) -> float:
    return boundary_flux(fld, caps, order)


def level_cap_flux_check(fld: AnalyticField, n: int, xlev: float, sampler: Optional[RegionSampler] = None,
                         order: Optional[int] = None, kind: str = "C") -> BoundCheck:
    """|flux(L_x ∩ blk)| against 2^n w(L_x ∩ blk)^2, with the three angular zones reported."""
    blk = block(kind, n)
    lo, hi = h_range_on_block(blk)
    if not lo <= xlev <= hi:
        raise FluxError(f"level {xlev} outside the h-range [{lo}, {hi}] of {blk.label}")
    caps = clip_level_cap(xlev, blk)
    if not caps:
        raise FluxError(f"level set {xlev} does not meet {blk.label}")
    sampler = sampler or caps_sampler(caps)
    w = oscillation(fld, sampler)
    rhs = blk.scale * w ** 2
    coarse, fine = refined_pair(lambda k: abs(level_cap_flux(fld, caps, k)), order)
    zones = {name: level_cap_flux(fld, pieces, order) if pieces else 0.0
             for name, pieces in level_cap_zones(caps).items()}
    region = {"block": blk.descriptor(), "xlev": xlev, "bands": [[c.theta_lo, c.theta_hi] for c in caps]}
    return _finish("2.4", fld, region, coarse, fine, rhs, w=w, zones=zones)


def level_fractions(n: int, count: int, kind: str = "C") -> List[float]:
    """``count`` levels spread strictly inside the h-range of the block."""
    lo, hi = h_range_on_block(block(kind, n))
    lo = max(lo, 0.0)
    return [lo + (hi - lo) * (i + 0.5) / count for i in range(count)]
