"""Dyadic decomposition of d1 P(0) and the bound checks built on it.

Block values are un-normalised kernel integrals,

    c(B) = -int_B q(y) y1 / |y|^3 dy = -int_B q h,

so that d1 P(0) = sum_B c(B) / (4 pi) over any tiling of space.
"""
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from src.api.schemas import BoundCheck, PressureReport
from src.config import settings
from src.errors import PressureError
from src.fields.analytic import AnalyticField
from src.fields.grid import GridField
from src.fields.sampling import Lattice, RegionSampler, grad_sup_norm, oscillation, sup_norm
from src.flux.checks import block_charge, block_sampler, boundary_flux, is_stable
from src.geometry.blocks import Block, block, dyadic_family
from src.geometry.influence import clip_level_cap, h_range_on_block, h_value
from src.geometry.quadrature import volume_quadrature
from src.geometry.surfaces import Annulus, CylinderSegment, Disc, Surface
from src.logging.logger import get_logger
from src.pressure.charges import charge_density
from src.pressure.spectral import grad_pressure_spectral

logger = get_logger(__name__)

FOUR_PI = 4.0 * np.pi

# rotations R with R e_k = e1, so that d1 of the rotated field is d_k of the original
_AXIS_ROTATIONS = (
    np.eye(3),
    np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
    np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
)


def _touches_origin(blk: Block) -> bool:
    return blk.r_in == 0 and blk.x1_lo <= 0 <= blk.x1_hi


def block_contribution(fld: AnalyticField, blk: Block, order: Optional[int] = None) -> float:
    if _touches_origin(blk):
        raise PressureError(f"block {blk.label} touches the origin, where the kernel is singular")
    rule = volume_quadrature(blk, order, settings.QUAD_RESOLUTION * fld.length_scale, fld.support_radius)
    return -rule.integrate(lambda y: charge_density(fld, y) * h_value(y))


def dyadic_index(sup_u: float, sup_gradu: float) -> int:
    """n0 with 2^(n0-1) 3|grad u| < |u| <= 2^n0 3|grad u|."""
    if sup_u <= 0 or sup_gradu <= 0:
        raise PressureError("dyadic index needs a non-constant, non-zero field")
    return int(np.ceil(np.log2(sup_u / (3.0 * sup_gradu))))


def dyadic_contributions(fld: AnalyticField, n_min: int, n_max: int,
                         order: Optional[int] = None) -> List[Tuple[int, Block, float]]:
    """(n, block, c(block)) over C_n, its mirror and B_n (truncation depth 0)."""
    return [(blk.n, blk, block_contribution(fld, blk, order)) for blk in dyadic_family(n_min, n_max, depth=0)]


def _per_level(contribs: Sequence[Tuple[int, Block, float]]) -> Dict[int, float]:
    levels: Dict[int, float] = {}
    for n, _, value in contribs:
        levels[n] = levels.get(n, 0.0) + value
    return levels


def grad_pressure_blocks(fld: AnalyticField, x=(0.0, 0.0, 0.0), n_range: Optional[Tuple[int, int]] = None,
                         order: Optional[int] = None) -> PressureReport:
    """grad P(x) by summing block contributions, one rotated copy of the field per axis."""
    if fld.support_radius is None:
        raise PressureError(f"block sums need a compactly supported field, '{fld.name}' is not")
    n_min, n_max = n_range or (settings.N_MIN, settings.N_MAX)
    x = np.asarray(x, dtype=float)
    grad, tails = [], []
    for rot in _AXIS_ROTATIONS:
        moved = fld.moved(offset=x, rotation=rot)
        levels = _per_level(dyadic_contributions(moved, n_min, n_max, order))
        grad.append(sum(levels[n] for n in sorted(levels)) / FOUR_PI)
        tails.append((abs(levels[n_min]) + abs(levels[n_max])) / FOUR_PI)
    return PressureReport(
        method="block_sum",
        point=x.tolist(),
        grad_p=grad,
        error_estimate=float(max(tails)),
        truncation={"n_min": n_min, "n_max": n_max, "depth": 0},
    )


def dipole_bound_check(fld: AnalyticField, blk: Block, sampler: Optional[RegionSampler] = None,
                       order: Optional[int] = None, with_cumulative: bool = False) -> BoundCheck:
    """|c(blk)| against 2^-n w(blk)^2."""
    sampler = sampler or block_sampler(blk)
    w = oscillation(fld, sampler)
    rhs = w ** 2 / blk.scale
    order = settings.QUAD_ORDER if order is None else order
    coarse = abs(block_contribution(fld, blk, order))
    fine_signed = block_contribution(fld, blk, 2 * order)
    fine = abs(fine_signed)
    stable = is_stable(coarse, fine, max(1e-10 * rhs, 1e-14))
    extra: Dict[str, Any] = {"w": w, "lhs_coarse": coarse, "contribution": fine_signed}
    if with_cumulative:
        extra["cumulative"] = cumulative_charge_contribution(fld, blk.n, order)["value"]
    return BoundCheck.build("2.5", fine, rhs, refinement_stable=stable, field=fld.descriptor(),
                            region=blk.descriptor(), extra=extra)


# --- cumulative-charge route for C_n ---

def _face_below_level(x1: float, radius: float, xlev: float, orientation: int) -> Optional[Surface]:
    """Part of the face {x1, r < radius} where h < xlev (an outer annulus)."""
    r_cut2 = (x1 / xlev) ** (2.0 / 3.0) - x1 * x1
    r_cut = float(np.sqrt(r_cut2)) if r_cut2 > 0 else 0.0
    if r_cut >= radius:
        return None
    if r_cut == 0.0:
        return Disc(x1, radius, orientation=orientation)
    return Annulus(x1, r_cut, radius, orientation=orientation)


def _side_below_level(blk: Block, xlev: float) -> List[Surface]:
    """Pieces of the outer cylinder where h < xlev."""
    R = blk.r_out

    def g(x1):
        return x1 / (x1 * x1 + R * R) ** 1.5 - xlev

    peak = min(max(R / np.sqrt(2.0), blk.x1_lo), blk.x1_hi)
    cuts = [blk.x1_lo]
    for lo, hi in ((blk.x1_lo, peak), (peak, blk.x1_hi)):
        if hi > lo and g(lo) * g(hi) < 0:
            cuts.append(brentq(g, lo, hi, xtol=1e-15 * R))
    cuts.append(blk.x1_hi)
    cuts = sorted(cuts)
    return [CylinderSegment(lo, hi, R) for lo, hi in zip(cuts[:-1], cuts[1:])
            if hi - lo > 1e-14 * R and g(0.5 * (lo + hi)) < 0]


def charge_below_level(fld: AnalyticField, blk: Block, xlev: float, order: Optional[int] = None) -> float:
    """F(x): charge of {h < x} ∩ blk from the fluxes through its boundary."""
    pieces: List[Surface] = []
    for x1, orientation in ((blk.x1_lo, -1), (blk.x1_hi, 1)):
        face = _face_below_level(x1, blk.r_out, xlev, orientation)
        if face is not None:
            pieces.append(face)
    pieces.extend(_side_below_level(blk, xlev))
    # caps are oriented towards increasing h: outward for {h < x}
    pieces.extend(clip_level_cap(xlev, blk))
    return -boundary_flux(fld, pieces, order) if pieces else 0.0


def cumulative_charge_contribution(fld: AnalyticField, n: int, order: Optional[int] = None,
                                   level_order: int = 12) -> Dict[str, float]:
    """c(C_n) through the level-set slicing int q h = [x F(x)] - int F(x) dx.

    F vanishes at the bottom of the h-range c1 and equals the block charge at
    the top c2; the x-integral is split where the level sets pass the block's
    edges.
    """
    blk = block("C", n)
    c1, c2 = h_range_on_block(blk)
    shift = fld.eval(blk.reference_point())
    moving = fld.shifted(shift) if np.any(shift) else fld
    a, b, R = blk.x1_lo, blk.x1_hi, blk.r_out
    edges = [h_value(p) for p in ((a, R, 0.0), (b, 0.0, 0.0), (b, R, 0.0), (R / np.sqrt(2.0), R, 0.0))]
    breaks = sorted({c1, c2, *[e for e in edges if c1 < e < c2]})
    xi, wi = leggauss(level_order)
    integral = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        integral += half * sum(w * charge_below_level(moving, blk, mid + half * t, order) for t, w in zip(xi, wi))
    total = block_charge(fld, blk, order=order)
    kernel = c2 * total - integral
    return {"value": -kernel, "total_charge": total, "integral": integral, "c1": c1, "c2": c2}


# --- pressure-gradient ratio ---

def _spectral_theorem_check(grid: GridField) -> BoundCheck:
    # coarse: a native-grid solve; fine: the same field padded to twice the resolution
    gp = grad_pressure_spectral(grid, refine=2)
    fine = grid.refined(2 * grid.n)
    sup_u, sup_gradu = sup_norm(fine), grad_sup_norm(fine)
    lhs = float(np.max(np.abs(gp.u)))
    lhs_coarse = float(np.max(np.abs(grad_pressure_spectral(grid, refine=1).u)))
    rhs_coarse = sup_norm(grid) * grad_sup_norm(grid)
    rhs = sup_u * sup_gradu
    ratio_coarse = lhs_coarse / rhs_coarse if rhs_coarse > 0 else 0.0
    ratio_fine = lhs / rhs if rhs > 0 else 0.0
    stable = is_stable(ratio_coarse, ratio_fine, 1e-12)
    return BoundCheck.build(
        "thm1.1", lhs, rhs, refinement_stable=stable, field=dict(grid.meta, n=grid.n, box=grid.box),
        region={"kind": "torus", "box": grid.box},
        extra={"route": "spectral", "sup_u": sup_u, "sup_gradu": sup_gradu, "ratio_coarse": ratio_coarse},
    )


def _block_theorem_check(fld: AnalyticField, n_range: Optional[Tuple[int, int]], order: Optional[int],
                         lattice: Optional[Lattice]) -> BoundCheck:
    radius = fld.support_radius
    if radius is None:
        raise PressureError(f"the block route needs a compactly supported field, '{fld.name}' is not")
    lattice = lattice or Lattice.cube(-radius, radius, 49)
    sup_u, sup_gradu = sup_norm(fld, lattice), grad_sup_norm(fld, lattice)
    rhs = sup_u * sup_gradu
    descriptor = fld.descriptor()
    if rhs == 0.0:
        return BoundCheck.build("thm1.1", 0.0, 0.0, field=descriptor, region={"kind": "dyadic"},
                                extra={"route": "blocks"})
    n_min, n_max = n_range or (settings.N_MIN, settings.N_MAX)
    order = settings.QUAD_ORDER if order is None else order
    coarse = _per_level(dyadic_contributions(fld, n_min, n_max, order))
    fine = _per_level(dyadic_contributions(fld, n_min, n_max, 2 * order))
    n0 = dyadic_index(sup_u, sup_gradu)
    near = sum(v for n, v in fine.items() if n < n0) / FOUR_PI
    far = sum(v for n, v in fine.items() if n >= n0) / FOUR_PI
    total, total_coarse = near + far, sum(coarse.values()) / FOUR_PI
    partial, running = [], 0.0
    for n in sorted(fine):
        running += fine[n] / FOUR_PI
        partial.append([n, running])
    stable = is_stable(abs(total_coarse), abs(total), 1e-10 * rhs)
    return BoundCheck.build(
        "thm1.1", abs(total), rhs, refinement_stable=stable, field=descriptor,
        region={"kind": "dyadic", "n_min": n_min, "n_max": n_max, "depth": 0},
        extra={
            "route": "blocks",
            "d1P0": total,
            "n0": n0,
            "near": near,
            "far": far,
            "near_constant": abs(near) / rhs,
            "far_constant": abs(far) / rhs,
            "tail_estimate": (abs(fine[n_min]) + abs(fine[n_max])) / FOUR_PI,
            "partial_sums": partial,
            "sup_u": sup_u,
            "sup_gradu": sup_gradu,
        },
    )


def theorem11_check(target: Union[GridField, AnalyticField], route: str = "spectral",
                    n_range: Optional[Tuple[int, int]] = None, order: Optional[int] = None,
                    lattice: Optional[Lattice] = None) -> BoundCheck:
    """|grad P|_inf (or |d1 P(0)| on the block route) against |grad u|_inf |u|_inf."""
    if route == "spectral":
        if not isinstance(target, GridField):
            raise PressureError("the spectral route needs a grid field")
        return _spectral_theorem_check(target)
    if route == "blocks":
        if isinstance(target, GridField):
            raise PressureError("the block route needs a compactly supported closed-form field")
        return _block_theorem_check(target, n_range, order, lattice)
    raise PressureError(f"unknown route '{route}'")
