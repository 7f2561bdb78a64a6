"""The influence function h(x) = x1 / |x|^3 and its level sets L_x = {h = x}.

h is homogeneous of degree -2, so L_1 maps onto L_s under x -> s^(-1/2) x.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from src.config import settings
from src.errors import GeometryError
from src.geometry.blocks import Block
from src.geometry.surfaces import LevelCap

# ∂h/∂x1 vanishes on the cone r^2 = 2 x1^2; there the level sets turn parallel to e1.
# The cone angle is arctan(sqrt 2), about 54.74 degrees from e1, not 45 degrees.
THETA_TANGENT = float(np.arctan(np.sqrt(2.0)))
ZONE_CUTS = (np.pi / 6, np.pi / 3)


def h_value(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x, axis=-1)
    if np.any(norm == 0):
        raise GeometryError("h is singular at the origin")
    out = x[..., 0] / norm ** 3
    return float(out) if out.ndim == 0 else out


def default_theta_max() -> float:
    return float(np.deg2rad(settings.THETA_MAX_DEG))


def level_surface(xlev: float, theta_range: Optional[Tuple[float, float]] = None) -> LevelCap:
    """The band of L_xlev with polar angle in ``theta_range`` (default [0, theta_max])."""
    if xlev <= 0:
        raise GeometryError(f"level sets are only used for positive levels, got {xlev}")
    lo, hi = theta_range if theta_range is not None else (0.0, default_theta_max())
    return LevelCap(float(xlev), float(lo), float(hi))


def rescale_to_level(points, level_from: float, level_to: float) -> np.ndarray:
    """Map points of L_{level_from} onto L_{level_to}."""
    return np.asarray(points, dtype=float) * np.sqrt(level_from / level_to)


def h_range_on_block(blk: Block) -> Tuple[float, float]:
    """(inf, sup) of h over the closure of a coaxial block.

    On a fixed radius h decreases in x1 beyond r/sqrt(2) and increases before
    it, while for fixed x1 > 0 it decreases in r. The extrema therefore sit on
    the block edges and reduce to a handful of candidates.
    """
    if blk.x1_hi <= 0:
        # h <= 0 throughout; report the range of the mirror image, negated
        mirror = Block(blk.kind, -blk.x1_hi, -blk.x1_lo, blk.r_in, blk.r_out)
        lo, hi = h_range_on_block(mirror)
        return -hi, -lo
    a = max(blk.x1_lo, 0.0)
    b = blk.x1_hi

    def on_radius(x1, r):
        return x1 / (x1 * x1 + r * r) ** 1.5

    r = blk.r_in
    if r == 0:
        sup = 1.0 / (a * a) if a > 0 else np.inf
    else:
        # along r = r_in the peak is at x1 = r_in / sqrt(2)
        sup = on_radius(min(max(r / np.sqrt(2.0), a), b), r)
    if blk.x1_lo < 0:
        # mirror of the positive-side maximum over x1 in [0, -x1_lo]
        inf = -on_radius(min(r / np.sqrt(2.0), -blk.x1_lo), r) if r > 0 else -np.inf
    else:
        inf = min(on_radius(a, blk.r_out), on_radius(b, blk.r_out))
    return float(inf), float(sup)


def theta_on_plane(xlev: float, x1: float) -> Optional[float]:
    """Polar angle where L_xlev crosses the plane {x1 = const > 0}, if it does."""
    if x1 <= 0:
        return None
    c = x1 * np.sqrt(xlev)
    if c > 1.0:
        return None
    return float(np.arccos(c ** (2.0 / 3.0)))


def thetas_on_cylinder(xlev: float, radius: float) -> List[float]:
    """Polar angles (zero, one or two) where L_xlev crosses {r = radius}.

    Along L_xlev the distance to the axis is sin(theta) sqrt(cos(theta)/xlev),
    which rises from 0 to its peak at THETA_TANGENT and falls back to 0.
    """
    if radius <= 0:
        return []
    target = radius * np.sqrt(xlev)

    def g(theta):
        return np.sin(theta) * np.sqrt(np.cos(theta)) - target

    peak = g(THETA_TANGENT)
    if peak < 0:
        return []
    if peak == 0:
        return [THETA_TANGENT]
    return [float(brentq(g, 0.0, THETA_TANGENT, xtol=1e-15)),
            float(brentq(g, THETA_TANGENT, np.pi / 2, xtol=1e-15))]


def level_intersections(xlev: float, blk: Block) -> List[Tuple[float, float]]:
    """Circles (x1, radius) centred on the axis where L_xlev meets the block boundary."""
    if xlev <= 0:
        raise GeometryError(f"level must be positive, got {xlev}")
    circles: List[Tuple[float, float]] = []
    tol = 1e-12 * blk.scale
    for x1 in (blk.x1_lo, blk.x1_hi):
        th = theta_on_plane(xlev, x1)
        if th is None:
            continue
        r = float(np.sqrt(np.cos(th) / xlev) * np.sin(th))
        if blk.r_in - tol <= r <= blk.r_out + tol:
            circles.append((float(x1), r))
    for radius in (blk.r_in, blk.r_out):
        for th in thetas_on_cylinder(xlev, radius):
            x1 = float(np.sqrt(np.cos(th) / xlev) * np.cos(th))
            if blk.x1_lo - tol <= x1 <= blk.x1_hi + tol:
                circles.append((x1, float(radius)))
    return sorted(set(circles))


def clip_level_cap(xlev: float, blk: Block, theta_max: Optional[float] = None) -> List[LevelCap]:
    """L_xlev ∩ blk as a list of theta-bands (empty when they do not meet)."""
    if xlev <= 0:
        raise GeometryError(f"level must be positive, got {xlev}")
    theta_max = default_theta_max() if theta_max is None else theta_max
    cuts = {0.0, theta_max}
    for x1 in (blk.x1_lo, blk.x1_hi):
        th = theta_on_plane(xlev, x1)
        if th is not None:
            cuts.add(th)
    for radius in (blk.r_in, blk.r_out):
        cuts.update(thetas_on_cylinder(xlev, radius))
    grid = sorted(th for th in cuts if 0.0 <= th <= theta_max)

    bands: List[Tuple[float, float]] = []
    for lo, hi in zip(grid[:-1], grid[1:]):
        if hi - lo <= 1e-14:
            continue
        mid = 0.5 * (lo + hi)
        rho = np.sqrt(np.cos(mid) / xlev)
        probe = rho * np.array([np.cos(mid), np.sin(mid), 0.0])
        if not blk.contains(probe):
            continue
        if bands and bands[-1][1] == lo:
            bands[-1] = (bands[-1][0], hi)
        else:
            bands.append((lo, hi))
    return [LevelCap(float(xlev), lo, hi) for lo, hi in bands]


def level_cap_zones(caps: Sequence[LevelCap]) -> Dict[str, List[LevelCap]]:
    """Split caps into zones by the angle to the x1-axis.

    ``axial``: theta < pi/6, ``middle``: pi/6 to pi/3, ``equatorial``: beyond pi/3.
    """
    zones: Dict[str, List[LevelCap]] = {"axial": [], "middle": [], "equatorial": []}
    names = ("axial", "middle", "equatorial")
    for cap in caps:
        for piece in cap.split(ZONE_CUTS):
            mid = 0.5 * (piece.theta_lo + piece.theta_hi)
            zones[names[int(np.searchsorted(ZONE_CUTS, mid))]].append(piece)
    return zones
