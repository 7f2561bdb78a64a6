"""Tensor-product quadrature for surface patches and coaxial blocks."""
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.config import settings
from src.errors import GeometryError
from src.geometry.blocks import Block
from src.geometry.surfaces import Surface

# panel caps per direction; they bound node counts on the largest blocks
MAX_PANELS = 512
MAX_VOLUME_PANELS = 24


def gauss_legendre_panels(order: int, panels: int = 1, lo: float = 0.0, hi: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    if order < 1 or panels < 1:
        raise GeometryError("quadrature order and panel count must be at least 1")
    xi, wi = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return nodes, weights


def midpoint_periodic(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Equal-weight midpoint nodes on [0, 1); spectrally accurate for periodic integrands."""
    if count < 1:
        raise GeometryError("periodic rule needs at least one node")
    return (np.arange(count) + 0.5) / count, np.full(count, 1.0 / count)


def _panels(length: float, resolution: Optional[float], cap: int = MAX_PANELS) -> int:
    if resolution is None or resolution <= 0:
        return 1
    return int(min(cap, max(1, np.ceil(length / resolution))))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes in the parameter square with weights summing to one."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    surface_kind: str = "surface"

    @property
    def size(self) -> int:
        return int(self.weights.size)


def surface_quadrature(surface: Surface, order: Optional[int] = None,
                       resolution: Optional[float] = None) -> QuadratureRule:
    """Gauss-Legendre in s (and in t for rectangles), midpoint in periodic t.

    ``resolution`` is a physical panel length; without it a single panel of
    the requested order is used in each direction.
    """
    order = settings.QUAD_ORDER if order is None else int(order)
    if order < 1:
        raise GeometryError(f"quadrature order must be >= 1, got {order}")
    len_s, len_t = surface.extent()
    s, ws = gauss_legendre_panels(order, _panels(len_s, resolution))
    if surface.periodic_t:
        t, wt = midpoint_periodic(2 * order * _panels(len_t, resolution))
    else:
        t, wt = gauss_legendre_panels(order, _panels(len_t, resolution))
    ss, tt = np.meshgrid(s, t, indexing="ij")
    nodes = np.stack([ss.ravel(), tt.ravel()], axis=-1)
    weights = np.outer(ws, wt).ravel()
    return QuadratureRule(nodes=nodes, weights=weights, order=order, surface_kind=surface.kind)


@dataclass(frozen=True, eq=False)
class SurfaceNodes:
    """Physical quadrature data: positions, unit normals and area weights."""

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray


def surface_nodes(surface: Surface, rule: QuadratureRule) -> SurfaceNodes:
    if rule.surface_kind not in ("surface", surface.kind):
        raise GeometryError(f"rule built for {rule.surface_kind} used on {surface.kind}")
    s, t = rule.nodes[:, 0], rule.nodes[:, 1]
    return SurfaceNodes(
        points=surface.point(s, t),
        normals=surface.normal(s, t),
        weights=rule.weights * surface.jacobian(s, t),
    )


def surface_area(surface: Surface, order: Optional[int] = None, resolution: Optional[float] = None) -> float:
    rule = surface_quadrature(surface, order, resolution)
    return float(np.sum(surface_nodes(surface, rule).weights))


@dataclass(frozen=True, eq=False)
class VolumeRule:
    """Tensor rule in cylindrical coordinates, kept factorised.

    Integration runs one x1 slab at a time so large blocks never
    materialise the full node set.
    """

    x1: np.ndarray
    w1: np.ndarray
    r: np.ndarray
    wr: np.ndarray
    phi: np.ndarray
    wphi: np.ndarray

    @property
    def size(self) -> int:
        return int(self.x1.size * self.r.size * self.phi.size)

    def _cross_section(self) -> Tuple[np.ndarray, np.ndarray]:
        R, PHI = np.meshgrid(self.r, self.phi, indexing="ij")
        yz = np.stack([R * np.cos(PHI), R * np.sin(PHI)], axis=-1).reshape(-1, 2)
        area = np.outer(self.wr * self.r, self.wphi).ravel()
        return yz, area

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        if self.size == 0:
            return 0.0
        yz, area = self._cross_section()
        total = 0.0
        for x1, w1 in zip(self.x1, self.w1):
            pts = np.column_stack([np.full(yz.shape[0], x1), yz])
            total += w1 * float(np.dot(area, fn(pts)))
        return total

    @property
    def points(self) -> np.ndarray:
        yz, _ = self._cross_section()
        return np.concatenate([np.column_stack([np.full(yz.shape[0], x1), yz]) for x1 in self.x1]) \
            if self.x1.size else np.zeros((0, 3))

    @property
    def weights(self) -> np.ndarray:
        _, area = self._cross_section()
        return np.outer(self.w1, area).ravel()


_EMPTY = np.zeros(0)


def volume_quadrature(blk: Block, order: Optional[int] = None, resolution: Optional[float] = None,
                      clip_radius: Optional[float] = None) -> VolumeRule:
    """Gauss-Legendre in x1 and r, midpoint in phi, with weights r dr dphi dx1.

    With ``clip_radius`` the block is first cut to |x1| <= R, r <= R, which
    holds the support of a field vanishing outside the ball of radius R.
    """
    order = settings.QUAD_ORDER if order is None else int(order)
    x1_lo, x1_hi, r_in, r_out = blk.x1_lo, blk.x1_hi, blk.r_in, blk.r_out
    if clip_radius is not None:
        x1_lo, x1_hi = max(x1_lo, -clip_radius), min(x1_hi, clip_radius)
        r_out = min(r_out, clip_radius)
    if x1_hi <= x1_lo or r_out <= r_in:
        return VolumeRule(_EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY)
    x1, w1 = gauss_legendre_panels(order, _panels(x1_hi - x1_lo, resolution, MAX_VOLUME_PANELS), x1_lo, x1_hi)
    r, wr = gauss_legendre_panels(order, _panels(r_out - r_in, resolution, MAX_VOLUME_PANELS), r_in, r_out)
    phi, wphi = midpoint_periodic(2 * order * _panels(2 * np.pi * r_out, resolution, MAX_VOLUME_PANELS))
    return VolumeRule(x1, w1, r, wr, 2 * np.pi * phi, 2 * np.pi * wphi)


def riemann_volume_sum(fn: Callable[[np.ndarray], np.ndarray], blk: Block,
                       cells: Tuple[int, int, int] = (64, 64, 64),
                       clip_radius: Optional[float] = None) -> float:
    """Midpoint-rule sum of ``fn`` over the block in cylindrical cells (x1, r, phi).

    Brute-force reference for the Gauss-Legendre rules.
    """
    x1_lo, x1_hi, r_in, r_out = blk.x1_lo, blk.x1_hi, blk.r_in, blk.r_out
    if clip_radius is not None:
        x1_lo, x1_hi = max(x1_lo, -clip_radius), min(x1_hi, clip_radius)
        r_out = min(r_out, clip_radius)
    if x1_hi <= x1_lo or r_out <= r_in:
        return 0.0
    n1, nr, nphi = cells
    d1, dr, dphi = (x1_hi - x1_lo) / n1, (r_out - r_in) / nr, 2 * np.pi / nphi
    r = r_in + dr * (np.arange(nr) + 0.5)
    phi = dphi * (np.arange(nphi) + 0.5)
    R, PHI = np.meshgrid(r, phi, indexing="ij")
    cross = np.stack([R * np.cos(PHI), R * np.sin(PHI)], axis=-1).reshape(-1, 2)
    area = (R * dr * dphi).ravel()
    total = 0.0
    for i in range(n1):
        x1 = x1_lo + d1 * (i + 0.5)
        pts = np.column_stack([np.full(cross.shape[0], x1), cross])
        total += float(np.sum(fn(pts) * area)) * d1
    return total
