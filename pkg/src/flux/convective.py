"""Convective flux integrals of (u . grad) u through oriented surfaces."""
from typing import Dict, Optional, Tuple

import numpy as np

from src.config import settings
from src.errors import FluxError
from src.fields.analytic import AnalyticField
from src.geometry.quadrature import (
    QuadratureRule,
    gauss_legendre_panels,
    surface_nodes,
    surface_quadrature,
)
from src.geometry.surfaces import CylinderSegment, Rectangle, Surface


def convective_term(fld: AnalyticField, points) -> np.ndarray:
    """(u . grad) u, i.e. sum_i u_i d_i u_j, at each point."""
    u = fld.eval(points)
    g = fld.grad(points)
    return np.einsum("...i,...ij->...j", u, g)


def default_resolution(fld: AnalyticField) -> float:
    return settings.QUAD_RESOLUTION * fld.length_scale


def surface_rule(fld: AnalyticField, surface: Surface, order: Optional[int] = None) -> QuadratureRule:
    """Rule with panels sized from the field's length scale."""
    return surface_quadrature(surface, order, default_resolution(fld))


def convective_flux(fld: AnalyticField, surface: Surface, quad: Optional[QuadratureRule] = None,
                    order: Optional[int] = None) -> float:
    """Integral of (u . grad u) . n over the surface."""
    rule = quad if quad is not None else surface_rule(fld, surface, order)
    nodes = surface_nodes(surface, rule)
    if nodes.weights.size == 0:
        raise FluxError(f"empty quadrature rule for {surface.kind}")
    integrand = np.einsum("nj,nj->n", convective_term(fld, nodes.points), nodes.normals)
    return float(np.dot(nodes.weights, integrand))


def riemann_surface_flux(fld: AnalyticField, surface: Surface, cells: Tuple[int, int] = (1000, 1000)) -> float:
    """Midpoint-rule reference value of the same flux, cell by cell in (s, t)."""
    ns, nt = cells
    t = (np.arange(nt) + 0.5) / nt
    total = 0.0
    for i in range(ns):
        s = np.full(nt, (i + 0.5) / ns)
        pts = surface.point(s, t)
        flux = np.einsum("nj,nj->n", convective_term(fld, pts), surface.normal(s, t))
        total += float(np.sum(flux * surface.jacobian(s, t)))
    return total / (ns * nt)


def unrolled_cylinder_flux(fld: AnalyticField, cyl: CylinderSegment, order: Optional[int] = None) -> float:
    """Cylinder flux on the unrolled rectangle (x1, arc length) with Gauss-Legendre in both sides.

    Unit Jacobian: the arc length sigma in [0, 2 pi R] is a physical coordinate.
    """
    order = settings.QUAD_ORDER if order is None else int(order)
    res = default_resolution(fld)
    panels = lambda length: max(1, int(np.ceil(length / res)))  # noqa: E731
    x1, w1 = gauss_legendre_panels(order, panels(cyl.length), cyl.x1_lo, cyl.x1_hi)
    arc = 2 * np.pi * cyl.radius
    sig, ws = gauss_legendre_panels(order, panels(arc), 0.0, arc)
    X1, SIG = np.meshgrid(x1, sig, indexing="ij")
    phi = SIG / cyl.radius
    pts = np.stack([X1, cyl.radius * np.cos(phi), cyl.radius * np.sin(phi)], axis=-1).reshape(-1, 3)
    normals = cyl.orientation * np.stack([np.zeros_like(phi), np.cos(phi), np.sin(phi)], axis=-1).reshape(-1, 3)
    integrand = np.einsum("nj,nj->n", convective_term(fld, pts), normals)
    return float(np.dot(np.outer(w1, ws).ravel(), integrand))


def _line_integral(fn, start: np.ndarray, direction: np.ndarray, length: float, order: int, res: float) -> float:
    s, w = gauss_legendre_panels(order, max(1, int(np.ceil(length / res))), 0.0, length)
    return float(np.dot(w, fn(start + s[:, None] * direction)))


def rectangle_flux_decomposition(fld: AnalyticField, rect: Rectangle, order: Optional[int] = None) -> Dict[str, float]:
    """Flux through a rectangle split by integration by parts along its edges.

    With orthonormal edge directions a, b and normal n, solenoidality gives
    u . grad u_n = d_a(u_a u_n) + d_b(u_b u_n) + d_n(u_n^2), so the flux equals
    2 * int u_n d_n u_n plus the jumps of u_a u_n and u_b u_n across opposite edges.
    """
    order = settings.QUAD_ORDER if order is None else int(order)
    la, lb = rect.side_lengths
    if abs(np.dot(rect.edge_a, rect.edge_b)) > 1e-12 * la * lb:
        raise FluxError("flux decomposition needs orthogonal rectangle edges")
    ea, eb = rect.edge_a / la, rect.edge_b / lb
    en = rect.orientation * np.cross(ea, eb)
    res = default_resolution(fld)

    rule = surface_rule(fld, rect, order)
    nodes = surface_nodes(rect, rule)
    u = fld.eval(nodes.points)
    g = fld.grad(nodes.points)
    u_n = u @ en
    dn_un = np.einsum("i,nij,j->n", en, g, en)
    normal_term = 2.0 * float(np.dot(nodes.weights, u_n * dn_un))

    def product(e):
        return lambda pts: (fld.eval(pts) @ e) * (fld.eval(pts) @ en)

    a_term = (_line_integral(product(ea), rect.origin + rect.edge_a, eb, lb, order, res)
              - _line_integral(product(ea), rect.origin, eb, lb, order, res))
    b_term = (_line_integral(product(eb), rect.origin + rect.edge_b, ea, la, order, res)
              - _line_integral(product(eb), rect.origin, ea, la, order, res))
    flux = convective_flux(fld, rect, rule)
    return {
        "flux": flux,
        "normal_term": normal_term,
        "edge_a_term": a_term,
        "edge_b_term": b_term,
        "residual": flux - (normal_term + a_term + b_term),
    }
