"""Charge density q = -sum_ij d_i u_j d_j u_i of a solenoidal field.

For divergence-free u this equals -div(u . grad u), the source of the
pressure Poisson equation laplace(P) = q.
"""
import numpy as np

from src.fields.analytic import AnalyticField
from src.fields.grid import GridField


def charge_density(fld: AnalyticField, x) -> np.ndarray:
    g = fld.grad(x)
    q = -np.einsum("...ij,...ji->...", g, g)
    return float(q) if q.ndim == 0 else q


def charge_density_grid(grid: GridField) -> np.ndarray:
    """q on the grid nodes, from the spectral gradient."""
    g = grid.gradient()
    return -np.einsum("ij...,ji...->...", g, g)
