"""Pressure gradient on the torus from laplace(P) = -div(u . grad u)."""
from typing import Tuple

import numpy as np

from src.errors import PressureError
from src.fields import spectral
from src.fields.grid import GridField
from src.logging.logger import get_logger

logger = get_logger(__name__)


def convective_grid(grid: GridField) -> np.ndarray:
    """(u . grad) u on the grid nodes, shape (3, n, n, n)."""
    return np.einsum("i...,ij...->j...", grid.u, grid.gradient())


def solve_pressure_hat(n_hat: np.ndarray, box: float) -> Tuple[np.ndarray, np.ndarray]:
    """Zero-mean P_hat and grad P_hat for a convective spectrum ``n_hat``.

    -|k|^2 P_hat = -i k . N_hat, so grad P_hat = -k (k . N_hat) / |k|^2.
    """
    k = spectral.wavenumbers(n_hat.shape[1:], box)
    k2 = np.sum(k * k, axis=0)
    k_dot_n = np.sum(k * n_hat, axis=0)
    safe = np.where(k2 == 0.0, 1.0, k2)
    p_hat = np.where(k2 == 0.0, 0.0, 1j * k_dot_n / safe)
    return p_hat, -k * (k_dot_n / safe)


def grad_pressure_spectral(grid: GridField, refine: int = 1, div_tol: float = 1e-8) -> GridField:
    """grad P sampled on the grid (or on a grid ``refine`` times finer).

    With ``refine == 1`` the product u . grad u is formed on the native grid
    and the 2/3 rule removes aliased modes. With ``refine >= 2`` it is formed
    on the finer grid, where the product of a band-limited field is exact.
    """
    scale = max(float(np.max(np.abs(grid.u))), 1e-300)
    residual = grid.divergence_residual()
    if residual > div_tol * scale:
        raise PressureError(f"input is not solenoidal: max|div u| = {residual:.3e}")
    if refine < 1:
        raise PressureError("refine must be a positive integer")

    work = grid.refined(grid.n * refine) if refine > 1 else grid
    n_hat = spectral.fftn(convective_grid(work))
    if refine == 1:
        n_hat = n_hat * spectral.dealias_mask(work.n)
    p_hat, gp_hat = solve_pressure_hat(n_hat, work.box)

    k = spectral.wavenumbers(p_hat.shape, work.box)
    k2 = np.sum(k * k, axis=0)
    div_n = np.sum(1j * k * n_hat, axis=0)
    poisson = np.max(np.abs(spectral.ifftn_real(-k2 * p_hat + div_n)))
    source = np.max(np.abs(spectral.ifftn_real(div_n)))
    logger.debug("spectral pressure solved", n=work.n, poisson_residual=float(poisson), source=float(source))
    meta = {
        "method": "spectral",
        "n": work.n,
        "refine": refine,
        "poisson_residual": float(poisson),
        "source_sup": float(source),
        "div_residual": residual,
    }
    return GridField(u=spectral.ifftn_real(gp_hat), box=work.box, origin=work.origin, meta=meta)


def pressure_grid(grid: GridField) -> np.ndarray:
    """Zero-mean pressure on the grid nodes (2/3-dealiased product)."""
    n_hat = spectral.fftn(convective_grid(grid)) * spectral.dealias_mask(grid.n)
    p_hat, _ = solve_pressure_hat(n_hat, grid.box)
    return spectral.ifftn_real(p_hat)
