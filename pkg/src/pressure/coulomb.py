"""Pressure gradient from Coulomb's law.

    K(x) = int q(y) (x - y) / |x - y|^3 dy,    grad P(x) = K(x) / (4 pi)

In spherical coordinates about x the kernel singularity cancels against
the volume element, leaving K(x) = -int_0^R int_S2 q(x + rho w) w dw drho.
The radial integral runs through scipy's adaptive ``quad_vec``; the sphere
uses Gauss-Legendre in cos(theta) and the midpoint rule in phi.
"""
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad_vec

from src.api.schemas import PressureReport
from src.errors import PressureError
from src.fields.analytic import AnalyticField
from src.logging.logger import get_logger
from src.pressure.charges import charge_density

logger = get_logger(__name__)

FOUR_PI = 4.0 * np.pi


def sphere_rule(n_theta: int) -> Tuple[np.ndarray, np.ndarray]:
    """Directions (N, 3) and weights summing to 4 pi."""
    mu, w_mu = leggauss(n_theta)
    n_phi = 2 * n_theta
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    sin_t = np.sqrt(1.0 - mu ** 2)
    dirs = np.stack([
        np.repeat(mu, n_phi),
        np.outer(sin_t, np.cos(phi)).ravel(),
        np.outer(sin_t, np.sin(phi)).ravel(),
    ], axis=-1)
    weights = np.repeat(w_mu, n_phi) * (2 * np.pi / n_phi)
    return dirs, weights


def angular_resolution(radius: float, length_scale: float) -> int:
    return int(np.clip(np.ceil(3.0 * np.pi * radius / length_scale), 24, 192))


def coulomb_kernel(fld: AnalyticField, x, r_outer: float, r_excl: float,
                   n_theta: Optional[int] = None, epsrel: float = 1e-9) -> Tuple[np.ndarray, float]:
    """Un-normalised K(x) over r_excl < |y - x| < r_outer and the radial error estimate."""
    x = np.asarray(x, dtype=float)
    n_theta = n_theta or angular_resolution(r_outer, fld.length_scale)
    dirs, weights = sphere_rule(n_theta)

    def shell(rho):
        q = charge_density(fld, x + rho * dirs)
        return -(weights * q) @ dirs

    value, err = quad_vec(shell, r_excl, r_outer, epsrel=epsrel, epsabs=1e-13, limit=400)
    return np.asarray(value), float(err)


def grad_pressure_coulomb(fld: AnalyticField, x, r_outer: Optional[float] = None, r_excl: float = 1e-3,
                          n_theta: Optional[int] = None, acknowledge_truncation: bool = False) -> PressureReport:
    """grad P(x) from the Coulomb integral with the ball |y - x| < r_excl left out.

    For a field supported in a ball about the origin ``r_outer`` defaults to
    the radius that encloses the whole support; non-decaying fields need an
    explicit ``r_outer`` and ``acknowledge_truncation``.
    """
    x = np.asarray(x, dtype=float)
    if r_excl <= 0:
        raise PressureError("exclusion radius must be positive")
    support = fld.support_radius
    enclosing = None if support is None else support + float(np.linalg.norm(x))
    if r_outer is None:
        if enclosing is None:
            raise PressureError(f"field '{fld.name}' does not decay; pass r_outer and acknowledge the truncation")
        r_outer = enclosing
    truncated = enclosing is None or r_outer < enclosing
    if truncated and not acknowledge_truncation:
        raise PressureError(f"Coulomb integral over radius {r_outer} truncates the charge of '{fld.name}'")
    if r_outer <= r_excl:
        raise PressureError("outer radius must exceed the exclusion radius")

    kernel, radial_err = coulomb_kernel(fld, x, r_outer, r_excl, n_theta)
    # the excluded ball holds at most 4 pi r_excl |q|_inf of kernel mass
    dirs, _ = sphere_rule(8)
    q_near = np.max(np.abs(charge_density(fld, x + r_excl * dirs)))
    q_near = max(q_near, abs(charge_density(fld, x)))
    exclusion = FOUR_PI * r_excl * q_near
    logger.debug("coulomb integral done", point=x.tolist(), r_outer=r_outer, r_excl=r_excl, radial_err=radial_err)
    return PressureReport(
        method="coulomb",
        point=x.tolist(),
        grad_p=(kernel / FOUR_PI).tolist(),
        error_estimate=(exclusion + radial_err) / FOUR_PI,
        truncation={"r_excl": r_excl, "r_outer": r_outer, "truncated": truncated},
        extra={"kernel": kernel.tolist(), "exclusion_estimate": exclusion / FOUR_PI},
    )
