"""Velocity fields sampled on a periodic box."""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

import numpy as np

from src.errors import FieldError
from src.fields import spectral
from src.fields.analytic import AnalyticField, FourierField
from src.logging.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class GridField:
    """n^3 samples of a periodic vector field on [origin, origin + box)^3.

    ``u`` has shape (3, n, n, n) indexed ``[component, ix, iy, iz]``; grid
    point (ix, iy, iz) sits at ``origin + box * (ix, iy, iz) / n``.
    """

    u: np.ndarray
    box: float = 2.0 * np.pi
    origin: float = 0.0
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.u.ndim != 4 or self.u.shape[0] != 3 or len(set(self.u.shape[1:])) != 1:
            raise FieldError(f"grid data must have shape (3, n, n, n), got {self.u.shape}")
        if self.box <= 0:
            raise FieldError("box length must be positive")

    @property
    def n(self) -> int:
        return int(self.u.shape[1])

    @property
    def spacing(self) -> float:
        return self.box / self.n

    def coordinates(self) -> np.ndarray:
        """Grid positions, shape (3, n, n, n)."""
        x = self.origin + self.spacing * np.arange(self.n)
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    def spectrum(self) -> np.ndarray:
        return spectral.fftn(self.u)

    def with_data(self, u: np.ndarray) -> "GridField":
        return replace(self, u=u)

    def gradient(self) -> np.ndarray:
        """Spectral gradient tensor ``G[i, j] = d_i u_j``, shape (3, 3, n, n, n)."""
        return spectral.velocity_gradient(self.spectrum(), self.box)

    def divergence_residual(self) -> float:
        """max_x |div u| computed spectrally."""
        return float(np.max(np.abs(spectral.divergence(self.spectrum(), self.box))))

    def refined(self, m: int) -> "GridField":
        """Trigonometric interpolation of the same field onto an m^3 grid."""
        u_hat = spectral.pad_spectrum(self.spectrum(), m)
        return replace(self, u=spectral.ifftn_real(u_hat))

    def to_analytic(self, rel_threshold: float = 1e-14) -> FourierField:
        """Exact off-grid evaluator built from the non-negligible Fourier modes."""
        u_hat = self.spectrum() / self.n ** 3
        amp = np.max(np.abs(u_hat), axis=0)
        peak = float(np.max(amp)) if amp.size else 0.0
        keep = amp > rel_threshold * peak if peak > 0 else np.zeros_like(amp, dtype=bool)
        k = spectral.wavenumbers(u_hat.shape[1:], self.box)
        k_modes = np.stack([k[i][keep] for i in range(3)], axis=-1)
        coeffs = np.stack([u_hat[i][keep] for i in range(3)], axis=-1)
        return FourierField(k=k_modes, coeffs=coeffs, origin=self.origin, box=self.box, meta=dict(self.meta))


def sample_on_grid(fld: AnalyticField, n: int, box: float = 2.0 * np.pi, origin: float = 0.0) -> GridField:
    """Sample a closed-form field on the periodic grid (no projection applied)."""
    if n < 2:
        raise FieldError("grid needs at least two points per axis")
    x = origin + box / n * np.arange(n)
    pts = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    u = np.moveaxis(fld.eval(pts), -1, 0)
    return GridField(u=np.ascontiguousarray(u), box=box, origin=origin, meta={"source": fld.descriptor()})


def leray_project(grid: GridField) -> GridField:
    """Orthogonal projection onto divergence-free fields (k = 0 mean kept, Nyquist planes dropped)."""
    u_hat = spectral.leray_project_hat(grid.spectrum(), grid.box)
    return grid.with_data(spectral.ifftn_real(u_hat))


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def random_solenoidal(
    seed: int,
    k_max: float,
    amplitude: float = 1.0,
    n: int = 32,
    box: float = 2.0 * np.pi,
    origin: float = 0.0,
) -> GridField:
    """Band-limited random divergence-free field with |u|_inf equal to ``amplitude``.

    White noise is filtered to integer mode numbers 0 < |k| <= k_max, Leray
    projected, and normalised to the requested sup norm. The same seed gives
    bit-identical data.
    """
    if not _is_power_of_two(n):
        raise FieldError(f"grid size must be a power of two, got {n}")
    if not k_max < n / 3.0:
        raise FieldError(f"k_max={k_max} leaves no dealiasing headroom on an n={n} grid (need k_max < n/3)")
    if amplitude <= 0:
        raise FieldError("amplitude must be positive")

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3, n, n, n))
    modes = spectral.integer_modes((n, n, n))
    radius = np.sqrt(np.sum(modes * modes, axis=0))
    band = (radius > 0) & (radius <= k_max)
    u_hat = spectral.fftn(noise) * band
    u_hat = spectral.leray_project_hat(u_hat, box)
    u = spectral.ifftn_real(u_hat)

    peak = float(np.max(np.abs(u)))
    if peak > 0:
        u *= amplitude / peak
    meta = {"seed": int(seed), "k_max": float(k_max), "amplitude": float(amplitude)}
    logger.debug("random solenoidal field generated", **meta, n=n, active_modes=int(band.sum()))
    return GridField(u=u, box=box, origin=origin, meta=meta)
