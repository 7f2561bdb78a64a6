"""Spectral operators on periodic boxes.

All transforms go through ``scipy.fft`` with the worker count taken from
settings. Vector arrays follow the ``(component, ix, iy, iz)`` layout used by
:class:`~src.fields.grid.GridField`; scalar helpers act on the trailing
``ndim`` axes.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.fft as sfft

from src.config import settings


def fftn(a: np.ndarray, ndim: int = 3) -> np.ndarray:
    return sfft.fftn(a, axes=tuple(range(-ndim, 0)), workers=settings.workers)


def ifftn_real(a_hat: np.ndarray, ndim: int = 3) -> np.ndarray:
    return sfft.ifftn(a_hat, axes=tuple(range(-ndim, 0)), workers=settings.workers).real


@lru_cache(maxsize=32)
def _wavenumbers(shape: Tuple[int, ...], box: float) -> np.ndarray:
    freqs = [sfft.fftfreq(m, d=box / m) * 2.0 * np.pi for m in shape]
    k = np.stack(np.meshgrid(*freqs, indexing="ij"))
    k.setflags(write=False)
    return k


def wavenumbers(shape: Tuple[int, ...], box: float) -> np.ndarray:
    """Angular wavenumber mesh of shape ``(d,) + shape`` for a box of side ``box``."""
    return _wavenumbers(tuple(int(m) for m in shape), float(box))


def k_squared(shape: Tuple[int, ...], box: float) -> np.ndarray:
    k = wavenumbers(shape, box)
    return np.sum(k * k, axis=0)


def integer_modes(shape: Tuple[int, ...]) -> np.ndarray:
    """Integer mode numbers (as floats) of shape ``(d,) + shape``."""
    freqs = [sfft.fftfreq(m, d=1.0 / m) for m in shape]
    return np.stack(np.meshgrid(*freqs, indexing="ij"))


def dealias_mask(n: int, ndim: int = 3) -> np.ndarray:
    """2/3-rule mask: True where every |k_i| < n/3."""
    return np.all(np.abs(integer_modes((n,) * ndim)) < n / 3.0, axis=0)


def nyquist_mask(shape: Tuple[int, ...]) -> np.ndarray:
    """True on every plane where an even-length axis sits at its Nyquist mode -m/2."""
    modes = integer_modes(shape)
    planes = [modes[i] == -(m // 2) for i, m in enumerate(shape) if m % 2 == 0]
    return np.any(planes, axis=0) if planes else np.zeros(shape, dtype=bool)


def leray_project_hat(u_hat: np.ndarray, box: float) -> np.ndarray:
    """Remove the gradient part: u_hat - k (k . u_hat) / |k|^2, leaving k = 0 untouched.

    Nyquist planes are zeroed in every component first: ``fftfreq`` gives them
    the one-sided wavenumber -n/2, and projecting them would break the
    Hermitian symmetry of the result.
    """
    k = wavenumbers(u_hat.shape[1:], box)
    u_hat = np.where(nyquist_mask(u_hat.shape[1:]), 0.0, u_hat)
    k2 = np.sum(k * k, axis=0)
    k_dot_u = np.sum(k * u_hat, axis=0)
    return u_hat - k * (k_dot_u / np.where(k2 == 0.0, 1.0, k2))


def velocity_gradient(u_hat: np.ndarray, box: float) -> np.ndarray:
    """Real-space gradient tensor ``G[i, j] = d_i u_j`` of shape (3, 3, n, n, n)."""
    k = wavenumbers(u_hat.shape[1:], box)
    return ifftn_real(1j * k[:, None] * u_hat[None, :])


def divergence(u_hat: np.ndarray, box: float) -> np.ndarray:
    k = wavenumbers(u_hat.shape[1:], box)
    return ifftn_real(np.sum(1j * k * u_hat, axis=0))


def scalar_gradient(f_hat: np.ndarray, box: float, ndim: int = 3) -> np.ndarray:
    """Real-space gradient of a scalar spectrum, shape ``(ndim,) + f_hat.shape``."""
    k = wavenumbers(f_hat.shape[-ndim:], box)
    k = k.reshape((ndim,) + (1,) * (f_hat.ndim - ndim) + k.shape[1:])
    return ifftn_real(1j * k * f_hat[None], ndim=ndim)


def pad_spectrum(f_hat: np.ndarray, m: int, ndim: int = 3) -> np.ndarray:
    """Zero-pad a spectrum from n to m >= n points per axis.

    The inverse transform of the result samples the same trigonometric
    polynomial on the finer grid. The source Nyquist planes are dropped, so
    this is exact for band-limited data (every |k_i| < n/2).
    """
    n = f_hat.shape[-1]
    if m < n:
        raise ValueError("target size must not be smaller than the source")
    half = (n - 1) // 2
    src_idx = np.r_[0:half + 1, n - half:n]
    dst_idx = np.r_[0:half + 1, m - half:m]
    out = np.zeros(f_hat.shape[:-ndim] + (m,) * ndim, dtype=complex)
    out[(Ellipsis,) + np.ix_(*([dst_idx] * ndim))] = f_hat[(Ellipsis,) + np.ix_(*([src_idx] * ndim))]
    return out * (m / n) ** ndim
