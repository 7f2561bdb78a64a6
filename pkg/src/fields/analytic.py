"""Closed-form divergence-free velocity fields with exact gradients.

Every field maps positions of shape ``(..., 3)`` to velocities ``(..., 3)``
and gradients ``(..., 3, 3)`` with ``grad[..., i, j] = d_i u_j``. Evaluation
is vectorised and chunked, so large quadrature node sets are safe.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from src.errors import FieldError
from src.logging.logger import get_logger

logger = get_logger(__name__)

_CHUNK = 8192


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 3:
        raise FieldError(f"positions must have a trailing axis of length 3, got shape {pts.shape}")
    return pts


def _chunked(fn: Callable[[np.ndarray], np.ndarray], pts: np.ndarray, tail: tuple) -> np.ndarray:
    flat = pts.reshape(-1, 3)
    out = np.empty((flat.shape[0],) + tail)
    for start in range(0, flat.shape[0], _CHUNK):
        out[start:start + _CHUNK] = fn(flat[start:start + _CHUNK])
    return out.reshape(pts.shape[:-1] + tail)


class AnalyticField(ABC):
    """A divergence-free field known in closed form.

    ``support_radius`` is the radius of a ball about the origin that contains
    the support (None for fields that do not decay). ``length_scale`` is the
    shortest length over which the field varies appreciably; quadrature
    panels are sized from it.
    """

    name: str = "analytic"
    support_radius: Optional[float] = None
    length_scale: float = 1.0

    @abstractmethod
    def _velocity(self, x: np.ndarray) -> np.ndarray:
        """Velocity at an (N, 3) array of points."""

    @abstractmethod
    def _gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient tensor at an (N, 3) array of points, shape (N, 3, 3)."""

    @property
    def params(self) -> Dict[str, Any]:
        return {}

    def eval(self, x) -> np.ndarray:
        pts = _as_points(x)
        return _chunked(self._velocity, pts, (3,))

    def grad(self, x) -> np.ndarray:
        pts = _as_points(x)
        return _chunked(self._gradient, pts, (3, 3))

    def descriptor(self) -> Dict[str, Any]:
        return {"name": self.name, "params": self.params}

    def shifted(self, velocity) -> "AnalyticField":
        """Same field seen from a frame moving with constant ``velocity``."""
        return ShiftedField(self, np.asarray(velocity, dtype=float))

    def rescaled(self, s: float) -> "AnalyticField":
        """The field x -> u(x / s)."""
        return RescaledField(self, float(s))

    def moved(self, offset=(0.0, 0.0, 0.0), rotation=None) -> "AnalyticField":
        """The field x -> Q u(Q^T x + offset), so that the new origin sits at ``offset``."""
        q = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        if not np.allclose(q @ q.T, np.eye(3), atol=1e-12):
            raise FieldError("rotation must be orthogonal")
        return MovedField(self, np.asarray(offset, dtype=float), q)


@dataclass(frozen=True, eq=False)
class ConstantField(AnalyticField):
    c: np.ndarray
    name: str = "constant"

    @property
    def params(self):
        return {"c": self.c.tolist()}

    def _velocity(self, x):
        return np.broadcast_to(self.c, x.shape)

    def _gradient(self, x):
        return np.zeros((x.shape[0], 3, 3))


@dataclass(frozen=True, eq=False)
class ShearField(AnalyticField):
    """u = (a x_2, 0, 0)."""

    a: float = 1.0
    name: str = "shear"

    @property
    def params(self):
        return {"a": self.a}

    def _velocity(self, x):
        out = np.zeros_like(x)
        out[:, 0] = self.a * x[:, 1]
        return out

    def _gradient(self, x):
        out = np.zeros((x.shape[0], 3, 3))
        out[:, 1, 0] = self.a
        return out


@dataclass(frozen=True, eq=False)
class TaylorGreenField(AnalyticField):
    """2D Taylor-Green vortex u = U (cos x sin y, -sin x cos y, 0), embedded in 3D."""

    amplitude: float = 1.0
    name: str = "taylor_green"

    @property
    def params(self):
        return {"amplitude": self.amplitude}

    def _velocity(self, x):
        a = self.amplitude
        out = np.zeros_like(x)
        out[:, 0] = a * np.cos(x[:, 0]) * np.sin(x[:, 1])
        out[:, 1] = -a * np.sin(x[:, 0]) * np.cos(x[:, 1])
        return out

    def _gradient(self, x):
        a = self.amplitude
        cx, sx = np.cos(x[:, 0]), np.sin(x[:, 0])
        cy, sy = np.cos(x[:, 1]), np.sin(x[:, 1])
        out = np.zeros((x.shape[0], 3, 3))
        out[:, 0, 0] = -a * sx * sy
        out[:, 1, 0] = a * cx * cy
        out[:, 0, 1] = -a * cx * cy
        out[:, 1, 1] = a * sx * sy
        return out


@dataclass(frozen=True, eq=False)
class ABCField(AnalyticField):
    """Arnold-Beltrami-Childress flow; curl u = u."""

    A: float = 1.0
    B: float = 1.0
    C: float = 1.0
    name: str = "abc"

    @property
    def params(self):
        return {"A": self.A, "B": self.B, "C": self.C}

    def _velocity(self, x):
        X, Y, Z = x[:, 0], x[:, 1], x[:, 2]
        return np.stack([
            self.A * np.sin(Z) + self.C * np.cos(Y),
            self.B * np.sin(X) + self.A * np.cos(Z),
            self.C * np.sin(Y) + self.B * np.cos(X),
        ], axis=-1)

    def _gradient(self, x):
        X, Y, Z = x[:, 0], x[:, 1], x[:, 2]
        out = np.zeros((x.shape[0], 3, 3))
        out[:, 0, 1] = self.B * np.cos(X)
        out[:, 0, 2] = -self.B * np.sin(X)
        out[:, 1, 0] = -self.C * np.sin(Y)
        out[:, 1, 2] = self.C * np.cos(Y)
        out[:, 2, 0] = self.A * np.cos(Z)
        out[:, 2, 1] = -self.A * np.sin(Z)
        return out


@dataclass(frozen=True, eq=False)
class CurlPotentialField(AnalyticField):
    """Sum of compactly supported swirls u = curl(phi(|x - c|) a).

    phi(r) = (1 - r^2/R^2)^m inside the ball of radius R, zero outside, so
    u = g(r) (d x a) with d = x - c and g = phi'(r)/r. The field is C^(m-2)
    and vanishes outside the union of the balls.
    """

    centers: np.ndarray
    axes: np.ndarray
    radius: float = 1.0
    power: int = 8
    name: str = "curl_potential"

    def __post_init__(self):
        if self.centers.shape != self.axes.shape or self.centers.ndim != 2 or self.centers.shape[1] != 3:
            raise FieldError("centers and axes must be matching (k, 3) arrays")
        if self.radius <= 0 or self.power < 4:
            raise FieldError("curl_potential needs radius > 0 and power >= 4")

    @property
    def params(self):
        return {
            "centers": self.centers.tolist(),
            "axes": self.axes.tolist(),
            "radius": self.radius,
            "power": self.power,
        }

    @property
    def support_radius(self) -> float:  # type: ignore[override]
        return float(np.max(np.linalg.norm(self.centers, axis=1)) + self.radius)

    @property
    def length_scale(self) -> float:  # type: ignore[override]
        return self.radius / np.sqrt(self.power)

    def _profile(self, d: np.ndarray):
        """g(r) and g'(r)/r for each row of d."""
        R2, m = self.radius ** 2, self.power
        s = np.sum(d * d, axis=-1) / R2
        inside = s < 1.0
        one_minus = np.where(inside, 1.0 - s, 0.0)
        g = -2.0 * m / R2 * one_minus ** (m - 1)
        gp_over_r = 4.0 * m * (m - 1) / R2 ** 2 * one_minus ** (m - 2)
        return g, gp_over_r

    def _velocity(self, x):
        out = np.zeros_like(x)
        for c, a in zip(self.centers, self.axes):
            d = x - c
            g, _ = self._profile(d)
            out += g[:, None] * np.cross(d, a)
        return out

    def _gradient(self, x):
        out = np.zeros((x.shape[0], 3, 3))
        for c, a in zip(self.centers, self.axes):
            d = x - c
            g, gp_over_r = self._profile(d)
            dxa = np.cross(d, a)
            # d_i (d x a)_j = (e_i x a)_j
            exa = np.cross(np.eye(3), a)
            out += gp_over_r[:, None, None] * d[:, :, None] * dxa[:, None, :]
            out += g[:, None, None] * exa[None, :, :]
        return out


@dataclass(frozen=True, eq=False)
class FourierField(AnalyticField):
    """Trigonometric polynomial u(x) = sum_m Re(c_m exp(i k_m . (x - origin))).

    Built from a band-limited :class:`GridField`; evaluation is exact at any
    off-grid point.
    """

    k: np.ndarray
    coeffs: np.ndarray
    origin: float = 0.0
    box: float = 2.0 * np.pi
    meta: Dict[str, Any] = field(default_factory=dict)
    name: str = "fourier"

    @property
    def params(self):
        return dict(self.meta, modes=int(self.k.shape[0]), box=self.box)

    @property
    def length_scale(self) -> float:  # type: ignore[override]
        kmax = float(np.max(np.linalg.norm(self.k, axis=1))) if self.k.size else 0.0
        return 1.0 / kmax if kmax > 0 else self.box

    def _phases(self, x):
        return np.exp(1j * ((x - self.origin) @ self.k.T))

    def _velocity(self, x):
        if self.k.size == 0:
            return np.zeros_like(x)
        return (self._phases(x) @ self.coeffs).real

    def _gradient(self, x):
        if self.k.size == 0:
            return np.zeros((x.shape[0], 3, 3))
        e = self._phases(x)
        # d_i u_j = Re(sum_m i k_mi c_mj e_m)
        return np.einsum("nm,mi,mj->nij", e, 1j * self.k, self.coeffs).real


@dataclass(frozen=True, eq=False)
class ShiftedField(AnalyticField):
    base: AnalyticField
    velocity: np.ndarray

    @property
    def name(self):  # type: ignore[override]
        return self.base.name

    @property
    def params(self):
        return dict(self.base.params, shift=self.velocity.tolist())

    @property
    def support_radius(self):  # type: ignore[override]
        # a moving frame sees a non-decaying field unless the shift is zero
        return None if np.any(self.velocity) else self.base.support_radius

    @property
    def length_scale(self):  # type: ignore[override]
        return self.base.length_scale

    def _velocity(self, x):
        return self.base._velocity(x) - self.velocity

    def _gradient(self, x):
        return self.base._gradient(x)


@dataclass(frozen=True, eq=False)
class RescaledField(AnalyticField):
    base: AnalyticField
    scale: float

    @property
    def name(self):  # type: ignore[override]
        return self.base.name

    @property
    def params(self):
        return dict(self.base.params, rescale=self.scale)

    @property
    def support_radius(self):  # type: ignore[override]
        r = self.base.support_radius
        return None if r is None else r * self.scale

    @property
    def length_scale(self):  # type: ignore[override]
        return self.base.length_scale * self.scale

    def _velocity(self, x):
        return self.base._velocity(x / self.scale)

    def _gradient(self, x):
        return self.base._gradient(x / self.scale) / self.scale


@dataclass(frozen=True, eq=False)
class MovedField(AnalyticField):
    base: AnalyticField
    offset: np.ndarray
    rotation: np.ndarray

    @property
    def name(self):  # type: ignore[override]
        return self.base.name

    @property
    def params(self):
        return dict(self.base.params, offset=self.offset.tolist(), rotation=self.rotation.tolist())

    @property
    def support_radius(self):  # type: ignore[override]
        r = self.base.support_radius
        return None if r is None else r + float(np.linalg.norm(self.offset))

    @property
    def length_scale(self):  # type: ignore[override]
        return self.base.length_scale

    def _velocity(self, x):
        q = self.rotation
        return self.base._velocity(x @ q + self.offset) @ q.T

    def _gradient(self, x):
        q = self.rotation
        g = self.base._gradient(x @ q + self.offset)
        return np.einsum("im,nml,jl->nij", q, g, q)


def _vector(params: Dict[str, Any], key: str, default) -> np.ndarray:
    v = np.asarray(params.get(key, default), dtype=float)
    if v.shape != (3,):
        raise FieldError(f"parameter '{key}' must be a 3-vector")
    return v


def _make_curl_potential(params: Dict[str, Any]) -> CurlPotentialField:
    centers = np.atleast_2d(np.asarray(params.get("centers", [[0.5, 0.2, -0.1], [-0.3, -0.4, 0.3]]), dtype=float))
    axes = np.atleast_2d(np.asarray(params.get("axes", [[0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]), dtype=float))
    return CurlPotentialField(
        centers=centers,
        axes=axes,
        radius=float(params.get("radius", 1.0)),
        power=int(params.get("power", 8)),
    )


_FACTORIES: Dict[str, Callable[[Dict[str, Any]], AnalyticField]] = {
    "constant": lambda p: ConstantField(c=_vector(p, "c", (1.0, 2.0, 3.0))),
    "shear": lambda p: ShearField(a=float(p.get("a", 1.0))),
    "taylor_green": lambda p: TaylorGreenField(amplitude=float(p.get("amplitude", 1.0))),
    "abc": lambda p: ABCField(A=float(p.get("A", 1.0)), B=float(p.get("B", 1.0)), C=float(p.get("C", 1.0))),
    "curl_potential": _make_curl_potential,
}


def make_standard_field(name: str, params: Optional[Dict[str, Any]] = None) -> AnalyticField:
    """Build one of the closed-form test fields by name.

    All constructions are exactly divergence-free, so no parameter choice can
    break solenoidality; malformed parameters raise :class:`FieldError`.
    """
    factory = _FACTORIES.get(name)
    if factory is None:
        raise FieldError(f"unknown field '{name}'; expected one of {sorted(_FACTORIES)}")
    try:
        built = factory(dict(params or {}))
    except (TypeError, ValueError) as e:
        raise FieldError(f"invalid parameters for field '{name}': {e}") from e
    logger.debug("field constructed", field=name, params=built.params)
    return built


def fd_gradient_error(fld: AnalyticField, points, h: float = 1e-4) -> float:
    """Max relative error between ``grad`` and central differences of ``eval``."""
    pts = _as_points(points).reshape(-1, 3)
    exact = fld.grad(pts)
    approx = np.empty_like(exact)
    for i in range(3):
        step = np.zeros(3)
        step[i] = h
        approx[:, i, :] = (fld.eval(pts + step) - fld.eval(pts - step)) / (2.0 * h)
    scale = max(float(np.max(np.abs(exact))), 1e-300)
    return float(np.max(np.abs(exact - approx)) / scale)
