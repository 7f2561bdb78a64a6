"""Oriented parameterised surface patches over the unit square (s, t).

Every patch except the rectangle is a surface of revolution about the
x1-axis and uses ``t`` as the azimuth phi = 2 pi t, so its integrands are
periodic in ``t``. ``orientation`` flips the normal; ``+1`` means +e1 for
discs and annuli, radially outward for cylinders, and towards increasing
h for level caps.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Any, ClassVar, Dict, Tuple

import numpy as np

from src.errors import GeometryError

TWO_PI = 2.0 * np.pi


def _azimuth_frame(t):
    phi = TWO_PI * np.asarray(t, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    zero = np.zeros_like(c)
    e_rad = np.stack([zero, c, s], axis=-1)
    e_phi = np.stack([zero, -s, c], axis=-1)
    return c, s, e_rad, e_phi


class Surface(ABC):
    kind: ClassVar[str] = "surface"
    periodic_t: ClassVar[bool] = True
    orientation: int

    @abstractmethod
    def point(self, s, t) -> np.ndarray:
        """Position for parameters (s, t), shape broadcast(s, t) + (3,)."""

    @abstractmethod
    def tangents(self, s, t) -> Tuple[np.ndarray, np.ndarray]:
        """Partial derivatives of ``point`` with respect to s and t."""

    @abstractmethod
    def _unit_normal(self, s, t) -> np.ndarray:
        """Unit normal for orientation +1."""

    @abstractmethod
    def extent(self) -> Tuple[float, float]:
        """Characteristic physical lengths along s and t (for panel counts)."""

    @abstractmethod
    def params(self) -> Dict[str, Any]:
        pass

    def normal(self, s, t) -> np.ndarray:
        return self.orientation * self._unit_normal(s, t)

    def jacobian(self, s, t) -> np.ndarray:
        ds, dt = self.tangents(s, t)
        return np.linalg.norm(np.cross(ds, dt), axis=-1)

    def reversed(self) -> "Surface":
        return replace(self, orientation=-self.orientation)

    def descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind, "orientation": self.orientation, **self.params()}


@dataclass(frozen=True, eq=False)
class Rectangle(Surface):
    """origin + s * edge_a + t * edge_b."""

    origin: np.ndarray
    edge_a: np.ndarray
    edge_b: np.ndarray
    orientation: int = 1

    kind: ClassVar[str] = "rectangle"
    periodic_t: ClassVar[bool] = False

    def __post_init__(self):
        if np.linalg.norm(np.cross(self.edge_a, self.edge_b)) <= 0.0:
            raise GeometryError("degenerate rectangle: edges must be non-zero and non-parallel")

    @property
    def side_lengths(self) -> Tuple[float, float]:
        return float(np.linalg.norm(self.edge_a)), float(np.linalg.norm(self.edge_b))

    def point(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        return self.origin + s[..., None] * self.edge_a + t[..., None] * self.edge_b

    def tangents(self, s, t):
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(self.edge_a, shape + (3,)), np.broadcast_to(self.edge_b, shape + (3,))

    def _unit_normal(self, s, t):
        n = np.cross(self.edge_a, self.edge_b)
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(n / np.linalg.norm(n), shape + (3,))

    def extent(self):
        return self.side_lengths

    def params(self):
        return {"origin": self.origin.tolist(), "edge_a": self.edge_a.tolist(), "edge_b": self.edge_b.tolist()}

    @classmethod
    def axis_aligned(cls, corner, l1: float, l2: float, normal_axis: int = 2) -> "Rectangle":
        """Rectangle with sides l1, l2 along the two axes other than ``normal_axis``."""
        a_axis, b_axis = [i for i in range(3) if i != normal_axis]
        edge_a, edge_b = np.zeros(3), np.zeros(3)
        edge_a[a_axis], edge_b[b_axis] = l1, l2
        return cls(np.asarray(corner, dtype=float), edge_a, edge_b)


@dataclass(frozen=True, eq=False)
class Disc(Surface):
    """{x1 = c, r < radius}."""

    x1: float
    radius: float
    orientation: int = 1

    kind: ClassVar[str] = "disc"

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("disc radius must be positive")

    def point(self, s, t):
        c, sn, _, _ = _azimuth_frame(t)
        rho = self.radius * np.asarray(s, dtype=float)
        rho, c, sn = np.broadcast_arrays(rho, c, sn)
        return np.stack([np.full_like(rho, self.x1), rho * c, rho * sn], axis=-1)

    def tangents(self, s, t):
        _, _, e_rad, e_phi = _azimuth_frame(t)
        rho = self.radius * np.asarray(s, dtype=float)
        ds = self.radius * e_rad
        dt = TWO_PI * rho[..., None] * e_phi
        return np.broadcast_arrays(ds, dt)

    def _unit_normal(self, s, t):
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(np.array([1.0, 0.0, 0.0]), shape + (3,))

    def jacobian(self, s, t):
        s, _ = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        return TWO_PI * self.radius ** 2 * s

    def extent(self):
        return self.radius, TWO_PI * self.radius

    def params(self):
        return {"x1": self.x1, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Annulus(Surface):
    """{x1 = c, r_in < r < r_out}."""

    x1: float
    r_in: float
    r_out: float
    orientation: int = 1

    kind: ClassVar[str] = "annulus"

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise GeometryError("annulus needs 0 <= r_in < r_out")

    def _rho(self, s):
        return self.r_in + (self.r_out - self.r_in) * np.asarray(s, dtype=float)

    def point(self, s, t):
        c, sn, _, _ = _azimuth_frame(t)
        rho, c, sn = np.broadcast_arrays(self._rho(s), c, sn)
        return np.stack([np.full_like(rho, self.x1), rho * c, rho * sn], axis=-1)

    def tangents(self, s, t):
        _, _, e_rad, e_phi = _azimuth_frame(t)
        ds = (self.r_out - self.r_in) * e_rad
        dt = TWO_PI * self._rho(s)[..., None] * e_phi
        return np.broadcast_arrays(ds, dt)

    def _unit_normal(self, s, t):
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(np.array([1.0, 0.0, 0.0]), shape + (3,))

    def jacobian(self, s, t):
        rho, _ = np.broadcast_arrays(self._rho(s), np.asarray(t, dtype=float))
        return TWO_PI * (self.r_out - self.r_in) * rho

    def extent(self):
        return self.r_out - self.r_in, TWO_PI * self.r_out

    def params(self):
        return {"x1": self.x1, "r_in": self.r_in, "r_out": self.r_out}


@dataclass(frozen=True, eq=False)
class CylinderSegment(Surface):
    """{x1_lo < x1 < x1_hi, r = radius}."""

    x1_lo: float
    x1_hi: float
    radius: float
    orientation: int = 1

    kind: ClassVar[str] = "cylinder_segment"

    def __post_init__(self):
        if not self.x1_hi > self.x1_lo or self.radius <= 0:
            raise GeometryError("cylinder segment needs x1_hi > x1_lo and radius > 0")

    @property
    def length(self) -> float:
        return self.x1_hi - self.x1_lo

    def point(self, s, t):
        c, sn, _, _ = _azimuth_frame(t)
        x1 = self.x1_lo + self.length * np.asarray(s, dtype=float)
        x1, c, sn = np.broadcast_arrays(x1, c, sn)
        return np.stack([x1, self.radius * c, self.radius * sn], axis=-1)

    def tangents(self, s, t):
        _, _, _, e_phi = _azimuth_frame(t)
        ds = np.array([self.length, 0.0, 0.0])
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(ds, shape + (3,)), np.broadcast_to(TWO_PI * self.radius * e_phi, shape + (3,))

    def _unit_normal(self, s, t):
        _, _, e_rad, _ = _azimuth_frame(t)
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        return np.broadcast_to(e_rad, shape + (3,))

    def jacobian(self, s, t):
        s, _ = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        return np.full_like(s, TWO_PI * self.radius * self.length)

    def extent(self):
        return self.length, TWO_PI * self.radius

    def params(self):
        return {"x1_lo": self.x1_lo, "x1_hi": self.x1_hi, "radius": self.radius}


@dataclass(frozen=True, eq=False)
class LevelCap(Surface):
    """Band theta_lo <= theta <= theta_hi of the level set {h = xlev}.

    In spherical coordinates about the x1-axis the level set is
    rho(theta) = sqrt(cos(theta) / xlev).
    """

    xlev: float
    theta_lo: float
    theta_hi: float
    orientation: int = 1

    kind: ClassVar[str] = "level_cap"

    def __post_init__(self):
        if self.xlev <= 0:
            raise GeometryError(f"level must be positive, got {self.xlev}")
        if not 0.0 <= self.theta_lo < self.theta_hi < np.pi / 2:
            raise GeometryError("level cap needs 0 <= theta_lo < theta_hi < pi/2")

    def _theta(self, s):
        return self.theta_lo + (self.theta_hi - self.theta_lo) * np.asarray(s, dtype=float)

    def rho(self, theta):
        return np.sqrt(np.cos(theta) / self.xlev)

    def _frame(self, s, t):
        th = self._theta(s)
        c, sn, _, e_phi = _azimuth_frame(t)
        th, c, sn = np.broadcast_arrays(th, c, sn)
        ct, st = np.cos(th), np.sin(th)
        e_r = np.stack([ct, st * c, st * sn], axis=-1)
        e_th = np.stack([-st, ct * c, ct * sn], axis=-1)
        return th, e_r, e_th, np.broadcast_to(e_phi, e_r.shape)

    def point(self, s, t):
        th, e_r, _, _ = self._frame(s, t)
        return self.rho(th)[..., None] * e_r

    def tangents(self, s, t):
        th, e_r, e_th, e_phi = self._frame(s, t)
        rho = self.rho(th)
        drho = -np.sin(th) / (2.0 * self.xlev * rho)
        span = self.theta_hi - self.theta_lo
        ds = span * (drho[..., None] * e_r + rho[..., None] * e_th)
        dt = TWO_PI * (rho * np.sin(th))[..., None] * e_phi
        return ds, dt

    def _unit_normal(self, s, t):
        # grad h is parallel to -(2 cos(theta) e_r + sin(theta) e_theta)
        th, e_r, e_th, _ = self._frame(s, t)
        ct, st = np.cos(th)[..., None], np.sin(th)[..., None]
        v = -(2.0 * ct * e_r + st * e_th)
        return v / np.sqrt(4.0 * ct ** 2 + st ** 2)

    def extent(self):
        rho_lo, rho_hi = self.rho(self.theta_lo), self.rho(self.theta_hi)
        arc = max(rho_lo, rho_hi) * (self.theta_hi - self.theta_lo) + abs(rho_lo - rho_hi)
        th = np.linspace(self.theta_lo, self.theta_hi, 33)
        return float(arc), float(TWO_PI * np.max(self.rho(th) * np.sin(th)))

    def params(self):
        return {"xlev": self.xlev, "theta_lo": self.theta_lo, "theta_hi": self.theta_hi}

    def split(self, thetas) -> list:
        """Cut the band at the given angles (those strictly inside it)."""
        cuts = [self.theta_lo] + sorted(th for th in thetas if self.theta_lo < th < self.theta_hi) + [self.theta_hi]
        return [replace(self, theta_lo=a, theta_hi=b) for a, b in zip(cuts[:-1], cuts[1:])]
