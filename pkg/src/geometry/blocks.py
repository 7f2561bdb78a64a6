"""Dyadic blocks: the cylinders C_n, their mirrors, and the shells B_n.

All blocks are coaxial with the x1-axis and described by a box in
(x1, r): ``x1_lo < x1 < x1_hi`` and ``r_in < r < r_out``.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from src.config import settings
from src.errors import GeometryError
from src.geometry.surfaces import Annulus, CylinderSegment, Disc, Surface

CYLINDER_KINDS = ("cylinder_Cn", "C", "Cn")
SHELL_KINDS = ("shell_Bn", "B", "Bn")


@dataclass(frozen=True)
class Block:
    kind: str
    x1_lo: float
    x1_hi: float
    r_in: float
    r_out: float
    n: Optional[int] = None
    side: int = 1
    depth: Optional[int] = None

    def __post_init__(self):
        if not (self.x1_hi > self.x1_lo and 0.0 <= self.r_in < self.r_out):
            raise GeometryError(f"empty block {self.kind}: x1 in ({self.x1_lo}, {self.x1_hi}), "
                                f"r in ({self.r_in}, {self.r_out})")

    @classmethod
    def cylinder(cls, a: float, b: float, radius: float) -> "Block":
        """Solid coaxial cylinder {a < x1 < b, r < radius}."""
        return cls(kind="cylinder", x1_lo=float(a), x1_hi=float(b), r_in=0.0, r_out=float(radius))

    @property
    def scale(self) -> float:
        """2^n for dyadic blocks, the outer radius otherwise."""
        return 2.0 ** self.n if self.n is not None else self.r_out

    @property
    def boundary(self) -> List[Surface]:
        """Outward-oriented boundary patches covering the block surface."""
        if self.r_in > 0:
            lo = Annulus(self.x1_lo, self.r_in, self.r_out, orientation=-1)
            hi = Annulus(self.x1_hi, self.r_in, self.r_out, orientation=1)
        else:
            lo = Disc(self.x1_lo, self.r_out, orientation=-1)
            hi = Disc(self.x1_hi, self.r_out, orientation=1)
        faces: List[Surface] = [lo, hi, CylinderSegment(self.x1_lo, self.x1_hi, self.r_out, orientation=1)]
        if self.r_in > 0:
            faces.append(CylinderSegment(self.x1_lo, self.x1_hi, self.r_in, orientation=-1))
        return faces

    def contains(self, points) -> np.ndarray:
        """Open-set membership for an (..., 3) array of points."""
        x = np.asarray(points, dtype=float)
        r2 = x[..., 1] ** 2 + x[..., 2] ** 2
        inside = (x[..., 0] > self.x1_lo) & (x[..., 0] < self.x1_hi) & (r2 < self.r_out ** 2)
        if self.r_in > 0:
            inside &= r2 > self.r_in ** 2
        return inside

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.x1_hi - self.x1_lo, 2.0 * self.r_out))

    @property
    def volume(self) -> float:
        return float(np.pi * (self.r_out ** 2 - self.r_in ** 2) * (self.x1_hi - self.x1_lo))

    def reference_point(self) -> np.ndarray:
        """An interior point: the centroid for solid cylinders, mid-shell otherwise."""
        x1 = 0.5 * (self.x1_lo + self.x1_hi)
        if self.r_in == 0:
            return np.array([x1, 0.0, 0.0])
        return np.array([x1, 0.5 * (self.r_in + self.r_out), 0.0])

    def descriptor(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "kind": self.kind,
            "x1_lo": self.x1_lo,
            "x1_hi": self.x1_hi,
            "r_in": self.r_in,
            "r_out": self.r_out,
        }
        if self.n is not None:
            out.update(n=self.n, side=self.side)
        if self.depth is not None:
            out["depth"] = self.depth
        return out

    @property
    def label(self) -> str:
        if self.kind == "cylinder_Cn":
            return f"C_{self.n}" + ("" if self.side > 0 else "-")
        if self.kind == "shell_Bn":
            return f"B_{self.n}"
        return f"cyl[{self.x1_lo:g},{self.x1_hi:g};{self.r_out:g}]"


def block(kind: str, n: int, depth: Optional[int] = None, side: int = 1) -> Block:
    """Build C_n (``side=-1`` for its mirror in x1 < 0) or the truncated shell B_n.

    B_n = {x1 < 2^n, 4^n < r^2 < 4^(n+1)} is cut at x1 = -2^(n+depth); with
    depth 0 the shell meets the mirrored cylinders exactly and
    {C_n, C_n-, B_n} tiles space.
    """
    if isinstance(n, bool) or int(n) != n:
        raise GeometryError(f"dyadic index must be an integer, got {n!r}")
    n = int(n)
    if not settings.N_MIN - 16 <= n <= settings.N_MAX + 16:
        raise GeometryError(f"dyadic index {n} outside the supported range")
    if side not in (1, -1):
        raise GeometryError("side must be +1 or -1")
    scale = 2.0 ** n
    if kind in CYLINDER_KINDS:
        lo, hi = (scale, 2 * scale) if side > 0 else (-2 * scale, -scale)
        return Block("cylinder_Cn", lo, hi, 0.0, 2 * scale, n=n, side=side)
    if kind in SHELL_KINDS:
        depth = settings.TRUNCATION_DEPTH if depth is None else int(depth)
        if depth < 0:
            raise GeometryError("truncation depth must be non-negative")
        return Block("shell_Bn", -scale * 2.0 ** depth, scale, scale, 2 * scale, n=n, depth=depth)
    raise GeometryError(f"unknown block kind {kind!r}")


def dyadic_family(n_min: int, n_max: int, depth: int = 0) -> List[Block]:
    """C_n, C_n- and B_n for n_min <= n <= n_max."""
    blocks: List[Block] = []
    for n in range(n_min, n_max + 1):
        blocks.extend([block("C", n), block("C", n, side=-1), block("B", n, depth=depth)])
    return blocks
