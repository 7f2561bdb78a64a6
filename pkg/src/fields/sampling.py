"""Sup norms, oscillation w(A) and deterministic region samplers.

The componentwise convention is used throughout: |u|_inf is the largest
|u_i| and |grad u|_inf the largest |d_j u_i|.
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import cdist, pdist
from scipy.stats import qmc

from src.config import settings
from src.errors import FieldError
from src.fields.analytic import AnalyticField
from src.fields.grid import GridField


@dataclass(frozen=True, eq=False)
class Lattice:
    """Uniform tensor lattice on an axis-aligned box, endpoints included.

    Refining from m to 2m - 1 points per axis keeps every old node, so sup
    estimates never decrease under refinement.
    """

    lower: np.ndarray
    upper: np.ndarray
    points: int = 33

    def nodes(self) -> np.ndarray:
        if self.points < 1:
            raise FieldError("empty sampling lattice")
        axes = [np.linspace(lo, hi, self.points) for lo, hi in zip(self.lower, self.upper)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)

    def refined(self) -> "Lattice":
        return Lattice(self.lower, self.upper, 2 * self.points - 1)

    @classmethod
    def cube(cls, lo: float, hi: float, points: int = 33) -> "Lattice":
        return cls(np.full(3, lo, dtype=float), np.full(3, hi, dtype=float), points)


@dataclass(frozen=True, eq=False)
class RegionSampler:
    """Deterministic sample points covering a region A."""

    points: np.ndarray
    region: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise FieldError("sampler points must be an (N, 3) array")
        if self.points.shape[0] < 2:
            raise FieldError("a region sampler needs at least two points")

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


def unit_cube_samples(count: Optional[int] = None, dim: int = 3) -> np.ndarray:
    """Scrambled Sobol points (fixed seed) followed by the corners of [0, 1]^dim.

    Sobol prefixes are nested, so doubling ``count`` keeps the earlier points.
    The corners make extreme values on the region boundary reachable.
    """
    count = settings.SAMPLE_COUNT if count is None else int(count)
    if count < 2:
        raise FieldError("sample count must be at least 2")
    m = int(np.ceil(np.log2(count)))
    sobol = qmc.Sobol(d=dim, scramble=True, seed=0).random_base2(m)[:count]
    corners = np.stack(np.meshgrid(*([[0.0, 1.0]] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return np.vstack([sobol, corners])


def map_samples(mapping: Callable[[np.ndarray], np.ndarray], region: Dict[str, Any],
                count: Optional[int] = None, dim: int = 3) -> RegionSampler:
    """Push unit-cube samples through ``mapping`` to build a sampler."""
    return RegionSampler(points=mapping(unit_cube_samples(count, dim)), region=region)


def box_sampler(lower, upper, count: Optional[int] = None) -> RegionSampler:
    lo, hi = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    return map_samples(lambda s: lo + s * (hi - lo), {"kind": "box", "lower": lo.tolist(), "upper": hi.tolist()}, count)


def sup_norm(fld: Union[AnalyticField, GridField], lattice: Optional[Lattice] = None) -> float:
    """max_i sup_x |u_i(x)| (grid values, or lattice samples for closed forms)."""
    if isinstance(fld, GridField):
        return float(np.max(np.abs(fld.u)))
    if lattice is None:
        raise FieldError("a sampling lattice is required for closed-form fields")
    return float(np.max(np.abs(fld.eval(lattice.nodes()))))


def grad_sup_norm(fld: Union[AnalyticField, GridField], lattice: Optional[Lattice] = None) -> float:
    """max_i |grad u_i|_inf = max_{i,j} sup_x |d_j u_i(x)|."""
    if isinstance(fld, GridField):
        return float(np.max(np.abs(fld.gradient())))
    if lattice is None:
        raise FieldError("a sampling lattice is required for closed-form fields")
    return float(np.max(np.abs(fld.grad(lattice.nodes()))))


def point_cloud_diameter(points: np.ndarray) -> float:
    """Largest pairwise Euclidean distance in a point cloud."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        return 0.0
    if pts.shape[0] <= 512:
        return float(np.max(pdist(pts)))
    try:
        # the diameter is realised by hull vertices; joggling handles flat clouds
        hull = ConvexHull(pts, qhull_options="QJ")
        return float(np.max(pdist(pts[hull.vertices])))
    except (QhullError, ValueError):
        best = 0.0
        for start in range(0, pts.shape[0], 1024):
            best = max(best, float(np.max(cdist(pts[start:start + 1024], pts))))
        return best


def oscillation(fld: AnalyticField, sampler: RegionSampler) -> float:
    """Sampled w(A) = sup_{x, x' in A} |u(x) - u(x')|, a lower bound of the true value."""
    return point_cloud_diameter(fld.eval(sampler.points))
