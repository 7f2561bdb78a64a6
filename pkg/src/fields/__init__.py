# src/fields package
from src.fields.analytic import AnalyticField, FourierField, fd_gradient_error, make_standard_field
from src.fields.grid import GridField, leray_project, random_solenoidal, sample_on_grid
from src.fields.sampling import (
    Lattice,
    RegionSampler,
    box_sampler,
    grad_sup_norm,
    oscillation,
    sup_norm,
)

__all__ = [
    "AnalyticField",
    "FourierField",
    "GridField",
    "Lattice",
    "RegionSampler",
    "box_sampler",
    "fd_gradient_error",
    "grad_sup_norm",
    "leray_project",
    "make_standard_field",
    "oscillation",
    "random_solenoidal",
    "sample_on_grid",
    "sup_norm",
]
