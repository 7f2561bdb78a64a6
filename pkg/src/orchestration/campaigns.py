import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Environment, FileSystemLoader, select_autoescape

from src.api.schemas import BOUND_CHECK_COLUMNS, BoundCheck, CampaignSummary, RunConfig
from src.errors import CampaignError, ProbeError
from src.execution.census import CensusExecutor, get_census_executor, splitmix64
from src.fields.analytic import AnalyticField, make_standard_field
from src.fields.grid import GridField, random_solenoidal, sample_on_grid
from src.fields.io import read_grid
from src.flux.checks import (
    block_sampler,
    charge_bound_check,
    level_cap_flux_check,
    level_fractions,
    rectangle_bound_check,
    surface_bound_check,
    surface_sampler,
)
from src.geometry.blocks import block
from src.geometry.surfaces import Annulus, CylinderSegment, Disc, Rectangle, Surface
from src.logging.logger import get_logger
from src.pressure.dyadic import dipole_bound_check, theorem11_check
from src.semigroup.duhamel import TimeDependentField, duhamel_gradient_bound_check
from src.semigroup.heat import ALPHA_SHARP, heat_gradient_bound_check, random_bounded_profile, smoothed_step

logger = get_logger(__name__)

# Setup Jinja2 environment
template_dir = os.path.join(os.path.dirname(__file__), "templates")
jinja_env = Environment(
    loader=FileSystemLoader(template_dir),
    autoescape=select_autoescape(["html"]),
    trim_blocks=True,
    lstrip_blocks=True,
)
jinja_env.filters["num"] = lambda x: "n/a" if x is None else f"{x:.6g}"

LEMMAS = ("2.1", "2.2", "2.3c", "2.4", "2.5", "3.1", "3.2", "thm1.1")

# name of the empirical constant each census estimates
CONSTANT_NAMES = {
    "2.1": "lambda_hat",
    "2.2": "mu_hat",
    "2.3c": "charge_hat",
    "2.4": "level_hat",
    "2.5": "dipole_hat",
    "3.1": "alpha_hat",
    "3.2": "gamma_hat",
    "thm1.1": "beta_hat",
}

# mixed into the run seed for the random semigroup profiles
SEMIGROUP_SEED_SALT = 0x3131


@dataclass(frozen=True)
class CensusField:
    """One census member: its closed-form evaluator and, for grid data, the grid."""

    index: int
    analytic: AnalyticField
    grid: Optional[GridField] = None


def scale_surface(kind: str, n: int) -> Surface:
    """The disc, annulus or cylinder of the C_n boundary at scale 2^n."""
    a = 2.0 ** n
    if kind == "disc":
        return Disc(x1=a, radius=2.0 * a)
    if kind == "annulus":
        return Annulus(x1=a, r_in=a, r_out=2.0 * a)
    if kind == "cylinder_segment":
        return CylinderSegment(x1_lo=a, x1_hi=2.0 * a, radius=2.0 * a)
    raise CampaignError(f"unknown surface kind '{kind}'")


class CampaignRunner:
    """Builds the census a lemma needs from a RunConfig and evaluates it."""

    def __init__(self, config: RunConfig, executor: Optional[CensusExecutor] = None):
        self.config = config
        self.executor = executor or get_census_executor()
        self._dispatch: Dict[str, Callable[[List[CensusField]], List[Tuple[int, BoundCheck]]]] = {
            "2.1": self._rectangles,
            "2.2": self._surfaces,
            "2.3c": self._charges,
            "2.4": self._level_caps,
            "2.5": self._dipoles,
            "3.1": self._heat,
            "3.2": self._duhamel,
            "thm1.1": self._theorem,
        }
        logger.info("campaign runner initialized", config_hash=config.config_hash())

    @property
    def _order(self) -> int:
        return self.config.quadrature.order

    @property
    def _samples(self) -> int:
        return self.config.quadrature.samples

    def _levels(self) -> range:
        return range(self.config.region.n_min, self.config.region.n_max + 1)

    def census_fields(self) -> List[CensusField]:
        spec, grid_spec = self.config.field, self.config.grid
        if spec.input is not None:
            grid = read_grid(spec.input)
            return [CensusField(0, grid.to_analytic(), grid)]
        if spec.name == "random":
            def draw(i: int) -> CensusField:
                grid = random_solenoidal(splitmix64(self.config.seed, i), spec.k_max, spec.amplitude,
                                         grid_spec.n, grid_spec.box)
                return CensusField(i, grid.to_analytic(), grid)

            return self.executor.map(draw, range(spec.count), label="fields")
        if spec.count > 1:
            logger.warning("closed-form fields are deterministic; census count ignored", field=spec.name)
        return [CensusField(0, make_standard_field(spec.name, spec.params))]

    # --- per-lemma census items ---

    def _rectangles(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        box = self.config.grid.box
        count = self.config.region.rectangles
        items = []
        for f in fields:
            rng = np.random.default_rng(splitmix64(self.config.seed ^ 0x2121, f.index))
            for j in range(count):
                corner = rng.uniform(-0.5 * box, 0.5 * box, 3)
                l1, l2 = rng.uniform(0.05 * box, 0.5 * box, 2)
                items.append((f, Rectangle.axis_aligned(corner, l1, l2, normal_axis=j % 3)))

        def evaluate(item):
            f, rect = item
            return f.index, rectangle_bound_check(f.analytic, rect, surface_sampler(rect, self._samples),
                                                  self._order, optimize_shift=True)

        return self.executor.map(evaluate, items, label="2.1")

    def _surfaces(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        kind = self.config.region.surface_kind
        items = [(f, n) for f in fields for n in self._levels()]

        def evaluate(item):
            f, n = item
            surface = scale_surface(kind, n)
            check = surface_bound_check(f.analytic, surface, surface_sampler(surface, self._samples), self._order)
            return f.index, _with_level(check, n)

        return self.executor.map(evaluate, items, label="2.2")

    def _charges(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        region = self.config.region
        items = [(f, n) for f in fields for n in self._levels()]

        def evaluate(item):
            f, n = item
            blk = block(region.block_kind, n, depth=region.depth)
            return f.index, _with_level(charge_bound_check(f.analytic, blk, block_sampler(blk, self._samples),
                                                           self._order), n)

        return self.executor.map(evaluate, items, label="2.3c")

    def _level_caps(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        region = self.config.region
        items = [(f, n, xlev) for f in fields for n in self._levels()
                 for xlev in level_fractions(n, region.levels, region.block_kind)]

        def evaluate(item):
            f, n, xlev = item
            check = level_cap_flux_check(f.analytic, n, xlev, order=self._order, kind=region.block_kind)
            return f.index, _with_level(check, n)

        return self.executor.map(evaluate, items, label="2.4")

    def _dipoles(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        region = self.config.region
        items = [(f, n) for f in fields for n in self._levels()]

        def evaluate(item):
            f, n = item
            blk = block(region.block_kind, n, depth=region.depth)
            return f.index, _with_level(dipole_bound_check(f.analytic, blk, block_sampler(blk, self._samples),
                                                           self._order), n)

        return self.executor.map(evaluate, items, label="2.5")

    def _semigroup_profiles(self) -> List[Tuple[Dict[str, Any], np.ndarray]]:
        """The smoothed step followed by ``semigroup.count`` seeded random bounded profiles."""
        sg = self.config.semigroup
        profiles = [({"profile": "smoothed_step", "width": sg.width}, smoothed_step(sg.n, sg.box, sg.width))]
        for j in range(sg.count):
            seed = splitmix64(self.config.seed ^ SEMIGROUP_SEED_SALT, j)
            profiles.append(({"profile": "random_bounded", "seed": seed, "modes": sg.modes},
                             random_bounded_profile(seed, sg.n, sg.box, sg.width, sg.modes)))
        return profiles

    def _heat(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        sg = self.config.semigroup

        def evaluate(item):
            index, (descriptor, f) = item
            check = heat_gradient_bound_check(f, sg.times, sg.box, ndim=1)
            return index, check.model_copy(update={"field": descriptor})

        return self.executor.map(evaluate, enumerate(self._semigroup_profiles()), label="3.1")

    def _duhamel(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        sg = self.config.semigroup

        def evaluate(item):
            index, (descriptor, f) = item
            q = TimeDependentField.constant(f, sg.box, ndim=1, span=max(sg.times))
            check = duhamel_gradient_bound_check(q, 0.0, sg.times, sg.steps)
            return index, check.model_copy(update={"field": descriptor})

        return self.executor.map(evaluate, enumerate(self._semigroup_profiles()), label="3.2")

    def _theorem(self, fields: List[CensusField]) -> List[Tuple[int, BoundCheck]]:
        grid_spec = self.config.grid
        n_range = (self.config.region.n_min, self.config.region.n_max)

        def evaluate(f: CensusField):
            if f.grid is not None:
                return f.index, theorem11_check(f.grid, "spectral")
            if f.analytic.support_radius is not None:
                return f.index, theorem11_check(f.analytic, "blocks", n_range, self._order)
            return f.index, theorem11_check(sample_on_grid(f.analytic, grid_spec.n, grid_spec.box), "spectral")

        return self.executor.map(evaluate, fields, label="thm1.1")

    # --- driver ---

    def run(self, lemma: str) -> Tuple[List[BoundCheck], CampaignSummary]:
        handler = self._dispatch.get(lemma)
        if handler is None:
            raise CampaignError(f"unknown lemma '{lemma}'; expected one of {', '.join(LEMMAS)}")
        logger.info("campaign started", lemma=lemma)
        fields = [] if lemma in ("3.1", "3.2") else self.census_fields()
        try:
            indexed = handler(fields)
        except ProbeError:
            raise
        except Exception as e:
            logger.exception("unexpected failure in campaign", lemma=lemma)
            raise CampaignError(f"campaign {lemma} failed: {type(e).__name__}") from e
        checks = [c for _, c in indexed]
        summary = summarize(lemma, indexed, len(fields))
        logger.info("campaign finished", lemma=lemma, checks=len(checks), max_ratio=summary.max_ratio,
                    all_stable=summary.all_stable)
        return checks, summary


def _with_level(check: BoundCheck, n: int) -> BoundCheck:
    return check.model_copy(update={"region": dict(check.region, n=n)})


def summarize(lemma: str, indexed: Sequence[Tuple[int, BoundCheck]], field_count: int) -> CampaignSummary:
    """Campaign summary with the lemma's empirical constant and its half-census value."""
    checks = [c for _, c in indexed]
    extra: Dict[str, Any] = {}
    if field_count >= 2:
        half = math.ceil(field_count / 2)
        ratios = [c.ratio for i, c in indexed if i < half and c.ratio is not None]
        full = [c.ratio for c in checks if c.ratio is not None]
        if ratios and full and max(full) > 0:
            extra["max_ratio_half_census"] = max(ratios)
            extra["census_drift"] = (max(full) - max(ratios)) / max(full)
    if lemma in ("3.1", "3.2") and checks:
        # the first check is the smoothed step
        extra["series"] = checks[0].series
        if lemma == "3.2":
            worst = max((c.ratio for c in checks if c.ratio is not None), default=0.0)
            extra["gamma_over_alpha_sharp"] = worst / ALPHA_SHARP
            extra["convergence"] = max(c.extra.get("convergence", 0.0) for c in checks)
    if lemma == "thm1.1":
        sums = [c.extra["partial_sums"] for c in checks if "partial_sums" in c.extra]
        if sums:
            extra["partial_sums"] = sums
    summary = CampaignSummary.from_checks(lemma, checks, **extra)
    summary.constants[CONSTANT_NAMES[lemma]] = summary.max_ratio
    return summary


# --- writers ---

def write_checks_csv(path: Path, checks: Sequence[BoundCheck]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOUND_CHECK_COLUMNS)
        for check in checks:
            writer.writerow(check.csv_row())
    return path


def write_checks_json(path: Path, checks: Sequence[BoundCheck]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [json.loads(c.model_dump_json()) for c in checks]
    path.write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    return path


def write_summary(path: Path, summary: CampaignSummary) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json.loads(summary.model_dump_json()), sort_keys=True, indent=2) + "\n")
    return path


def render_summary(summaries: Sequence[CampaignSummary], title: str = "Campaign summary") -> str:
    """Markdown table of per-lemma results."""
    try:
        template = jinja_env.get_template("summary.md.j2")
        unstable = [s.lemma for s in summaries if not s.all_stable]
        return template.render(title=title, summaries=list(summaries), unstable=unstable)
    except Exception as e:
        logger.error("failed to render summary template", error=str(e))
        raise CampaignError("summary rendering failed") from e
