import hashlib
import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, field_validator

from src.errors import ConfigError

# --- Check records ---

BOUND_CHECK_COLUMNS = ("lemma", "field", "region", "lhs", "rhs_factor", "ratio", "stable")
TRAJECTORY_COLUMNS = ("t", "sup_u", "sup_gradu", "sup_gradP", "energy", "r1", "r2", "r3", "div_residual")


def fmt_float(x: Optional[float]) -> str:
    """17 significant digits: exact round trip, byte-stable output."""
    if x is None:
        return ""
    return f"{x:.17g}"


def compact_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class BoundCheck(BaseModel):
    """One evaluated inequality lhs <= C * rhs_factor; ``ratio`` is the empirical C."""

    lemma: str
    lhs: float = Field(ge=0)
    rhs_factor: float = Field(ge=0)
    ratio: Optional[float] = None
    refinement_stable: bool = True
    vacuous: bool = False
    field: Dict[str, Any] = Field(default_factory=dict)
    region: Dict[str, Any] = Field(default_factory=dict)
    # (x, ratio) pairs for checks swept over a parameter (time for the semigroup checks)
    series: Optional[List[Tuple[float, float]]] = None
    extra: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def build(cls, lemma: str, lhs: float, rhs_factor: float, zero_tol: float = 1e-12, **kwargs) -> "BoundCheck":
        """Fill ``ratio`` and ``vacuous`` from lhs and rhs_factor.

        A zero rhs_factor makes the check vacuous; the ratio is then 0 when the
        lhs vanishes too and undefined otherwise.
        """
        lhs, rhs_factor = abs(float(lhs)), float(rhs_factor)
        if rhs_factor > 0 and math.isfinite(rhs_factor):
            ratio: Optional[float] = lhs / rhs_factor
            vacuous = False
        else:
            ratio = 0.0 if lhs <= zero_tol else None
            vacuous = True
        return cls(lemma=lemma, lhs=lhs, rhs_factor=max(rhs_factor, 0.0), ratio=ratio, vacuous=vacuous, **kwargs)

    def csv_row(self) -> List[str]:
        return [
            self.lemma,
            compact_json(self.field),
            compact_json(self.region),
            fmt_float(self.lhs),
            fmt_float(self.rhs_factor),
            fmt_float(self.ratio),
            "1" if self.refinement_stable else "0",
        ]


class PressureReport(BaseModel):
    """Pressure gradient (force per unit mass) recovered by one route."""

    method: Literal["coulomb", "spectral", "block_sum"]
    point: List[float]
    grad_p: List[float]
    error_estimate: float = 0.0
    truncation: Dict[str, Any] = Field(default_factory=dict)
    # kernel values are divided by 4 pi before they are reported
    normalization: str = "physical (1/(4 pi) applied)"
    extra: Dict[str, Any] = Field(default_factory=dict)


class PressureComparison(BaseModel):
    field: Dict[str, Any]
    reports: List[PressureReport]
    disagreement: Dict[str, float] = Field(default_factory=dict)


class Diagnostics(BaseModel):
    """Monitored quantities at one simulation time."""

    t: float
    sup_u: float
    sup_gradu: float
    sup_gradP: float
    energy: float
    r1: Optional[float] = None
    r2: Optional[float] = None
    r3: Optional[float] = None
    div_residual: float = 0.0
    tail_fraction: float = 0.0

    def csv_row(self) -> List[str]:
        return [fmt_float(getattr(self, c)) for c in TRAJECTORY_COLUMNS]


class MonitorReport(BaseModel):
    steps: int
    vacuous: bool = False
    reliable: bool = True
    beta_hat: Optional[float] = None
    r2_max: Optional[float] = None
    r2_within_bound: bool = True
    settling_time: Optional[float] = None
    beta2_hat: Optional[float] = None
    corollary_quantity: float = 0.0
    energy_monotone: bool = True
    max_div_residual: float = 0.0
    notes: List[str] = Field(default_factory=list)


class CampaignSummary(BaseModel):
    lemma: str
    count: int
    max_ratio: Optional[float] = None
    all_stable: bool = True
    stable_count: int = 0
    vacuous_count: int = 0
    constants: Dict[str, Optional[float]] = Field(default_factory=dict)
    extra: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_checks(cls, lemma: str, checks: List[BoundCheck], **extra) -> "CampaignSummary":
        ratios = [c.ratio for c in checks if c.ratio is not None]
        return cls(
            lemma=lemma,
            count=len(checks),
            max_ratio=max(ratios) if ratios else None,
            all_stable=all(c.refinement_stable for c in checks),
            stable_count=sum(c.refinement_stable for c in checks),
            vacuous_count=sum(c.vacuous for c in checks),
            extra=extra,
        )


# --- Run configuration ---

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FieldSpec(_Strict):
    # "random" draws band-limited solenoidal fields; any other name is a closed form
    name: str = "random"
    params: Dict[str, Any] = Field(default_factory=dict)
    k_max: float = Field(default=4.0, ge=0)
    amplitude: PositiveFloat = 1.0
    count: PositiveInt = 1
    input: Optional[Path] = None


class GridSpec(_Strict):
    n: PositiveInt = 32
    box: PositiveFloat = 2 * math.pi


class RegionSpec(_Strict):
    block_kind: Literal["C", "B"] = "C"
    n_min: int = -2
    n_max: int = 2
    depth: Optional[int] = Field(default=None, ge=0)
    surface_kind: Literal["disc", "annulus", "cylinder_segment"] = "disc"
    rectangles: PositiveInt = 20
    levels: PositiveInt = 3

    @field_validator("n_max")
    @classmethod
    def _ordered(cls, v, info):
        if "n_min" in info.data and v < info.data["n_min"]:
            raise ValueError("n_max must be >= n_min")
        return v


class QuadratureSpec(_Strict):
    order: PositiveInt = 8
    samples: PositiveInt = 4096


class Tolerances(_Strict):
    settling: PositiveFloat = 0.05
    cross_validation: PositiveFloat = 1e-3
    divergence: PositiveFloat = 1e-9
    energy: PositiveFloat = 1e-10


class PressureSpec(_Strict):
    methods: List[Literal["coulomb", "spectral", "block_sum"]] = Field(default_factory=lambda: ["spectral"])
    point: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    r_excl: PositiveFloat = 1e-3
    r_outer: Optional[PositiveFloat] = None
    acknowledge_truncation: bool = False
    # padding factor of the spectral solve
    refine: PositiveInt = 2


class SemigroupSpec(_Strict):
    times: List[PositiveFloat] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    box: PositiveFloat = 64.0
    # the step must span a few grid cells or the discrete flow overshoots |f|_inf
    n: PositiveInt = 4096
    width: PositiveFloat = 0.0625
    steps: PositiveInt = 64
    # seeded random bounded profiles evaluated after the step
    count: int = Field(default=4, ge=0)
    modes: PositiveInt = 6


class SimulationSpec(_Strict):
    t_final: float = Field(default=1.0, ge=0)
    dt: Optional[PositiveFloat] = None
    viscosity: Literal[0, 1] = 1
    nonlinear: bool = True
    diag_every: PositiveInt = 1
    checkpoint_every: Optional[PositiveInt] = None


class OutputSpec(_Strict):
    out: Path = Path("out")
    format: Literal["csv", "json"] = "csv"
    inputs: List[Path] = Field(default_factory=list)


class RunConfig(_Strict):
    command: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    field: FieldSpec = Field(default_factory=FieldSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    region: RegionSpec = Field(default_factory=RegionSpec)
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    pressure: PressureSpec = Field(default_factory=PressureSpec)
    semigroup: SemigroupSpec = Field(default_factory=SemigroupSpec)
    simulation: SimulationSpec = Field(default_factory=SimulationSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @classmethod
    def load(cls, path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """Read a TOML or JSON config, then apply dotted-key overrides (flags win)."""
        data: Dict[str, Any] = {}
        if path is not None:
            path = Path(path)
            try:
                text = path.read_text()
            except OSError as e:
                raise ConfigError(f"cannot read config {path}: {e}") from e
            try:
                data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
            except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
                raise ConfigError(f"malformed config {path}: {e}") from e
        for dotted, value in (overrides or {}).items():
            if value is None:
                continue
            node = data
            *parents, leaf = dotted.split(".")
            for key in parents:
                node = node.setdefault(key, {})
            node[leaf] = value
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"invalid run configuration: {e}") from e

    def config_hash(self) -> str:
        """Digest of everything that affects numbers (output paths excluded)."""
        payload = self.model_dump_json(exclude={"output"})
        return hashlib.sha256(payload.encode()).hexdigest()[:16]
