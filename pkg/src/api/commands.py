"""Command handlers behind the ``pprobe`` subcommands.

Each handler takes a validated :class:`RunConfig`, writes its artifacts
under ``config.output.out``, prints a short machine-readable result on
stdout and returns the process exit code.
"""
import csv
import itertools
import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.api.schemas import (
    BOUND_CHECK_COLUMNS,
    TRAJECTORY_COLUMNS,
    CampaignSummary,
    PressureComparison,
    PressureReport,
    RunConfig,
    compact_json,
    fmt_float,
)
from src.errors import ConfigError, PressureError
from src.execution.census import get_census_executor
from src.fields.analytic import AnalyticField, make_standard_field
from src.fields.grid import GridField, leray_project, random_solenoidal, sample_on_grid
from src.fields.io import read_grid, write_checkpoint
from src.logging.logger import get_logger
from src.nse_sim.integrator import SimConfig, run
from src.nse_sim.monitor import monitor
from src.orchestration.campaigns import (
    CampaignRunner,
    render_summary,
    write_checks_csv,
    write_checks_json,
    write_summary,
)
from src.pressure.coulomb import grad_pressure_coulomb
from src.pressure.dyadic import grad_pressure_blocks
from src.pressure.spectral import grad_pressure_spectral

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_FAILED_CHECK = 3


def _emit(payload: Dict) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


def _write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def initial_grid(config: RunConfig) -> GridField:
    """The single grid field a config describes (random draw, closed form or input file)."""
    spec, grid = config.field, config.grid
    if spec.input is not None:
        return read_grid(spec.input)
    if spec.name == "random":
        return random_solenoidal(config.seed, spec.k_max, spec.amplitude, grid.n, grid.box)
    return sample_on_grid(make_standard_field(spec.name, spec.params), grid.n, grid.box)


def cmd_gen(config: RunConfig) -> int:
    grid = initial_grid(config)
    out = Path(config.output.out)
    name = f"{config.field.name}_seed{config.seed}_n{grid.n}.dff1"
    info = {"config_hash": config.config_hash(), "seed": config.seed, "field": grid.meta}
    digest, sidecar = write_checkpoint(out / name, grid, info)
    residual = grid.divergence_residual()
    logger.info("generated field", field=config.field.name, seed=config.seed, div_residual=residual)
    _emit({"path": str(out / name), "sidecar": str(sidecar), "sha256": digest,
           "div_residual": fmt_float(residual), "sup_u": fmt_float(float(np.max(np.abs(grid.u))))})
    return EXIT_OK


def cmd_verify(lemma: str, config: RunConfig) -> int:
    runner = CampaignRunner(config, get_census_executor())
    checks, summary = runner.run(lemma)
    out = Path(config.output.out)
    stem = f"verify_{lemma}"
    if config.output.format == "json":
        write_checks_json(out / f"{stem}.checks.json", checks)
    else:
        write_checks_csv(out / f"{stem}.csv", checks)
    summary.extra["config_hash"] = config.config_hash()
    write_summary(out / f"{stem}.summary.json", summary)
    failed = [i for i, c in enumerate(checks) if c.ratio is None]
    if failed:
        logger.warning("inequality fails with a zero right-hand side", lemma=lemma, rows=failed)
    _emit(json.loads(summary.model_dump_json()))
    return EXIT_OK if summary.all_stable and not failed else EXIT_FAILED_CHECK


# --- pressure ---

def _spectral_report(grid: GridField, point: np.ndarray, refine: int) -> PressureReport:
    gp = grad_pressure_spectral(grid, refine=refine)
    value = gp.to_analytic().eval(point)
    return PressureReport(
        method="spectral",
        point=point.tolist(),
        grad_p=[float(v) for v in value],
        error_estimate=float(gp.meta["poisson_residual"]),
        truncation={"n": gp.n, "box": gp.box, "periodic": True},
    )


def _centred_grid(fld: AnalyticField, n: int, box: float) -> GridField:
    """Sample a closed form on [-box/2, box/2)^3 and project out the aliasing divergence.

    A compactly supported field must fit in the box with room for its
    periodic images, so ``box`` has to be at least four support radii.
    """
    radius = fld.support_radius
    if radius is not None and box < 4.0 * radius:
        raise ConfigError(f"box length {box:g} is below 4x the support radius {radius:g} of '{fld.name}'")
    return leray_project(sample_on_grid(fld, n, box, origin=-box / 2.0))


def disagreement(reports: Sequence[PressureReport]) -> Dict[str, float]:
    """Relative sup-norm difference for every pair of methods."""
    out: Dict[str, float] = {}
    for a, b in itertools.combinations(reports, 2):
        ga, gb = np.asarray(a.grad_p), np.asarray(b.grad_p)
        scale = max(float(np.max(np.abs(ga))), float(np.max(np.abs(gb))), 1e-300)
        out[f"{a.method}-{b.method}"] = float(np.max(np.abs(ga - gb))) / scale
    return out


def cmd_pressure(config: RunConfig) -> int:
    spec = config.pressure
    point = np.asarray(spec.point, dtype=float)
    if point.shape != (3,):
        raise ConfigError("pressure.point must have three coordinates")
    grid: Optional[GridField] = None
    if config.field.name == "random" or config.field.input is not None:
        grid = initial_grid(config)
        fld = grid.to_analytic()
    else:
        fld = make_standard_field(config.field.name, config.field.params)

    reports: List[PressureReport] = []
    for method in spec.methods:
        if method == "spectral":
            if grid is None:
                grid = _centred_grid(fld, config.grid.n, config.grid.box)
            reports.append(_spectral_report(grid, point, spec.refine))
        elif method == "coulomb":
            reports.append(grad_pressure_coulomb(fld, point, spec.r_outer, spec.r_excl,
                                                 acknowledge_truncation=spec.acknowledge_truncation))
        else:
            if fld.support_radius is None:
                raise PressureError(f"block sums need a compactly supported field, '{fld.name}' is not")
            reports.append(grad_pressure_blocks(fld, point, (config.region.n_min, config.region.n_max),
                                                config.quadrature.order))
    comparison = PressureComparison(field=fld.descriptor(), reports=reports, disagreement=disagreement(reports))
    _write_json(Path(config.output.out) / "pressure.json", json.loads(comparison.model_dump_json()))
    worst = max(comparison.disagreement.values(), default=0.0)
    if worst > config.tolerances.cross_validation:
        logger.warning("pressure routes disagree", disagreement=comparison.disagreement,
                       tolerance=config.tolerances.cross_validation)
    _emit(json.loads(comparison.model_dump_json()))
    return EXIT_OK if worst <= config.tolerances.cross_validation else EXIT_FAILED_CHECK


# --- simulate ---

def cmd_simulate(config: RunConfig) -> int:
    sim = config.simulation
    out = Path(config.output.out)
    grid = initial_grid(config)
    sim_config = SimConfig(
        n=grid.n,
        box=grid.box,
        viscosity=sim.viscosity,
        t_final=sim.t_final,
        dt=sim.dt,
        nonlinear=sim.nonlinear,
        diag_every=sim.diag_every,
        checkpoint_every=sim.checkpoint_every,
        checkpoint_dir=out / "checkpoints" if sim.checkpoint_every else None,
        config_hash=config.config_hash(),
        energy_tol=config.tolerances.energy,
        div_tol=config.tolerances.divergence,
    )
    if sim_config.checkpoint_dir is not None:
        sim_config.checkpoint_dir.mkdir(parents=True, exist_ok=True)
    traj = run(sim_config, grid)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "trajectory.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in traj.rows:
            writer.writerow(row.csv_row())
    report = monitor(traj, tol=config.tolerances.settling)
    summary = json.loads(report.model_dump_json())
    summary.update(
        dt=traj.dt,
        divergence_ok=traj.divergence_ok,
        checkpoints=[str(p) for p in traj.checkpoints],
        config_hash=config.config_hash(),
    )
    _write_json(out / "simulate_summary.json", summary)
    _emit(summary)
    return EXIT_OK if traj.energy_monotone and traj.divergence_ok else EXIT_FAILED_CHECK


# --- report ---

def _read_csv(path: Path) -> Tuple[List[str], List[List[str]]]:
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path} is empty")
    return rows[0], rows[1:]


def _write_columns(path: Path, pairs: Sequence[Tuple[float, float]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{fmt_float(x)} {fmt_float(y)}\n" for x, y in pairs))
    return path


def _level_of(region_json: str, fallback: int) -> float:
    region = json.loads(region_json) if region_json else {}
    return float(region.get("n", fallback))


def _bound_check_rows(rows: List[List[str]]) -> Dict[str, List[Tuple[float, Optional[float], bool]]]:
    by_lemma: Dict[str, List[Tuple[float, Optional[float], bool]]] = {}
    for i, (lemma, _field, region, _lhs, _rhs, ratio, stable) in enumerate(rows):
        value = float(ratio) if ratio else None
        by_lemma.setdefault(lemma, []).append((_level_of(region, i), value, stable == "1"))
    return by_lemma


def cmd_report(config: RunConfig) -> int:
    """Aggregate verify/simulate outputs into two-column plot data and a summary table."""
    inputs = [Path(p) for p in config.output.inputs]
    if not inputs:
        raise ConfigError("report needs at least one input file")
    missing = [str(p) for p in inputs if not p.exists()]
    if missing:
        raise ConfigError(f"missing report inputs: {', '.join(missing)}")
    out = Path(config.output.out)
    ratios: Dict[str, Dict[float, float]] = {}
    stable: Dict[str, List[bool]] = {}
    summaries: Dict[str, CampaignSummary] = {}
    written: List[str] = []
    trajectories = 0

    for path in sorted(inputs):
        if path.suffix == ".csv":
            header, rows = _read_csv(path)
            if tuple(header) == TRAJECTORY_COLUMNS:
                cols = {name: i for i, name in enumerate(header)}
                for key in ("r1", "r2", "r3"):
                    pairs = [(float(r[cols["t"]]), float(r[cols[key]])) for r in rows if r[cols[key]]]
                    target = out / f"trajectory{trajectories}_{key}_vs_t.dat"
                    written.append(str(_write_columns(target, pairs)))
                trajectories += 1
                continue
            if tuple(header) != BOUND_CHECK_COLUMNS:
                raise ConfigError(f"{path} is neither a bound-check nor a trajectory CSV")
            for lemma, entries in _bound_check_rows(rows).items():
                levels = ratios.setdefault(lemma, {})
                for n, value, ok in entries:
                    stable.setdefault(lemma, []).append(ok)
                    if value is not None:
                        levels[n] = max(levels.get(n, 0.0), value)
        elif path.name.endswith(".summary.json"):
            summary = CampaignSummary.model_validate_json(path.read_text())
            previous = summaries.get(summary.lemma)
            summaries[summary.lemma] = summary if previous is None else _merge(previous, summary)
            if summary.extra.get("series"):
                target = out / f"{summary.lemma}_ratio_vs_t.dat"
                written.append(str(_write_columns(target, [tuple(p) for p in summary.extra["series"]])))
            for j, sums in enumerate(summary.extra.get("partial_sums", [])):
                target = out / f"{summary.lemma}_partial_sums_{j}.dat"
                written.append(str(_write_columns(target, [tuple(p) for p in sums])))
        else:
            raise ConfigError(f"unrecognised report input {path}")

    for lemma in sorted(ratios):
        pairs = sorted(ratios[lemma].items())
        written.append(str(_write_columns(out / f"{lemma}_ratio_vs_n.dat", pairs)))
        if lemma not in summaries:
            values = list(ratios[lemma].values())
            summaries[lemma] = CampaignSummary(
                lemma=lemma,
                count=len(stable[lemma]),
                max_ratio=max(values) if values else None,
                all_stable=all(stable[lemma]),
                stable_count=sum(stable[lemma]),
            )

    table = render_summary([summaries[k] for k in sorted(summaries)], title="pprobe report")
    (out / "summary.md").parent.mkdir(parents=True, exist_ok=True)
    (out / "summary.md").write_text(table)
    written.append(str(out / "summary.md"))
    logger.info("report written", inputs=len(inputs), files=len(written))
    print(table, end="")
    print(compact_json({"written": written}))
    return EXIT_OK


def _merge(a: CampaignSummary, b: CampaignSummary) -> CampaignSummary:
    ratios = [r for r in (a.max_ratio, b.max_ratio) if r is not None]
    merged = a.model_copy(update={
        "count": a.count + b.count,
        "max_ratio": max(ratios) if ratios else None,
        "all_stable": a.all_stable and b.all_stable,
        "stable_count": a.stable_count + b.stable_count,
        "vacuous_count": a.vacuous_count + b.vacuous_count,
        "constants": {k: max((v for v in (a.constants.get(k), b.constants.get(k)) if v is not None), default=None)
                      for k in set(a.constants) | set(b.constants)},
    })
    return merged
