"""Pseudo-spectral Navier-Stokes / Euler integrator on the periodic box.

    du/dt + P_L[(u . grad) u] = nu laplace(u)

The viscous term is handled exactly by an integrating factor and the
Leray-projected, 2/3-dealiased nonlinearity by classical RK4.
"""
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from src.api.schemas import Diagnostics
from src.errors import SimulationError
from src.fields import spectral
from src.fields.grid import GridField
from src.fields.io import write_checkpoint
from src.logging.logger import get_logger
from src.pressure.spectral import solve_pressure_hat

logger = get_logger(__name__)

CFL_LIMIT = 0.5
CFL_DEFAULT = 0.25
TAIL_SENTINEL = 1e-6


@dataclass(frozen=True)
class SimConfig:
    n: int = 32
    box: float = 2.0 * np.pi
    viscosity: int = 1
    t_final: float = 1.0
    dt: Optional[float] = None
    nonlinear: bool = True
    diag_every: int = 1
    checkpoint_every: Optional[int] = None
    checkpoint_dir: Optional[Path] = None
    config_hash: str = ""
    energy_tol: float = 1e-10
    div_tol: float = 1e-9

    def __post_init__(self):
        if self.viscosity not in (0, 1):
            raise SimulationError("viscosity must be 0 (Euler) or 1 (Navier-Stokes)")
        if self.t_final < 0:
            raise SimulationError("t_final must be non-negative")


@dataclass(frozen=True, eq=False)
class SimState:
    """Dealiased, solenoidal spectrum ``u_hat`` at time ``t``."""

    u_hat: np.ndarray
    t: float
    config: SimConfig
    steps: int = 0

    @property
    def grid(self) -> GridField:
        return GridField(u=spectral.ifftn_real(self.u_hat), box=self.config.box, meta={"t": self.t})

    @property
    def spacing(self) -> float:
        return self.config.box / self.config.n


def _mask(n: int) -> np.ndarray:
    return spectral.dealias_mask(n)


def initial_state(grid: GridField, config: SimConfig) -> SimState:
    """Dealias and project the initial data."""
    if grid.n != config.n:
        raise SimulationError(f"initial grid has n={grid.n}, config expects n={config.n}")
    u_hat = spectral.leray_project_hat(spectral.fftn(grid.u) * _mask(grid.n), config.box)
    return SimState(u_hat=u_hat, t=0.0, config=config)


def convective_hat(u_hat: np.ndarray, box: float) -> np.ndarray:
    """Dealiased spectrum of (u . grad) u."""
    u = spectral.ifftn_real(u_hat)
    g = spectral.velocity_gradient(u_hat, box)
    return spectral.fftn(np.einsum("i...,ij...->j...", u, g)) * _mask(u_hat.shape[-1])


def nonlinear(u_hat: np.ndarray, config: SimConfig) -> np.ndarray:
    if not config.nonlinear:
        return np.zeros_like(u_hat)
    return -spectral.leray_project_hat(convective_hat(u_hat, config.box), config.box)


def cfl_limit(sup_u: float, spacing: float) -> float:
    return math.inf if sup_u == 0 else CFL_LIMIT * spacing / sup_u


def step(state: SimState, dt: float) -> SimState:
    """One integrating-factor RK4 step."""
    cfg = state.config
    sup_u = float(np.max(np.abs(spectral.ifftn_real(state.u_hat))))
    if dt <= 0:
        raise SimulationError("time step must be positive")
    if dt > cfl_limit(sup_u, state.spacing) * (1 + 1e-12):
        raise SimulationError(f"CFL violated: dt={dt:.3e} > {cfl_limit(sup_u, state.spacing):.3e}")

    # E = e^(-nu k^2 dt / 2): half-step integrating factor
    e_half = np.exp(-cfg.viscosity * spectral.k_squared(state.u_hat.shape[1:], cfg.box) * dt / 2.0)
    u0 = state.u_hat
    k1 = nonlinear(u0, cfg)
    k2 = nonlinear(e_half * (u0 + 0.5 * dt * k1), cfg)
    k3 = nonlinear(e_half * u0 + 0.5 * dt * k2, cfg)
    k4 = nonlinear(e_half ** 2 * u0 + dt * e_half * k3, cfg)
    u_new = e_half ** 2 * u0 + dt / 6.0 * (e_half ** 2 * k1 + 2.0 * e_half * (k2 + k3) + k4)
    u_new = spectral.leray_project_hat(u_new * _mask(cfg.n), cfg.box)

    if not np.all(np.isfinite(u_new)):
        raise SimulationError(f"non-finite values at t={state.t + dt:.6g}: the grid under-resolves the flow")
    return replace(state, u_hat=u_new, t=state.t + dt, steps=state.steps + 1)


def energy(u_hat: np.ndarray, box: float) -> float:
    """(1/2) int |u|^2 via Parseval."""
    n = u_hat.shape[-1]
    return 0.5 * box ** 3 * float(np.sum(np.abs(u_hat) ** 2)) / n ** 6


def tail_fraction(u_hat: np.ndarray) -> float:
    """Share of energy in modes with max |k_i| >= n / 4."""
    n = u_hat.shape[-1]
    power = np.sum(np.abs(u_hat) ** 2, axis=0)
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    tail = np.max(np.abs(spectral.integer_modes(power.shape)), axis=0) >= n / 4.0
    return float(np.sum(power[tail])) / total


def diagnose(state: SimState, sup_u0: float, running_max_u: float) -> Diagnostics:
    cfg = state.config
    u = spectral.ifftn_real(state.u_hat)
    g = spectral.velocity_gradient(state.u_hat, cfg.box)
    _, gp_hat = solve_pressure_hat(convective_hat(state.u_hat, cfg.box), cfg.box)
    sup_u = float(np.max(np.abs(u)))
    sup_gradu = float(np.max(np.abs(g)))
    sup_gradp = float(np.max(np.abs(spectral.ifftn_real(gp_hat))))
    running_max_u = max(running_max_u, sup_u)
    return Diagnostics(
        t=state.t,
        sup_u=sup_u,
        sup_gradu=sup_gradu,
        sup_gradP=sup_gradp,
        energy=energy(state.u_hat, cfg.box),
        r1=sup_gradp / (sup_gradu * sup_u) if sup_gradu * sup_u > 0 else None,
        r2=sup_u / sup_u0 if sup_u0 > 0 else None,
        r3=sup_gradu / running_max_u ** 2 if running_max_u > 0 else None,
        div_residual=float(np.max(np.abs(spectral.divergence(state.u_hat, cfg.box)))),
        tail_fraction=tail_fraction(state.u_hat),
    )


@dataclass
class Trajectory:
    config: SimConfig
    rows: List[Diagnostics] = field(default_factory=list)
    final: Optional[SimState] = None
    dt: float = 0.0
    energy_monotone: bool = True
    divergence_ok: bool = True
    reliable: bool = True
    notes: List[str] = field(default_factory=list)
    checkpoints: List[Path] = field(default_factory=list)


def default_dt(sup_u0: float, spacing: float, t_final: float) -> float:
    if sup_u0 == 0:
        return t_final if t_final > 0 else spacing
    return CFL_DEFAULT * spacing / sup_u0


def _checkpoint(traj: Trajectory, state: SimState) -> None:
    cfg = state.config
    if cfg.checkpoint_dir is None:
        return
    path = Path(cfg.checkpoint_dir) / f"state_{state.steps:06d}.dff1"
    write_checkpoint(path, state.grid, {"t": state.t, "viscosity": cfg.viscosity, "config_hash": cfg.config_hash})
    traj.checkpoints.append(path)


def run(config: SimConfig, initial: GridField) -> Trajectory:
    """Integrate to ``t_final`` and collect diagnostics every ``diag_every`` steps."""
    state = initial_state(initial, config)
    sup_u0 = float(np.max(np.abs(spectral.ifftn_real(state.u_hat))))
    dt_max = config.dt or default_dt(sup_u0, state.spacing, config.t_final)
    steps = int(math.ceil(config.t_final / dt_max - 1e-12)) if config.t_final > 0 else 0
    dt = config.t_final / steps if steps else 0.0
    traj = Trajectory(config=config, dt=dt)
    running = sup_u0
    traj.rows.append(diagnose(state, sup_u0, running))
    logger.info("simulation started", n=config.n, viscosity=config.viscosity, steps=steps, dt=dt)

    prev_energy = traj.rows[0].energy
    for i in range(1, steps + 1):
        state = step(state, dt)
        e = energy(state.u_hat, config.box)
        if config.viscosity == 1 and e > prev_energy * (1 + config.energy_tol) + 1e-300:
            traj.energy_monotone = False
            logger.warning("energy increased", t=state.t, before=prev_energy, after=e)
        prev_energy = e
        if i % config.diag_every == 0 or i == steps:
            row = diagnose(state, sup_u0, running)
            running = max(running, row.sup_u)
            traj.rows.append(row)
            if row.div_residual > config.div_tol * max(row.sup_u, 1e-300):
                traj.divergence_ok = False
            if config.viscosity == 0 and row.tail_fraction >= TAIL_SENTINEL and traj.reliable:
                traj.reliable = False
                traj.notes.append(f"spectral tail fraction {row.tail_fraction:.2e} at t={row.t:.4g}: under-resolved")
                logger.warning("resolution sentinel tripped", t=row.t, tail_fraction=row.tail_fraction)
        if config.checkpoint_every and i % config.checkpoint_every == 0:
            _checkpoint(traj, state)
    traj.final = state
    logger.info("simulation finished", t=state.t, rows=len(traj.rows))
    return traj
