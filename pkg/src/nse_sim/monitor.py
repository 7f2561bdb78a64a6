from typing import List, Optional

import numpy as np

from src.api.schemas import MonitorReport
from src.logging.logger import get_logger
from src.nse_sim.integrator import Trajectory

logger = get_logger(__name__)

R2_BOUND = 9.0 / 8.0


def settling_index(r3: List[float], tol: float = 0.05) -> int:
    """First index after which r3 stays within (1 + tol) of its late-time plateau.

    The plateau is the maximum over the second half of the run.
    """
    values = np.asarray(r3, dtype=float)
    plateau = float(np.max(values[len(values) // 2:]))
    suffix_max = np.maximum.accumulate(values[::-1])[::-1]
    hits = np.nonzero(suffix_max <= (1.0 + tol) * plateau)[0]
    return int(hits[0]) if hits.size else len(values) - 1


def monitor(traj: Trajectory, tol: float = 0.05, r2_tol: float = 1e-3) -> MonitorReport:
    rows = traj.rows
    notes = list(traj.notes)
    steps = traj.final.steps if traj.final is not None else 0
    sup_u0 = rows[0].sup_u if rows else 0.0
    energy0 = rows[0].energy if rows else 0.0
    base = dict(
        steps=steps,
        reliable=traj.reliable,
        energy_monotone=traj.energy_monotone,
        max_div_residual=max((r.div_residual for r in rows), default=0.0),
        corollary_quantity=sup_u0 * 2.0 * energy0,
    )
    if not rows or all(r.sup_u == 0.0 for r in rows):
        notes.append("zero trajectory: all ratios vacuous")
        return MonitorReport(vacuous=True, notes=notes, **base)

    r1 = [r.r1 for r in rows if r.r1 is not None]
    indexed = [(r.t, r.r3) for r in rows if r.r3 is not None]
    settling: Optional[float] = None
    beta2: Optional[float] = None
    horizon = rows[-1].t
    if indexed:
        i0 = settling_index([v for _, v in indexed], tol)
        settling = indexed[i0][0]
        beta2 = max(v for _, v in indexed[i0:])
        horizon = settling
    r2_early = [r.r2 for r in rows if r.r2 is not None and r.t <= horizon]
    r2_max = max(r2_early) if r2_early else None
    within = r2_max is None or r2_max <= R2_BOUND + r2_tol
    if not within:
        notes.append(f"|u(t)|/|u0| reached {r2_max:.4f} before the settling time")
    logger.info("trajectory monitored", beta_hat=max(r1) if r1 else None, settling_time=settling, beta2_hat=beta2)
    return MonitorReport(
        beta_hat=max(r1) if r1 else None,
        r2_max=r2_max,
        r2_within_bound=within,
        settling_time=settling,
        beta2_hat=beta2,
        notes=notes,
        **base,
    )
