import numpy as np
import pytest

from src.errors import SimulationError
from src.fields.grid import GridField, random_solenoidal, sample_on_grid
from src.fields.io import read_sidecar
from src.nse_sim.integrator import SimConfig, energy, initial_state, run, step, tail_fraction
from src.nse_sim.monitor import R2_BOUND, monitor, settling_index


class TestIntegrator:

    def test_taylor_green_decays_exactly(self, taylor_green):
        traj = run(SimConfig(n=16, t_final=0.5, viscosity=1), sample_on_grid(taylor_green, 16))
        assert traj.energy_monotone and traj.divergence_ok
        assert traj.final.t == pytest.approx(0.5)
        for row in traj.rows:
            assert row.sup_u == pytest.approx(np.exp(-2.0 * row.t), abs=1e-12)
        assert traj.rows[-1].energy == pytest.approx((2 * np.pi) ** 3 / 4 * np.exp(-2.0), rel=1e-12)

    def test_taylor_green_energy_decay_on_a_finer_grid(self, taylor_green):
        traj = run(SimConfig(n=32, t_final=1.0, viscosity=1), sample_on_grid(taylor_green, 32))
        e0 = (2 * np.pi) ** 3 / 4
        assert traj.energy_monotone and traj.divergence_ok
        assert traj.final.t == pytest.approx(1.0)
        for row in traj.rows:
            assert row.energy == pytest.approx(e0 * np.exp(-4.0 * row.t), rel=1e-10)

    def test_zero_final_time_gives_one_row(self, taylor_green):
        traj = run(SimConfig(n=16, t_final=0.0), sample_on_grid(taylor_green, 16))
        assert len(traj.rows) == 1
        assert traj.final.steps == 0 and traj.dt == 0.0

    def test_abc_is_steady_under_euler(self, abc):
        grid = sample_on_grid(abc, 16)
        traj = run(SimConfig(n=16, t_final=0.3, viscosity=0), grid)
        assert np.allclose(traj.final.grid.u, grid.u, atol=1e-11)
        assert traj.reliable
        assert all(row.r1 == pytest.approx(np.sqrt(2.0) / 2.0, rel=1e-10) for row in traj.rows)

    def test_taylor_green_energy(self, taylor_green):
        state = initial_state(sample_on_grid(taylor_green, 16), SimConfig(n=16))
        assert energy(state.u_hat, 2 * np.pi) == pytest.approx((2 * np.pi) ** 3 / 4, rel=1e-13)
        assert tail_fraction(state.u_hat) == pytest.approx(0.0, abs=1e-20)

    def test_cfl_violation(self, taylor_green):
        state = initial_state(sample_on_grid(taylor_green, 16), SimConfig(n=16))
        with pytest.raises(SimulationError):
            step(state, 1.0)
        with pytest.raises(SimulationError):
            step(state, 0.0)

    def test_grid_size_must_match(self, taylor_green):
        with pytest.raises(SimulationError):
            initial_state(sample_on_grid(taylor_green, 16), SimConfig(n=32))

    def test_bad_config(self):
        with pytest.raises(SimulationError):
            SimConfig(viscosity=2)
        with pytest.raises(SimulationError):
            SimConfig(t_final=-1.0)

    def test_checkpoints_are_written(self, tmp_path, taylor_green):
        cfg = SimConfig(n=16, t_final=0.1, dt=0.02, checkpoint_every=2, checkpoint_dir=tmp_path, config_hash="abc123")
        traj = run(cfg, sample_on_grid(taylor_green, 16))
        assert [p.name for p in traj.checkpoints] == ["state_000002.dff1", "state_000004.dff1"]
        side = read_sidecar(traj.checkpoints[0])
        assert side["config_hash"] == "abc123"
        assert side["t"] == pytest.approx(0.04)

    def test_diagnostics_thinning(self, taylor_green):
        cfg = SimConfig(n=16, t_final=0.1, dt=0.02, diag_every=2)
        traj = run(cfg, sample_on_grid(taylor_green, 16))
        assert [round(r.t, 10) for r in traj.rows] == [0.0, 0.04, 0.08, 0.1]


class TestMonitor:

    def test_settling_index(self):
        assert settling_index([5, 4, 3, 1, 1, 1, 1, 1]) == 3
        assert settling_index([1, 1, 1, 1]) == 0

    def test_small_random_field(self):
        grid = random_solenoidal(seed=1, k_max=2, amplitude=0.1, n=16)
        report = monitor(run(SimConfig(n=16, t_final=1.0), grid))
        assert not report.vacuous
        assert report.r2_within_bound and report.r2_max <= R2_BOUND
        assert report.settling_time is not None
        assert report.beta_hat is not None and report.beta2_hat is not None
        assert report.energy_monotone

    def test_zero_field_is_vacuous(self):
        traj = run(SimConfig(n=16, t_final=0.1), GridField(u=np.zeros((3, 16, 16, 16))))
        report = monitor(traj)
        assert report.vacuous
        assert report.beta_hat is None
        assert "vacuous" in report.notes[-1]

    def test_corollary_quantity(self, taylor_green):
        report = monitor(run(SimConfig(n=16, t_final=0.0), sample_on_grid(taylor_green, 16)))
        assert report.corollary_quantity == pytest.approx(2.0 * (2 * np.pi) ** 3 / 4)
