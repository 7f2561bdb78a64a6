import threading
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.api.schemas import BoundCheck, CampaignSummary, RunConfig, fmt_float
from src.errors import CampaignError, ConfigError, FieldError
from src.execution.census import CensusExecutor, splitmix64
from src.orchestration.campaigns import (
    CONSTANT_NAMES,
    LEMMAS,
    CampaignRunner,
    render_summary,
    scale_surface,
    summarize,
    write_checks_csv,
)


def small_config(**sections):
    payload = {"quadrature": {"order": 4, "samples": 64}, "region": {"n_min": 0, "n_max": 0, "rectangles": 3}}
    payload.update(sections)
    return RunConfig.model_validate(payload)


class TestSeeding:

    def test_known_values(self):
        assert splitmix64(0, 0) == 0xE220A8397B1DCDAF
        assert splitmix64(0, 1) == 0x6E789E6AA1B965F4

    @given(seed=st.integers(min_value=0, max_value=2 ** 63), index=st.integers(min_value=0, max_value=10 ** 6))
    @settings(max_examples=50, deadline=None)
    def test_outputs_are_64_bit(self, seed, index):
        assert 0 <= splitmix64(seed, index) < 2 ** 64

    def test_items_get_distinct_seeds(self):
        assert len({splitmix64(42, i) for i in range(1000)}) == 1000

    def test_negative_inputs(self):
        with pytest.raises(CampaignError):
            splitmix64(-1, 0)


class TestCensusExecutor:

    def test_results_keep_submission_order(self):
        def slow_square(i):
            time.sleep(0.001 * (5 - i % 5))
            return i * i

        assert CensusExecutor(workers=4).map(slow_square, range(20)) == [i * i for i in range(20)]

    def test_uses_worker_threads(self):
        names = CensusExecutor(workers=3).map(lambda _: threading.current_thread().name, range(6))
        assert all(name.startswith("census") for name in names)

    def test_probe_errors_pass_through(self):
        def fail(_):
            raise FieldError("bad field")

        with pytest.raises(FieldError):
            CensusExecutor(workers=2).map(fail, range(3))

    def test_other_errors_are_wrapped(self):
        with pytest.raises(CampaignError, match="item 0"):
            CensusExecutor(workers=1).map(lambda x: 1 / x, [0])


class TestCampaigns:

    def test_unknown_lemma(self):
        with pytest.raises(CampaignError):
            CampaignRunner(small_config(), CensusExecutor(1)).run("9.9")

    def test_constant_field_rectangles_are_vacuous(self):
        config = small_config(field={"name": "constant"})
        checks, summary = CampaignRunner(config, CensusExecutor(1)).run("2.1")
        assert len(checks) == 3
        assert all(c.vacuous and c.ratio == 0.0 for c in checks)
        assert summary.constants == {"lambda_hat": 0.0}
        assert summary.vacuous_count == 3

    def test_random_census_is_reproducible(self):
        config = small_config(field={"name": "random", "count": 2, "k_max": 2}, grid={"n": 8})
        runner = CampaignRunner(config, CensusExecutor(2))
        first = [c.model_dump() for c in runner.run("2.2")[0]]
        second = [c.model_dump() for c in CampaignRunner(config, CensusExecutor(1)).run("2.2")[0]]
        assert first == second
        assert [c["region"]["n"] for c in first] == [0, 0]

    def test_census_fields_from_a_grid_file(self, tmp_path, random_grid):
        from src.fields.io import write_grid

        write_grid(tmp_path / "f.dff1", random_grid)
        fields = CampaignRunner(small_config(field={"input": str(tmp_path / "f.dff1")}), CensusExecutor(1)).census_fields()
        assert len(fields) == 1 and fields[0].grid is not None
        assert np.array_equal(fields[0].grid.u, random_grid.u)

    def test_theorem_campaign_on_abc(self):
        config = small_config(field={"name": "abc"}, grid={"n": 16})
        checks, summary = CampaignRunner(config, CensusExecutor(1)).run("thm1.1")
        assert checks[0].extra["route"] == "spectral"
        assert summary.constants["beta_hat"] == pytest.approx(np.sqrt(2.0) / 2.0, rel=1e-10)

    @pytest.mark.parametrize("lemma", ["3.1", "3.2"])
    def test_semigroup_census_adds_random_profiles(self, lemma):
        config = small_config(semigroup={"count": 2, "n": 1024, "box": 16.0, "times": [0.5, 1.0], "steps": 8})
        checks, summary = CampaignRunner(config, CensusExecutor(2)).run(lemma)
        assert [c.field["profile"] for c in checks] == ["smoothed_step", "random_bounded", "random_bounded"]
        assert checks[1].field["seed"] != checks[2].field["seed"]
        assert summary.max_ratio == max(c.ratio for c in checks)
        assert summary.all_stable

    def test_semigroup_census_without_random_profiles(self):
        config = small_config(semigroup={"count": 0, "n": 1024, "box": 16.0, "times": [1.0], "steps": 8})
        checks, summary = CampaignRunner(config, CensusExecutor(1)).run("3.2")
        assert len(checks) == 1
        assert summary.extra["convergence"] < 1e-10

    def test_scale_surfaces(self):
        assert scale_surface("disc", 1).radius == 4.0
        assert scale_surface("annulus", 0).r_in == 1.0
        assert scale_surface("cylinder_segment", -1).length == 0.5
        with pytest.raises(CampaignError):
            scale_surface("sphere", 0)


class TestSummaries:

    @staticmethod
    def _check(ratio, stable=True):
        return BoundCheck.build("2.3c", ratio, 1.0, refinement_stable=stable)

    def test_half_census_drift(self):
        indexed = [(0, self._check(1.0)), (1, self._check(2.0)), (2, self._check(4.0)), (3, self._check(3.0))]
        summary = summarize("2.3c", indexed, field_count=4)
        assert summary.max_ratio == 4.0
        assert summary.extra["max_ratio_half_census"] == 2.0
        assert summary.extra["census_drift"] == pytest.approx(0.5)
        assert summary.constants == {CONSTANT_NAMES["2.3c"]: 4.0}

    def test_single_field_has_no_drift(self):
        summary = summarize("2.3c", [(0, self._check(1.0))], field_count=1)
        assert "census_drift" not in summary.extra

    def test_every_lemma_names_a_constant(self):
        assert set(CONSTANT_NAMES) == set(LEMMAS)

    def test_rendered_table_flags_unstable_lemmas(self):
        good = CampaignSummary.from_checks("2.1", [self._check(0.5)])
        good.constants["lambda_hat"] = 0.5
        bad = CampaignSummary.from_checks("2.2", [self._check(0.25, stable=False)])
        text = render_summary([good, bad], title="Census")
        assert text.startswith("# Census")
        assert "| 2.1 | 1 | 0.5 | 1/1 | 0 | lambda_hat=0.5 |" in text
        assert "Unstable under refinement: 2.2." in text

    def test_csv_layout(self, tmp_path):
        path = write_checks_csv(tmp_path / "checks.csv", [self._check(0.1)])
        lines = path.read_text().splitlines()
        assert lines[0] == "lemma,field,region,lhs,rhs_factor,ratio,stable"
        assert lines[1].endswith(f",{fmt_float(0.1)},1")


class TestRunConfig:

    def test_overrides_win(self, write_config):
        path = write_config({"seed": 3, "grid": {"n": 16}})
        config = RunConfig.load(path, {"seed": 9, "grid.box": 1.0, "field.name": None})
        assert (config.seed, config.grid.n, config.grid.box, config.field.name) == (9, 16, 1.0, "random")

    def test_toml_files(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('seed = 5\n[field]\nname = "abc"\n')
        config = RunConfig.load(path)
        assert config.seed == 5 and config.field.name == "abc"

    def test_unknown_keys_are_rejected(self, write_config):
        with pytest.raises(ConfigError):
            RunConfig.load(write_config({"grid": {"size": 16}}))
        with pytest.raises(ConfigError):
            RunConfig.load(write_config({"region": {"n_min": 2, "n_max": 1}}))

    def test_missing_or_malformed_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / "absent.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            RunConfig.load(bad)

    def test_hash_ignores_output_paths(self):
        a = RunConfig.model_validate({"seed": 1, "output": {"out": "a"}})
        b = RunConfig.model_validate({"seed": 1, "output": {"out": "b", "format": "json"}})
        c = RunConfig.model_validate({"seed": 2})
        assert a.config_hash() == b.config_hash() != c.config_hash()
