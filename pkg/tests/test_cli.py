import json

import numpy as np
import pytest

from src.api.schemas import BOUND_CHECK_COLUMNS, TRAJECTORY_COLUMNS


def small_verify_config(write_config, field="constant"):
    return write_config({
        "field": {"name": field},
        "quadrature": {"order": 4, "samples": 64},
        "region": {"n_min": 0, "n_max": 0, "rectangles": 3},
    })


class TestGen:

    def test_random_field_is_deterministic(self, tmp_path, run_cli):
        code_a, out_a = run_cli("gen", "--seed", 3, "--grid-n", 16, "--out", tmp_path / "a")
        code_b, out_b = run_cli("gen", "--seed", 3, "--grid-n", 16, "--out", tmp_path / "b")
        assert code_a == code_b == 0
        a, b = json.loads(out_a), json.loads(out_b)
        assert a["sha256"] == b["sha256"]
        assert float(a["div_residual"]) < 1e-10
        assert (tmp_path / "a" / "random_seed3_n16.dff1").exists()

    def test_missing_config_is_a_usage_error(self, tmp_path, run_cli):
        code, _ = run_cli("gen", "--config", tmp_path / "absent.toml")
        assert code == 2

    def test_invalid_config_is_a_usage_error(self, run_cli, write_config):
        code, _ = run_cli("gen", "--config", write_config({"grid": {"n": -4}}))
        assert code == 2


class TestVerify:

    def test_unknown_lemma(self, run_cli):
        with pytest.raises(SystemExit) as exc:
            run_cli("verify", "9.9")
        assert exc.value.code == 2

    def test_constant_field_gives_zero_ratios(self, tmp_path, run_cli, write_config):
        code, out = run_cli("verify", "2.1", "--config", small_verify_config(write_config), "--out", tmp_path)
        assert code == 0
        lines = (tmp_path / "verify_2.1.csv").read_text().splitlines()
        assert lines[0] == ",".join(BOUND_CHECK_COLUMNS)
        assert len(lines) == 4
        assert all(line.split(",")[-2:] == ["0", "1"] for line in lines[1:])
        assert json.loads(out)["constants"] == {"lambda_hat": 0.0}

    def test_output_is_byte_stable(self, tmp_path, run_cli, write_config):
        config = small_verify_config(write_config, field="abc")
        codes = [run_cli("verify", "2.3c", "--config", config, "--out", tmp_path / d)[0] for d in ("a", "b")]
        assert codes[0] == codes[1]
        first = (tmp_path / "a" / "verify_2.3c.csv").read_bytes()
        assert first == (tmp_path / "b" / "verify_2.3c.csv").read_bytes()
        summary = json.loads((tmp_path / "a" / "verify_2.3c.summary.json").read_text())
        assert summary["lemma"] == "2.3c" and "config_hash" in summary["extra"]

    def test_json_records(self, tmp_path, run_cli, write_config):
        code, _ = run_cli("verify", "2.1", "--config", small_verify_config(write_config), "--out", tmp_path,
                          "--format", "json")
        assert code == 0
        rows = json.loads((tmp_path / "verify_2.1.checks.json").read_text())
        assert len(rows) == 3 and all(r["vacuous"] for r in rows)

    def test_theorem_ratio_for_abc(self, tmp_path, run_cli):
        code, out = run_cli("verify", "thm1.1", "--field", "abc", "--grid-n", 16, "--out", tmp_path)
        assert code == 0
        assert json.loads(out)["constants"]["beta_hat"] == pytest.approx(np.sqrt(2.0) / 2.0, rel=1e-10)


class TestPressure:

    def test_abc_at_origin(self, tmp_path, run_cli):
        code, out = run_cli("pressure", "--field", "abc", "--grid-n", 16, "--out", tmp_path)
        assert code == 0
        report = json.loads(out)["reports"][0]
        assert report["method"] == "spectral"
        assert np.allclose(report["grad_p"], [-1.0, -1.0, -1.0], atol=1e-9)
        assert (tmp_path / "pressure.json").exists()

    def test_constant_field(self, tmp_path, run_cli):
        code, out = run_cli("pressure", "--field", "constant", "--grid-n", 16, "--out", tmp_path)
        assert code == 0
        assert np.allclose(json.loads(out)["reports"][0]["grad_p"], 0.0, atol=1e-12)

    @staticmethod
    def _swirl_config(write_config, box):
        return write_config({
            "field": {"name": "curl_potential",
                      "params": {"centers": [[0.3, 0.1, 0.0]], "axes": [[0.0, 0.0, 1.0]]}},
            "grid": {"n": 64, "box": box},
            "pressure": {"methods": ["coulomb", "spectral"], "r_excl": 1e-4, "refine": 1},
        })

    def test_compact_swirl_routes_agree(self, tmp_path, run_cli, write_config):
        code, out = run_cli("pressure", "--config", self._swirl_config(write_config, 2 * np.pi), "--out", tmp_path)
        assert code in (0, 3)
        comparison = json.loads(out)
        assert [r["method"] for r in comparison["reports"]] == ["coulomb", "spectral"]
        assert comparison["disagreement"]["coulomb-spectral"] < 1e-2

    def test_box_too_small_for_the_support(self, tmp_path, run_cli, write_config):
        code, _ = run_cli("pressure", "--config", self._swirl_config(write_config, 4.0), "--out", tmp_path)
        assert code == 2

    def test_coulomb_needs_decay(self, tmp_path, run_cli):
        code, _ = run_cli("pressure", "--field", "abc", "--method", "coulomb", "--out", tmp_path)
        assert code == 1


class TestSimulate:

    def test_zero_final_time(self, tmp_path, run_cli):
        code, out = run_cli("simulate", "--field", "taylor_green", "--grid-n", 16, "--t-final", 0, "--out", tmp_path)
        assert code == 0
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
        assert len(lines) == 2
        summary = json.loads(out)
        assert summary["steps"] == 0
        assert (tmp_path / "simulate_summary.json").exists()


class TestReport:

    def test_needs_inputs(self, tmp_path, run_cli):
        code, _ = run_cli("report", "--out", tmp_path)
        assert code == 2

    def test_unrecognised_input(self, tmp_path, run_cli):
        stray = tmp_path / "notes.txt"
        stray.write_text("hello")
        code, _ = run_cli("report", stray, "--out", tmp_path / "rep")
        assert code == 2

    def test_aggregates_verify_outputs(self, tmp_path, run_cli, write_config):
        config = small_verify_config(write_config)
        assert run_cli("verify", "2.1", "--config", config, "--out", tmp_path / "run")[0] == 0
        code, out = run_cli("report", tmp_path / "run" / "verify_2.1.csv",
                            tmp_path / "run" / "verify_2.1.summary.json", "--out", tmp_path / "rep")
        assert code == 0
        assert "| 2.1 | 3 |" in out
        rows = (tmp_path / "rep" / "2.1_ratio_vs_n.dat").read_text().splitlines()
        assert rows and all(row.split()[1] == "0" for row in rows)
        assert (tmp_path / "rep" / "summary.md").exists()

    def test_merges_repeated_summaries(self, tmp_path, run_cli, write_config):
        config = small_verify_config(write_config)
        for d in ("a", "b"):
            run_cli("verify", "2.1", "--config", config, "--out", tmp_path / d)
        code, out = run_cli("report", tmp_path / "a" / "verify_2.1.summary.json",
                            tmp_path / "b" / "verify_2.1.summary.json", "--out", tmp_path / "rep")
        assert code == 0
        assert "| 2.1 | 6 |" in out
