"""Integration tests for the command line interface."""

import csv
import json

import pytest
import yaml
from typer.testing import CliRunner

from cli import app

runner = CliRunner()

pytestmark = pytest.mark.integration

SHORT_FLOW = {
    "preset": "theory",
    "generator": {"kind": "fig1", "seed": 7},
    "iterations": 300,
    "impairments": {"delay_coeff": 0.0},
}


def _write_config(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


def _invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


@pytest.fixture
def flow_config(tmp_path):
    return _write_config(tmp_path / "flow.yaml", SHORT_FLOW)


class TestGenerate:
    def test_generate_fig1(self, test_env, tmp_path):
        """Test a problem file is written and its status printed."""
        out = tmp_path / "fig1.json"
        result = _invoke("generate", out, "--kind", "fig1", "--seed", 7)
        assert result.exit_code == 0, result.output
        status = json.loads(result.output)
        assert status["slater"] is True
        assert json.loads(out.read_text())["kind"] == "flow"

    def test_generate_refuses_overwrite(self, test_env, tmp_path):
        """Test an existing file is kept unless --overwrite is given."""
        out = tmp_path / "p.json"
        assert _invoke("generate", out).exit_code == 0
        result = _invoke("generate", out)
        assert result.exit_code == 1
        assert "already exists" in result.output
        assert _invoke("generate", out, "--overwrite").exit_code == 0

    def test_generate_from_spec(self, test_env, tmp_path):
        """Test a YAML generator spec with tier counts."""
        spec = _write_config(tmp_path / "spec.yaml", {"kind": "quadratic", "n_r": 4})
        out = tmp_path / "q.json"
        result = _invoke("generate", out, "--spec", spec)
        assert result.exit_code == 0, result.output
        status = json.loads(result.output)
        assert status["kind"] == "quadratic"
        assert status["n_rows"] == 3 + 4
        assert status["kkt_nonsingular"] is True


class TestRun:
    def test_run_writes_directory(self, test_env, tmp_path, flow_config):
        """Test the run directory holds config echo, problem, trace and summary."""
        run_dir = tmp_path / "run1"
        result = _invoke("run", "-c", flow_config, "-o", run_dir)
        assert result.exit_code == 0, result.output
        assert sorted(p.name for p in run_dir.iterdir()) == [
            "config.yaml",
            "problem.json",
            "summary.json",
            "trace.csv",
        ]
        echo = yaml.safe_load((run_dir / "config.yaml").read_text())
        assert echo["problem"] == "problem.json"
        assert echo["generator"] is None
        summary = json.loads((run_dir / "summary.json").read_text())
        assert summary["trace_rows"] == 301
        assert summary["slater"] is True

    def test_rerun_from_echo_is_identical(self, test_env, tmp_path, flow_config):
        """Test the echoed config reproduces the trace byte for byte."""
        first = tmp_path / "first"
        assert _invoke("run", "-c", flow_config, "-o", first).exit_code == 0
        second = tmp_path / "second"
        result = _invoke("run", "-c", first / "config.yaml", "-o", second)
        assert result.exit_code == 0, result.output
        assert (first / "trace.csv").read_bytes() == (second / "trace.csv").read_bytes()

    def test_run_refuses_existing_directory(self, test_env, tmp_path, flow_config):
        """Test a populated run directory needs --overwrite."""
        run_dir = tmp_path / "run"
        assert _invoke("run", "-c", flow_config, "-o", run_dir).exit_code == 0
        result = _invoke("run", "-c", flow_config, "-o", run_dir)
        assert result.exit_code == 1
        assert _invoke("run", "-c", flow_config, "-o", run_dir, "--overwrite").exit_code == 0

    def test_seed_and_algorithm_overrides(self, test_env, tmp_path, flow_config):
        """Test command line overrides land in the summary."""
        run_dir = tmp_path / "sync"
        result = _invoke(
            "run", "-c", flow_config, "-o", run_dir, "--seed", 4, "--algorithm", "sync_pd"
        )
        assert result.exit_code == 0, result.output
        summary = json.loads((run_dir / "summary.json").read_text())
        assert (summary["seed"], summary["algorithm"]) == (4, "sync_pd")

    def test_default_directory_under_output_root(self, test_env, output_root, flow_config):
        """Test runs without -o land under the output root."""
        result = _invoke("run", "-c", flow_config, "--output-root", output_root)
        assert result.exit_code == 0, result.output
        assert (output_root / "dapdsco-theory-seed0" / "trace.csv").exists()

    def test_missing_problem_file(self, test_env, tmp_path):
        """Test a missing problem exits 1 and writes nothing."""
        config = _write_config(
            tmp_path / "bad.yaml", {"problem": "missing.json", "iterations": 10}
        )
        run_dir = tmp_path / "never"
        result = _invoke("run", "-c", config, "-o", run_dir)
        assert result.exit_code == 1
        assert "error:" in result.output
        assert not run_dir.exists()

    def test_invalid_key_named(self, test_env, tmp_path):
        """Test unknown keys exit 1 naming the key."""
        config = _write_config(tmp_path / "bad.yaml", {**SHORT_FLOW, "impairments": {"lag": 3}})
        result = _invoke("run", "-c", config, "-o", tmp_path / "x")
        assert result.exit_code == 1
        assert "impairments.lag" in result.output

    def test_preset_mismatch(self, test_env, tmp_path, flow_config):
        """Test a --preset differing from the config file is refused."""
        result = _invoke("run", "-c", flow_config, "--preset", "experiment-s10")
        assert result.exit_code == 1
        assert "preset" in result.output


class TestVerify:
    def test_verify_passes(self, test_env, tmp_path, flow_config):
        """Test an unimpaired diminishing-step run passes its checks."""
        run_dir = tmp_path / "run"
        assert _invoke("run", "-c", flow_config, "-o", run_dir).exit_code == 0
        result = _invoke("verify", run_dir)
        assert result.exit_code == 0, result.output
        assert "descent: pass" in result.output
        assert "error_series: pass" in result.output
        assert "rate: n/a" in result.output
        report = json.loads((run_dir / "analysis.json").read_text())
        assert report["passed"] is True
        assert report["iteration_budget"] > 0

    def test_verify_fails_constant_steps(self, test_env, tmp_path):
        """Test constant steps fail the error-series check with exit code 2."""
        config = _write_config(
            tmp_path / "const.yaml",
            {
                **SHORT_FLOW,
                "steps": {
                    "alpha": {"kind": "constant", "value": 0.01},
                    "beta": {"kind": "constant", "value": 0.05},
                },
            },
        )
        run_dir = tmp_path / "run"
        assert _invoke("run", "-c", config, "-o", run_dir).exit_code == 0
        result = _invoke("verify", run_dir)
        assert result.exit_code == 2
        assert "error_series: fail" in result.output

    def test_verify_quadratic_not_applicable(self, test_env, tmp_path):
        """Test theory checks are n/a on the quadratic variant."""
        config = _write_config(
            tmp_path / "quad.yaml", {"preset": "experiment-s10", "iterations": 200}
        )
        run_dir = tmp_path / "run"
        assert _invoke("run", "-c", config, "-o", run_dir).exit_code == 0
        result = _invoke("verify", run_dir)
        assert result.exit_code == 0, result.output
        assert "descent: n/a" in result.output
        assert "error_series: n/a" in result.output

    def test_verify_truncated_trace(self, test_env, tmp_path, flow_config):
        """Test a truncated trace exits 1 with a schema error."""
        run_dir = tmp_path / "run"
        assert _invoke("run", "-c", flow_config, "-o", run_dir).exit_code == 0
        trace = run_dir / "trace.csv"
        lines = trace.read_text().splitlines(keepends=True)
        trace.write_text("".join(lines[:100]))
        result = _invoke("verify", run_dir)
        assert result.exit_code == 1
        assert "truncated" in result.output

    def test_verify_missing_directory(self, test_env, tmp_path):
        """Test a missing run directory exits 1."""
        result = _invoke("verify", tmp_path / "nowhere")
        assert result.exit_code == 1


class TestCompareAndSweep:
    def test_compare_rows(self, test_env, tmp_path, flow_config):
        """Test per-seed rows followed by one median row per algorithm."""
        out = tmp_path / "cmp"
        result = _invoke(
            "compare", "-a", "dapdsco", "-a", "sync_pd", "-s", 0, "-s", 1, "-s", 2,
            "-c", flow_config, "-o", out,
        )
        assert result.exit_code == 0, result.output
        with open(out / "compare.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 2 * 3 + 2
        assert [r["seed"] for r in rows[-2:]] == ["median", "median"]
        assert set(rows[0]) == {
            "algorithm", "seed", "final_cost", "gap", "violation", "messages", "k_star",
        }

    def test_compare_needs_two_algorithms(self, test_env, tmp_path, flow_config):
        """Test a single algorithm is refused."""
        result = _invoke("compare", "-a", "dapdsco", "-c", flow_config, "-o", tmp_path / "c")
        assert result.exit_code == 1

    def test_sweep_cells(self, test_env, tmp_path, flow_config):
        """Test one aggregate row per grid cell."""
        out = tmp_path / "sweep"
        result = _invoke(
            "sweep", "-g", "impairments.loss_rate=0.0,0.2", "-s", 0, "-s", 1,
            "-c", flow_config, "-o", out,
        )
        assert result.exit_code == 0, result.output
        with open(out / "sweep.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [r["impairments.loss_rate"] for r in rows] == ["0.0", "0.2"]
        assert all(r["seeds"] == "2" for r in rows)

    def test_sweep_cap(self, test_env, monkeypatch, tmp_path, flow_config):
        """Test grids larger than the cap are refused before running."""
        monkeypatch.setenv("DAPD_SWEEP_CAP", "2")
        out = tmp_path / "big"
        result = _invoke(
            "sweep", "-g", "impairments.loss_rate=0.0,0.1,0.2", "-c", flow_config, "-o", out
        )
        assert result.exit_code == 1
        assert "sweep cap" in result.output
        assert not out.exists()

    def test_sweep_bad_grid_entry(self, test_env, tmp_path, flow_config):
        """Test malformed grid entries are reported."""
        result = _invoke("sweep", "-g", "loss_rate", "-c", flow_config)
        assert result.exit_code == 1
        assert "key=v1,v2" in result.output


class TestUsageErrors:
    @pytest.mark.parametrize(
        "args",
        [
            ("run", "--no-such-flag"),
            ("run", "--seed", "notint"),
            ("verify",),
            ("no-such-verb",),
        ],
        ids=["unknown-option", "bad-int", "missing-argument", "unknown-command"],
    )
    def test_usage_errors_exit_one(self, test_env, args):
        """Test parser errors share exit code 1 with config errors."""
        result = _invoke(*args)
        assert result.exit_code == 1, result.output
