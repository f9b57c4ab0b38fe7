"""
Test script to verify config loading and the spinsim commands end to end
"""
import json
import math

import numpy as np
import orjson
import pytest
from click.testing import CliRunner

from spin_cli.cli import cli
from spin_cli.config import apply_overrides, load_config, parse_config
from spin_types.errors import ConfigError
from spin_types.types import RootConfig

QUICK = {
    "run": {"noise_amp": 0.0, "t_diss": 1.0, "t_end": 5.0},
    "sweep": {"n_angles": 2, "trials_per_angle": 2},
    "integrator": {"abs_tol": 1e-7, "rel_tol": 1e-7},
}


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


# Config loading

def test_missing_path_gives_defaults():
    assert load_config(None) == RootConfig()


def test_empty_document_gives_defaults(tmp_path):
    assert load_config(write_config(tmp_path, {})) == RootConfig()


def test_partial_block_keeps_other_defaults(tmp_path):
    config = load_config(write_config(tmp_path, {"model": {"spring_a": 0.0}}))
    assert config.model.spring_a == 0.0
    assert config.model.spring_k == 10.0
    assert config.model.ordering == "ferromagnetic"


@pytest.mark.parametrize("document, path", [
    ({"model": {"rows": 0}}, "model.rows"),
    ({"model": {"spring_a": 2.5}}, "model.spring_a"),
    ({"run": {"t_diss": 50.0, "t_end": 10.0}}, "run"),
    ({"sweep": {"n_angles": 1}}, "sweep.n_angles"),
    ({"model": {"colour": 1}}, "model.colour"),
])
def test_invalid_documents_name_the_field(tmp_path, document, path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(write_config(tmp_path, document))
    assert path in str(excinfo.value)


def test_malformed_json():
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_overrides_are_revalidated():
    config = apply_overrides(RootConfig(), {"sweep.base_seed": 7, "sweep.parallelism": None})
    assert config.sweep.base_seed == 7
    assert config.sweep.parallelism == 1
    with pytest.raises(ConfigError):
        apply_overrides(RootConfig(), {"sweep.parallelism": 0})


# Commands

def test_simulate_up(tmp_path):
    out = tmp_path / "out"
    result = invoke("simulate", "--mean-theta", 0.0, "--config", write_config(tmp_path, QUICK), "--out", out)
    assert result.exit_code == 0, result.output
    assert "Outcome: Up" in result.output
    header = (out / "trajectory.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "t" and header[-1] == "energy"
    assert header[1:10] == [f"theta_{i}" for i in range(9)]
    assert header[10:19] == [f"omega_{i}" for i in range(9)]
    summary = orjson.loads((out / "summary.json").read_bytes())
    assert summary["outcome"] == "Up"
    assert summary["manifest"]["command"] == "simulate"
    assert (out / "config.resolved.json").exists()


def test_simulate_unsettled_exit_code(tmp_path):
    result = invoke("simulate", "--mean-theta", math.pi / 2, "--config", write_config(tmp_path, QUICK),
                    "--out", tmp_path / "out")
    assert result.exit_code == 3, result.output


def test_config_error_exit_code(tmp_path):
    bad = write_config(tmp_path, {"model": {"rows": 0}})
    result = invoke("simulate", "--mean-theta", 0.0, "--config", bad, "--out", tmp_path / "out")
    assert result.exit_code == 2
    assert "model.rows" in result.output


def test_unwritable_output_exit_code(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory", encoding="utf-8")
    result = invoke("simulate", "--mean-theta", 0.0, "--config", write_config(tmp_path, QUICK),
                    "--out", blocker / "out")
    assert result.exit_code == 2
    assert "Cannot write output" in result.output


def test_mean_theta_out_of_range_is_a_usage_error(tmp_path):
    result = invoke("simulate", "--mean-theta", 4.0, "--out", tmp_path / "out")
    assert result.exit_code == 2


def test_ensemble_is_reproducible(tmp_path):
    config = write_config(tmp_path, QUICK)
    first = invoke("ensemble", "--config", config, "--out", tmp_path / "a")
    second = invoke("ensemble", "--config", config, "--out", tmp_path / "b")
    assert first.exit_code == 0, first.output
    assert second.exit_code == 0, second.output
    csv_a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert csv_a == (tmp_path / "b" / "sweep.csv").read_bytes()
    lines = csv_a.decode().splitlines()
    assert lines[0] == "mean_theta,n_up,n_down,n_unsettled,fraction_up,predicted_up,residual"
    assert len(lines) == 3


def test_ensemble_csv_does_not_depend_on_parallelism(tmp_path):
    noisy = {**QUICK, "run": {"t_diss": 1.0, "t_end": 5.0}, "sweep": {"n_angles": 3, "trials_per_angle": 8}}
    config = write_config(tmp_path, noisy)
    serial = invoke("ensemble", "--config", config, "--parallelism", 1, "--out", tmp_path / "serial")
    pooled = invoke("ensemble", "--config", config, "--parallelism", 8, "--out", tmp_path / "pooled")
    assert serial.exit_code == 0, serial.output
    assert pooled.exit_code == 0, pooled.output
    assert (tmp_path / "serial" / "sweep.csv").read_bytes() == (tmp_path / "pooled" / "sweep.csv").read_bytes()


def test_ensemble_seed_flag_is_recorded(tmp_path):
    out = tmp_path / "out"
    result = invoke("ensemble", "--config", write_config(tmp_path, QUICK), "--seed", 11, "--out", out)
    assert result.exit_code == 0, result.output
    resolved = orjson.loads((out / "config.resolved.json").read_bytes())
    assert resolved["sweep"]["base_seed"] == 11


def test_lyapunov_fits_a_series_file(tmp_path):
    times = np.round(np.arange(0.0, 20.05, 0.1), 12)
    lines = ["t,ln_separation"] + [f"{float(t)!r},{1.2 * float(t) + math.log(1e-8)!r}" for t in times]
    series = tmp_path / "series.csv"
    series.write_text("\n".join(lines) + "\n")
    out = tmp_path / "out"
    result = invoke("lyapunov", "--series-file", series, "--out", out)
    assert result.exit_code == 0, result.output
    summary = orjson.loads((out / "summary.json").read_bytes())
    assert summary["lambda"] == pytest.approx(1.2, abs=1e-6)
    assert (out / "divergence.csv").exists()


def test_lyapunov_short_series_exit_code(tmp_path):
    series = tmp_path / "series.csv"
    series.write_text("t,ln_separation\n0.0,-18.4\n0.1,-18.3\n0.2,-18.2\n")
    result = invoke("lyapunov", "--series-file", series, "--out", tmp_path / "out")
    assert result.exit_code == 5


def test_validate_passes_on_noiseless_endpoints(tmp_path):
    out = tmp_path / "out"
    result = invoke("validate", "--config", write_config(tmp_path, QUICK), "--out", out)
    assert result.exit_code == 0, result.output
    assert "Result: PASS" in (out / "report.txt").read_text()
    assert orjson.loads((out / "summary.json").read_bytes())["passed"] is True


def test_validate_zero_threshold_always_fails(tmp_path):
    result = invoke("validate", "--config", write_config(tmp_path, QUICK), "--threshold", 0.0,
                    "--out", tmp_path / "out")
    assert result.exit_code == 1
    assert "Result: FAIL" in result.output


def test_resolved_config_reproduces_the_run(tmp_path):
    first = invoke("ensemble", "--config", write_config(tmp_path, QUICK), "--seed", 3, "--out", tmp_path / "a")
    assert first.exit_code == 0, first.output
    second = invoke("ensemble", "--config", tmp_path / "a" / "config.resolved.json", "--out", tmp_path / "b")
    assert second.exit_code == 0, second.output
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
