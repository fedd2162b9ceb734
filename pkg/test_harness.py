"""
Tests for experiment configuration, replicated runs, CSV output and the CLI.
"""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from exceptions import ConfigurationError
from harness import (
    CSV_HEADER,
    ExperimentConfig,
    build_agent,
    emit_csv,
    manifest_path,
    replica_seed,
    run_experiment,
    write_manifest,
)
from main import EXIT_FAILURE, EXIT_OK, main

REPO_ROOT = Path(__file__).resolve().parent


def small_config(tmp_path, **changes):
    values = dict(algorithms=("greedy", "ofu-mnl++"), N=6, K=2, d=2, T=12, runs=2, seed=3, workers=1,
                  record_timing=False, tau_multiplier=0.004, radius_multiplier=0.3, regularizer_multiplier=0.001,
                  out=str(tmp_path / "regret.csv"))
    values.update(changes)
    return ExperimentConfig(**values)


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


def test_config_file_keys_are_case_insensitive(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text("algorithms=greedy,ucb-mnl\nn=8\nK=2\nd=3\nT=5\nruns=1\nTAU=none\nrecord_timing=false\n")
    cfg = ExperimentConfig.from_sources(str(path))
    assert cfg.algorithms == ("greedy", "ucb-mnl")
    assert (cfg.N, cfg.K, cfg.d, cfg.T, cfg.runs) == (8, 2, 3, 5, 1)
    assert cfg.tau_override is None
    assert cfg.record_timing is False


def test_command_line_overrides_config_file(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text("N=8\nK=2\nT=5\n")
    cfg = ExperimentConfig.from_sources(str(path), {"T": 7, "K": None, "algorithms": ["greedy"]})
    assert cfg.T == 7
    assert cfg.K == 2
    assert cfg.algorithms == ("greedy",)


def test_shipped_smoke_config_parses():
    cfg = ExperimentConfig.from_sources(str(REPO_ROOT / "configs" / "smoke.env"))
    assert cfg.N == 10 and cfg.K == 3 and cfg.d == 3
    assert cfg.record_timing is False
    assert "ofu-mnl++" in cfg.algorithms


def test_only_the_runtime_config_records_timing():
    shipped = {path.stem: ExperimentConfig.from_sources(str(path)) for path in (REPO_ROOT / "configs").glob("*.env")}
    assert {"smoke", "regret_b1", "regret_b2", "regret_d10"} <= set(shipped)
    assert [name for name, cfg in shipped.items() if cfg.record_timing] == ["regret_b1"]
    for name in ("regret_b1", "regret_b2", "regret_d10"):
        cfg = shipped[name]
        assert (cfg.N, cfg.K, cfg.T) == (50, 5, 3000)
        assert (cfg.tau_multiplier, cfg.radius_multiplier, cfg.regularizer_multiplier) == (0.004, 0.3, 0.001)


def test_unknown_config_key_is_reported(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text("N=8\nHORIZON=5\n")
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_sources(str(path))
    assert [e.code for e in excinfo.value.errors] == ["UNKNOWN_KEY"]


def test_unparsable_value_is_reported(tmp_path):
    path = tmp_path / "exp.env"
    path.write_text("T=many\n")
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_sources(str(path))
    assert excinfo.value.errors[0].code == "INVALID_DATA_TYPE"


def test_missing_config_file_is_reported(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_sources(str(tmp_path / "absent.env"))


def test_invalid_values_fail_validation():
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_sources(None, {"N": 2, "K": 3})
    assert any(e.field == "K" for e in excinfo.value.errors)
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_sources(None, {"algorithms": ["bogus"], "delta": 1.5})
    assert {e.field for e in excinfo.value.errors} == {"algorithms", "delta"}


def test_replica_seeds_separate_algorithms(tmp_path):
    cfg = small_config(tmp_path)
    greedy = replica_seed(cfg, 0, 1, "greedy").generate_state(2)
    online = replica_seed(cfg, 0, 1, "ofu-mnl++").generate_state(2)
    again = replica_seed(cfg, 0, 1, "greedy").generate_state(2)
    assert not np.array_equal(greedy, online)
    np.testing.assert_array_equal(greedy, again)


def test_unknown_algorithm_cannot_be_built(tmp_path):
    with pytest.raises(ConfigurationError):
        build_agent("bogus", small_config(tmp_path), 0)


def test_csv_layout_and_values(tmp_path):
    cfg = small_config(tmp_path)
    result = run_experiment(cfg, progress=False)
    emit_csv(result, cfg.out, record_timing=False)
    rows = read_rows(cfg.out)
    assert rows[0] == CSV_HEADER
    body = rows[1:]
    assert len(body) == len(cfg.algorithms) * cfg.T
    for name in cfg.algorithms:
        own = [row for row in body if row[0] == name]
        assert [int(row[1]) for row in own] == list(range(1, cfg.T + 1))
        regret = np.array([float(row[2]) for row in own])
        assert np.all(np.diff(regret) >= -1e-12)
        assert np.all(np.array([float(row[3]) for row in own]) >= 0.0)
        assert all(row[4] == "0" for row in own)
        warmup = np.array([float(row[5]) for row in own])
        assert np.all((warmup >= 0.0) & (warmup <= 1.0))
        for t, row in enumerate(own):
            assert float(row[2]) == float(format(result.mean_cum_regret[name][t], ".12g"))
    assert all(float(row[5]) == 0.0 for row in body if row[0] == "greedy")


def test_same_seed_gives_identical_csv(tmp_path):
    cfg = small_config(tmp_path)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_experiment(cfg, progress=False), str(first), record_timing=False)
    emit_csv(run_experiment(cfg, progress=False), str(second), record_timing=False)
    assert first.read_bytes() == second.read_bytes()


def test_worker_pool_matches_serial_run(tmp_path):
    serial, pooled = tmp_path / "serial.csv", tmp_path / "pooled.csv"
    emit_csv(run_experiment(small_config(tmp_path, T=6), progress=False), str(serial), record_timing=False)
    emit_csv(run_experiment(small_config(tmp_path, T=6, workers=2), progress=False), str(pooled),
             record_timing=False)
    assert serial.read_bytes() == pooled.read_bytes()


def test_algorithms_share_context_streams(tmp_path):
    result = run_experiment(small_config(tmp_path, runs=3), progress=False)
    for replica in range(3):
        hashes = {s["stream_hash"] for s in result.replica_statistics if s["replica"] == replica}
        assert len(hashes) == 1
    assert len(set(result.stream_hashes)) == 3


def test_single_replica_has_zero_band(tmp_path):
    result = run_experiment(small_config(tmp_path, runs=1), progress=False)
    for name in result.algorithms:
        np.testing.assert_array_equal(result.band[name], np.zeros(result.T))


def test_window_summaries(tmp_path):
    result = run_experiment(small_config(tmp_path, algorithms=("greedy",)), progress=False)
    series = result.mean_cum_regret["greedy"]
    assert result.window_slope("greedy", 1, 12) == pytest.approx((series[11] - series[0]) / 11)
    assert result.final_regret("greedy") == series[-1]
    assert result.window_ms("greedy", 1, 12) >= 0.0


def test_manifest_records_resolved_run(tmp_path):
    cfg = small_config(tmp_path)
    result = run_experiment(cfg, progress=False)
    path = write_manifest(cfg, result)
    assert path == manifest_path(cfg.out)
    assert path.name == "regret.manifest.json"
    manifest = json.loads(path.read_text())
    assert manifest["config"]["T"] == cfg.T
    assert manifest["config"]["algorithms"] == list(cfg.algorithms)
    assert manifest["seed_sequences"]["contexts"] == [[3, 0, 0], [3, 1, 0]]
    assert len(manifest["stream_hashes"]) == cfg.runs
    assert {"numpy", "scipy", "python"} <= set(manifest["versions"])


def test_cli_run_writes_outputs(tmp_path):
    out = tmp_path / "cli.csv"
    code = main(["run", "--algo", "greedy", "--algo", "ofu-mnl++", "--T", "8", "--N", "5", "--K", "2",
                 "--d", "2", "--runs", "1", "--out", str(out), "--quiet", "--no-timing"])
    assert code == EXIT_OK
    assert read_rows(out)[0] == CSV_HEADER
    assert len(read_rows(out)) == 1 + 2 * 8
    assert manifest_path(str(out)).is_file()


def test_cli_rejects_invalid_configuration(tmp_path):
    code = main(["run", "--N", "2", "--K", "3", "--quiet", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_FAILURE
    assert not (tmp_path / "x.csv").exists()
