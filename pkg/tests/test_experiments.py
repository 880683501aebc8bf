"""Experiment harness: configs, artifacts, determinism, verification, CLI."""
import json
import os

import pytest

from nlslab import (ExperimentConfig, EXPERIMENT_NAMES, GridError,
                    VerificationError, default_config, run, sweep, verify)
from nlslab.cli import main as cli_main
from nlslab.experiments import format_value, read_csv, write_csv


def _tiny_ode_config():
    # t0 large enough that the difference-bound sup has converged (its
    # drift under range-doubling is only small at t >> 1e2)
    return ExperimentConfig(name="ode-suite", sigmas=(0.1,), t0=256.0, n_times=5)


@pytest.fixture(scope="module")
def ode_runs(tmp_path_factory):
    """One ode-suite config executed twice, shared across artifact tests."""
    base = tmp_path_factory.mktemp("ode")
    cfg = _tiny_ode_config()
    rec_a = run(cfg, str(base / "a"))
    rec_b = run(cfg, str(base / "b"))
    return base, rec_a, rec_b


# ------------------------------------------------------------- config

def test_config_json_round_trip():
    cfg = default_config("local-continuity")
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()
    assert again.digest == cfg.digest


def test_config_digest_tracks_content():
    a = _tiny_ode_config()
    b = ExperimentConfig(name="ode-suite", sigmas=(0.1,), t0=1.0, n_times=7)
    assert a.digest != b.digest


def test_config_dyadic_times():
    cfg = ExperimentConfig(name="ode-suite", sigmas=(0.1,), t0=0.5, n_times=4)
    assert cfg.times() == [0.5, 1.0, 2.0, 4.0]


def test_config_rejects_unknown_name():
    with pytest.raises(GridError):
        ExperimentConfig(name="does-not-exist", sigmas=(0.1,))


def test_config_rejects_empty_sigmas():
    with pytest.raises(GridError):
        ExperimentConfig(name="ode-suite", sigmas=())


def test_config_sigma_windows():
    # short-range experiment needs sigma above the scattering threshold
    with pytest.raises(GridError):
        ExperimentConfig(name="global-interaction-picture", sigmas=(1.5, 1.2))
    # W1 experiments live strictly inside (0, 1/d)
    with pytest.raises(GridError):
        ExperimentConfig(name="uniform-w1", sigmas=(0.8, 1.1))
    with pytest.raises(GridError):
        ExperimentConfig(name="log-limit-local", sigmas=(0.0,))
    # sigma = 0 flows only
    with pytest.raises(GridError):
        ExperimentConfig(name="gaussian-profile", sigmas=(0.1,))


def test_default_configs_cover_all_experiments():
    assert len(EXPERIMENT_NAMES) == 9
    for name in EXPERIMENT_NAMES:
        cfg = default_config(name)
        assert cfg.name == name
    with pytest.raises(GridError):
        default_config("nope")


# ------------------------------------------------------------- artifacts

def test_format_value():
    assert format_value(True) == "1"
    assert format_value(False) == "0"
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(3) == "3"
    assert format_value("tag") == "tag"


def test_csv_round_trip(tmp_path):
    path = str(tmp_path / "table.csv")
    rows = [(0.5, True, "label"), (1.0, False, "other")]
    write_csv(path, ("t", "flag", "name"), rows)
    header, back = read_csv(path)
    assert header == ["t", "flag", "name"]
    assert back == [[0.5, 1.0, "label"], [1.0, 0.0, "other"]]


def test_read_csv_missing_and_empty(tmp_path):
    with pytest.raises(VerificationError):
        read_csv(str(tmp_path / "absent.csv"))
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(VerificationError):
        read_csv(str(empty))


# ------------------------------------------------------------- run / verify

def test_ode_suite_run_deterministic(ode_runs):
    base, rec_a, rec_b = ode_runs
    assert rec_a.status == rec_b.status == "complete"
    assert rec_a.passed and rec_b.passed
    assert rec_a.csv_paths.keys() == rec_b.csv_paths.keys()
    for name in rec_a.csv_paths:
        bytes_a = (base / "a" / name).read_bytes()
        bytes_b = (base / "b" / name).read_bytes()
        assert bytes_a == bytes_b          # identical artifact bytes
    assert rec_a.csv_hashes == rec_b.csv_hashes


def test_verify_accepts_then_flags_tampering(ode_runs, tmp_path):
    import shutil
    base, rec_a, _ = ode_runs
    out = str(tmp_path / "run")
    shutil.copytree(base / "a", out)
    summary = verify(out)
    assert summary["ok"] and not summary["tampered"] and not summary["mismatches"]
    # flip one digit in an artifact: the hash check must flag it
    target = os.path.join(out, "envelope.csv")
    text = open(target).read()
    open(target, "w").write(text.replace("1", "2", 1))
    summary = verify(out)
    assert not summary["ok"]
    assert "envelope.csv" in summary["tampered"]


def test_verify_reports_failed_run(tmp_path):
    out = str(tmp_path / "failing")
    cfg = ExperimentConfig(name="gaussian-profile", sigmas=(0.0,), n=128,
                           half_length=3.0, width=1.0, t0=10.0, n_times=2)
    record = run(cfg, out)     # box too small for the reference profile
    assert record.status == "failed"
    assert record.stage == "GridError"
    summary = verify(out)
    assert not summary["ok"] and summary["status"] == "failed"


def test_sweep_isolates_failures(tmp_path):
    base = ExperimentConfig(name="gaussian-profile", sigmas=(0.0,), n=128,
                            half_length=30.0, width=3.0, t0=10.0, n_times=2)
    records = sweep(base, "L", [30.0, 3.0], str(tmp_path))
    assert records[0].status == "complete"
    assert records[1].status == "failed"   # profile guard trips, run isolated
    assert (tmp_path / "L-000" / "record.json").exists()
    assert (tmp_path / "L-001" / "record.json").exists()


def test_sweep_rejects_unknown_axis(tmp_path):
    with pytest.raises(GridError):
        sweep(_tiny_ode_config(), "width", [1.0], str(tmp_path))


# ------------------------------------------------------------- CLI

def _small_local_config():
    return ExperimentConfig(name="local-continuity", sigmas=(0.8, 0.81, 0.82),
                            n=128, half_length=15.0, dt=4e-3, width=1.0,
                            t0=0.25, n_times=2)


def test_cli_list(capsys):
    assert cli_main(["list"]) == 0
    out = capsys.readouterr().out
    for name in EXPERIMENT_NAMES:
        assert name in out


def test_cli_run_and_verify(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(_small_local_config().to_json())
    out = str(tmp_path / "run")
    assert cli_main(["run", "--config", str(cfg_path), "--out", out]) == 0
    stdout = capsys.readouterr().out
    assert "PASS" in stdout and "FAIL" not in stdout
    assert cli_main(["verify", "--out", out]) == 0
    # damage an artifact: verify must now fail
    target = os.path.join(out, "fit.csv")
    open(target, "a").write("tampered\n")
    assert cli_main(["verify", "--out", out]) == 1
    assert "TAMPERED" in capsys.readouterr().out


def test_cli_config_name_mismatch(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(_small_local_config().to_json())
    code = cli_main(["run", "ode-suite", "--config", str(cfg_path),
                     "--out", str(tmp_path / "x")])
    assert code == 2


def test_cli_verify_missing_record(tmp_path, capsys):
    assert cli_main(["verify", "--out", str(tmp_path / "nothing")]) == 2
