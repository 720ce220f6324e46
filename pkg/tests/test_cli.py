"""Command-line interface behavior and output determinism."""

import json

import numpy as np
import pytest

from arhgof.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_simulate_functional_and_gof_round_trip(tmp_path, capsys):
    curves = tmp_path / "arh1.csv"
    code, out, _ = _run(capsys, "simulate", "--scenario", "ARH1", "--n", "40",
                        "--seed", "3", "--out", str(curves))
    assert code == 0 and curves.exists()
    result_json = tmp_path / "gof.json"
    code, out, _ = _run(capsys, "gof", str(curves), "--z", "1", "--B", "120",
                        "--seed", "5", "--out", str(result_json))
    assert code == 0
    assert "p-value" in out
    payload = json.loads(result_json.read_text())
    assert set(payload) == {"statistic", "p_value", "B", "p", "q",
                            "p_tilde_set", "lambda", "seed"}


def test_simulate_deterministic_files(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _run(capsys, "simulate", "--scenario", "ARH0", "--n", "20", "--seed", "9",
         "--out", str(a))
    _run(capsys, "simulate", "--scenario", "ARH0", "--n", "20", "--seed", "9",
         "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_simulate_sde_writes_path(tmp_path, capsys):
    f = tmp_path / "ou.csv"
    code, out, _ = _run(capsys, "simulate", "--scenario", "OU", "--n", "10",
                        "--seed", "1", "--out", str(f))
    assert code == 0
    first = f.read_text().splitlines()
    assert first[0].startswith("# model=")
    assert first[1] == "time,value"


def test_order_scan_cli(tmp_path, capsys):
    curves = tmp_path / "arh0.csv"
    _run(capsys, "simulate", "--scenario", "ARH0", "--n", "40", "--seed", "2",
         "--out", str(curves))
    out_json = tmp_path / "scan.json"
    code, out, _ = _run(capsys, "order-scan", str(curves), "--zmax", "1",
                        "--B", "120", "--seed", "3", "--out", str(out_json))
    assert code == 0
    assert "z=0: p-value" in out
    payload = json.loads(out_json.read_text())
    assert "order" in payload and "p_values" in payload


def test_spec_test_on_path_csv(tmp_path, capsys):
    path_csv = tmp_path / "ou_path.csv"
    _run(capsys, "simulate", "--scenario", "OU", "--n", "30", "--seed", "4",
         "--out", str(path_csv))
    out_json = tmp_path / "spec.json"
    code, out, _ = _run(capsys, "spec-test", str(path_csv), "--B", "120",
                        "--seed", "6", "--out", str(out_json))
    assert code == 0
    assert "Stage 1: ARH(1) GoF test" in out
    assert "Stage 2: F-test" in out
    assert "Decision:" in out
    payload = json.loads(out_json.read_text())
    assert payload["decision"] in ("REJECT_STAGE1", "REJECT_STAGE2",
                                   "NOT_REJECTED")
    if payload["p2"] is None:
        assert "—" in out


def test_spec_test_on_tick_csv(tmp_path, capsys):
    path_csv = tmp_path / "ticks.csv"
    rng = np.random.default_rng(0)
    times = np.concatenate([k + np.arange(48) / 48 for k in range(30)])
    values = np.cumsum(0.01 * rng.standard_normal(times.size))
    with open(path_csv, "w", encoding="utf-8") as fh:
        fh.write("timestamp,value\n")
        for t, v in zip(times, values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")
    code, out, _ = _run(capsys, "spec-test", str(path_csv), "--B", "120",
                        "--seed", "8")
    assert code == 0
    assert "Stage 1" in out


def test_experiment_cli_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("scenario = ARH0\nn = 30\nM = 2\nB = 100\nseed = 4\nz = 0\n")
    prefix = tmp_path / "run"
    code, out, _ = _run(capsys, "experiment", "--config", str(cfg),
                        "--out", str(prefix))
    assert code == 0
    assert "rejection rate" in out
    assert (tmp_path / "run.csv").exists()
    assert (tmp_path / "run.json").exists()
    manifest = json.loads((tmp_path / "run.manifest.json").read_text())
    assert manifest["config"]["scenario"] == "ARH0"
    assert manifest["package"]["name"] == "arhgof"


def test_experiment_flag_overrides_config(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("scenario = ARH0\nn = 30\nM = 2\nB = 100\nseed = 4\nz = 0\n")
    prefix = tmp_path / "run2"
    code, _, _ = _run(capsys, "experiment", "--config", str(cfg), "--M", "1",
                      "--out", str(prefix))
    assert code == 0
    payload = json.loads((tmp_path / "run2.json").read_text())
    assert payload["config"]["M"] == 1


def test_ingest_cli(tmp_path, capsys):
    ticks = tmp_path / "t.csv"
    rng = np.random.default_rng(1)
    times = np.concatenate([k + np.arange(20) / 20 for k in range(3)]
                           + [3 + np.arange(5) / 20])
    with open(ticks, "w", encoding="utf-8") as fh:
        fh.write("timestamp,value\n")
        for t in times:
            fh.write(f"{float(t)!r},{float(rng.standard_normal())!r}\n")
    out_csv = tmp_path / "curves.csv"
    code, out, _ = _run(capsys, "ingest", str(ticks), "--day-length", "20",
                        "--out", str(out_csv))
    assert code == 0
    assert "ingested 3 complete day(s)" in out
    assert "dropped 1" in out
    assert out_csv.exists()


def test_unknown_scenario_is_usage_error(capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--scenario", "GARCH", "--out", "x.csv"])


def test_missing_file_reports_error(capsys):
    code = main(["gof", "/nonexistent/file.csv"])
    assert code == 1
    assert "error:" in capsys.readouterr().err
