import csv
import json
import math

import pytest

from diamondnet.cli import main, resolve_workers
from diamondnet.config import config_from_dict
from diamondnet.model import TWO_PI
from diamondnet.report import sweep_csv
from diamondnet.sweep import WORKERS_ENV, run_sweep

ZERO_EDGES = {e: {"mag_hz": 0.0} for e in "ghfk"}
OPTIMIZED = {"Q1": 51.286, "Q2": 1e4, "gamma_hz": 1e7}


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_smatrix_decoupled_reflection(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {**ZERO_EDGES, "gamma_hz": 0.0}})
    assert main(["smatrix", "--config", cfg, "--freq-hz", "1e9"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["S"][0][0] == pytest.approx([3.0, 0.0], abs=1e-12)
    assert report["convention"] == "paper" and report["flags"] == ["degenerate"]
    assert main(["smatrix", "--config", cfg, "--freq-hz", "1e9", "--convention", "standard"]) == 0
    assert json.loads(capsys.readouterr().out)["S"][0][0] == pytest.approx([-1.0, 0.0], abs=1e-12)


def test_smatrix_optimized_point(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": OPTIMIZED})
    out = tmp_path / "s.json"
    assert main(["smatrix", "--config", cfg, "--freq-hz", "1e9", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["R_linear"] == pytest.approx(3.652, rel=0.05)
    assert len(report["S"]) == 8 and len(report["S"][0]) == 8
    assert report["R_dB"] == pytest.approx(10 * math.log10(report["R_linear"]))


def test_smatrix_singular_point(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {**ZERO_EDGES, "gamma_hz": 0.0, "Gamma1_hz": 1e-6}})
    assert main(["smatrix", "--config", cfg, "--freq-hz", "1e9"]) == 2
    assert "SingularMatrix" in capsys.readouterr().err


def test_bad_config_exit_status(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{")
    assert main(["smatrix", "--config", str(cfg), "--freq-hz", "1e9"]) == 2
    assert "ParseError" in capsys.readouterr().err
    assert main(["smatrix", "--config", str(tmp_path / "missing.json"), "--freq-hz", "1e9"]) == 2


SWEEP = {"params": OPTIMIZED,
         "sweep": {"axes": [{"parameter": "detuning_hz", "start": -2e5, "stop": 2e5, "points": 41},
                            {"parameter": "a4bar_mag", "start": 0, "stop": 1, "points": 3}]}}


def test_sweep_single_point(tmp_path, capsys):
    cfg = write_config(tmp_path, {"sweep": {"axes": [{"parameter": "theta", "start": 1.0}]}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--workers", "1"]) == 0
    rows = read_csv(tmp_path / "o" / "sweep.csv")
    assert rows[0] == ["theta", "R_linear", "R_dB", "fwd_gain_dB", "bwd_gain_dB", "flags"]
    assert len(rows) == 2


def test_sweep_csv_identical_across_worker_counts(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, SWEEP)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert (tmp_path / "a" / "sweep_summary.json").read_bytes() == \
        (tmp_path / "b" / "sweep_summary.json").read_bytes()


def test_sweep_csv_full_precision(tmp_path):
    cfg = config_from_dict(SWEEP)
    res = run_sweep(cfg.diamond_params(), cfg.pump_config(), [a.to_axis() for a in cfg.sweep.axes])
    rows = list(csv.reader(sweep_csv(res).splitlines()))
    assert rows[0][:2] == ["detuning_hz", "a4bar_mag"]
    for row, rec in zip(rows[1:], res.records):
        assert float(row[2]) == rec.R
        assert float(row[0]) == rec.coords[0] / TWO_PI


def test_sweep_summary_contents(tmp_path):
    cfg = write_config(tmp_path, SWEEP)
    main(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "1"])
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    peak = summary["peaks"]["R"]["max"]
    assert peak["value_dB"] == pytest.approx(10 * math.log10(peak["value_linear"]))
    assert set(peak["location"]) == {"detuning_hz", "a4bar_mag", "probe_detuning_hz"}
    assert summary["peaks"]["points"] == 123 and summary["peaks"]["forward_gain"]["min"] is not None


def test_tracking_sweep_has_probe_column(tmp_path):
    data = {"params": OPTIMIZED,
            "sweep": {"axes": [{"parameter": "gamma_hz", "start": 1e6, "stop": 1e7, "points": 3}],
                      "probe": {"mode": "track", "span_hz": 1e5, "points": 11}}}
    cfg = write_config(tmp_path, data)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--workers", "1"]) == 0
    assert read_csv(tmp_path / "sweep.csv")[0][:2] == ["gamma_hz", "probe_detuning_hz"]


def test_sweep_without_section_fails(tmp_path, capsys):
    cfg = write_config(tmp_path, {})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_optimize_pump_grid(tmp_path, capsys):
    data = {"params": OPTIMIZED,
            "optimize": {"objective": "extrinsic_R", "grid_points": 41,
                         "free": [{"parameter": "a2bar_mag", "lower": 0, "upper": 10},
                                  {"parameter": "a4bar_mag", "lower": 0, "upper": 10}]}}
    cfg = write_config(tmp_path, data)
    assert main(["optimize", "--config", cfg, "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "optimize_summary.json").read_text())
    point = summary["optimum"]["point"]
    assert point["a2bar_mag"] == pytest.approx(2.844, rel=0.05)
    assert point["a4bar_mag"] == pytest.approx(0.4121, rel=0.05)
    assert summary["optimum"]["value_dB"] == pytest.approx(
        10 * math.log10(summary["optimum"]["value_linear"]))


def test_reproduce_fig2(tmp_path, capsys):
    assert main(["reproduce", "--figure", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "figure_2.csv")
    assert rows[0][0] == "theta" and len(rows) == 802
    summary = json.loads((tmp_path / "figure_2_summary.json").read_text())
    assert summary["passed"]
    assert summary["checks"][0]["measured"] == pytest.approx([-math.pi, math.pi])
    assert abs(abs(summary["peaks"]["R"]["max"]["location"]["theta"]) - math.pi) < 1e-12


def test_reproduce_fig5_reports_deviation(tmp_path, capsys):
    status = main(["reproduce", "--figure", "5", "--out", str(tmp_path)])
    summary = json.loads((tmp_path / "figure_5_summary.json").read_text())
    checks = {c["name"]: c for c in summary["checks"]}
    assert checks["R_at_omega"]["passed"] and checks["peak_value"]["passed"]
    assert checks["peak_detuning"]["measured"] == pytest.approx(-52e3)
    assert status == (0 if summary["passed"] else 1) == 1
    assert "FAIL peak_detuning" in capsys.readouterr().out


def test_reproduce_with_plot(tmp_path):
    pytest.importorskip("matplotlib")
    main(["reproduce", "--figure", "6", "--out", str(tmp_path), "--plot"])
    assert (tmp_path / "figure_6.png").stat().st_size > 0


def test_reproduce_unknown_figure(tmp_path, capsys):
    assert main(["reproduce", "--figure", "12", "--out", str(tmp_path)]) == 2
    assert "UnknownFigure" in capsys.readouterr().err


def test_verify_default_config(tmp_path, capsys):
    cfg = write_config(tmp_path, {})
    report_path = tmp_path / "verify.json"
    assert main(["verify", "--config", cfg, "--no-reference", "--json", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    td = [c for c in report["checks"] if c["name"] == "timedomain"]
    assert len(td) == 10 and max(c["error"] for c in td) <= 1e-6


def test_verify_zero_coupling(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {**ZERO_EDGES, "gamma_hz": 0.0}})
    assert main(["verify", "--config", cfg, "--no-reference"]) == 0


def test_verify_unstable_point(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {"gamma_hz": 1e9}})
    assert main(["verify", "--config", cfg, "--no-reference"]) == 1
    assert "UnstableIntegration" in capsys.readouterr().out
    assert main(["verify", "--config", cfg, "--no-reference", "--allow-unstable"]) == 0


def test_verify_reports_reference_values(tmp_path, capsys):
    cfg = write_config(tmp_path, {})
    main(["verify", "--config", cfg])
    out = capsys.readouterr().out
    assert "reference fig 5 peak_detuning" in out and "deviates" in out


def test_worker_precedence(monkeypatch):
    cfg = config_from_dict({"workers": 2})
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert resolve_workers(None, cfg) == 2
    monkeypatch.setenv(WORKERS_ENV, "5")
    assert resolve_workers(None, cfg) == 5
    assert resolve_workers(3, cfg) == 3
    with pytest.raises(ValueError):
        resolve_workers(0, cfg)
