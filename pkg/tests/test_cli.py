import json
import math
import subprocess
import sys

import pytest

from magtrace import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_closed_circle(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, err = run(capsys, "simulate", "--E", "1.2", "--B", "1", "--T", "50",
                         "--summary", str(summary))
    assert code == cli.EXIT_OK
    assert out.splitlines()[0] == "t,x,y,theta"
    d = json.loads(summary.read_text())
    assert d["regime"] == "Circle" and d["seed"] == 0
    assert d["energy_drift"] <= 1e-8 and d["c_drift"] <= 1e-8


def test_simulate_missing_flag(capsys):
    code, _, err = run(capsys, "simulate", "--E", "1.2")
    assert code == cli.EXIT_USAGE and "--T" in err


def test_simulate_near_critical_warning(capsys):
    code, _, err = run(capsys, "simulate", "--E", "1.41421356237", "--T", "1", "--samples", "3")
    assert code == cli.EXIT_OK
    assert "near-critical" in err


def test_classes_systole(capsys):
    code, out, err = run(capsys, "classes", "--max-length", "3.2")
    assert code == cli.EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "# completeness: exhaustive"
    assert lines[1] == "word,trace,norm,length,primitive"
    rows = lines[2:]
    assert len(rows) == 24
    assert float(rows[0].split(",")[3]) == pytest.approx(3.057142, abs=1e-6)
    assert json.loads(err)["count"] == 24


def test_classes_below_systole(capsys):
    code, out, _ = run(capsys, "classes", "--max-length", "0.5")
    assert code == cli.EXIT_OK
    assert out.splitlines()[1:] == ["word,trace,norm,length,primitive"]


def test_classes_require_exhaustive(capsys):
    code, out, _ = run(capsys, "classes", "--max-length", "6", "--max-word-length", "2",
                       "--require-exhaustive")
    assert code == cli.EXIT_INCOMPLETE
    assert out.startswith("# completeness: best-effort")


def test_classes_bad_group_file(capsys, tmp_path):
    bad = tmp_path / "bad.group"
    bad.write_text("genus 2\na 1 2 3\n")
    code, _, err = run(capsys, "classes", "--group", str(bad), "--max-length", "3")
    assert code == cli.EXIT_USAGE
    assert "bad.group:2" in err


def test_classes_needs_one_bound(capsys):
    code, _, _ = run(capsys, "classes")
    assert code == cli.EXIT_USAGE


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--N", "3")
    assert code == cli.EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "N,origin,index,nu,multiplicity,lambda_scaled"
    assert lines[1:] == ["3,interior,0,3,5,3.4641016151377544",
                         "3,interior,1,7,3,4",
                         "3,interior,2,9,1,4.2426406871192848"]
    code, out, _ = run(capsys, "spectrum", "--N", "2:3", "--laplace", "bolza")
    assert sum(1 for l in out.splitlines() if ",continuous,0," in l) == 2


def test_trace_critical(capsys):
    code, out, _ = run(capsys, "trace", "--critical", "--N", "10:40:10", "--phi",
                       "gaussian:sigma=0.3", "--laplace", "bolza")
    assert code == cli.EXIT_OK
    rep = json.loads(out)
    assert rep["regime"] == "Critical"
    assert rep["c1"] == {"re": 0, "im": 0}
    assert rep["c0"]["re"] == pytest.approx(2 * math.sqrt(2) * 0.3 * math.sqrt(2 * math.pi))
    assert [r["N"] for r in rep["residuals"]] == [10, 20, 30, 40]


def test_trace_subcritical_report(capsys, tmp_path):
    plot = tmp_path / "plot.csv"
    code, out, _ = run(capsys, "trace", "--E", "1.2", "--laplace", "bolza", "--plot-csv", str(plot))
    assert code == cli.EXIT_OK
    rep = json.loads(out)
    assert rep["regime"] == "Subcritical" and rep["seed"] == 0
    assert {"c0", "c1", "orbit_breakdown", "residuals", "fit"} <= set(rep)
    assert plot.read_text().splitlines()[0].startswith("N,")


def test_trace_supercritical_needs_spectrum(capsys):
    code, _, err = run(capsys, "trace", "--E", "2", "--N", "5",
                       "--phi", "twobump:center=4.3,half_width=0.6")
    assert code == cli.EXIT_USAGE
    assert "Laplace spectrum" in err
    code, out, _ = run(capsys, "trace", "--E", "2", "--N", "5",
                       "--phi", "twobump:center=4.3,half_width=0.6", "--coefficients-only")
    assert code == cli.EXIT_OK
    assert json.loads(out)["orbit_breakdown"]


def test_trace_window_failure_is_reported(capsys):
    code, out, _ = run(capsys, "trace", "--E", "2", "--N", "20:40:20", "--laplace", "bolza",
                       "--phi", "twobump:center=4.3,half_width=0.6")
    assert code == cli.EXIT_INCOMPLETE
    rows = json.loads(out)["residuals"]
    assert all("window insufficient" in r["error"] for r in rows)


def test_bad_phi_spec(capsys):
    code, _, _ = run(capsys, "trace", "--E", "1.2", "--phi", "triangle:width=1")
    assert code == cli.EXIT_USAGE


def test_json_is_byte_identical(capsys):
    argv = ["trace", "--E", "1.25", "--N", "20:60:10", "--laplace", "bolza",
            "--phi", "gaussian:sigma=0.4"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nmax-length = 0.5\n")
    code, out, _ = run(capsys, "classes", "--config", str(cfg))
    assert code == cli.EXIT_OK and len(out.splitlines()) == 2
    # the flag wins over the file
    code, out, _ = run(capsys, "classes", "--config", str(cfg), "--max-length", "3.2")
    assert len(out.splitlines()) == 26
    cfg.write_text("no_such_key = 1\n")
    assert run(capsys, "classes", "--config", str(cfg))[0] == cli.EXIT_USAGE


def test_data_dir_env(capsys, tmp_path, monkeypatch):
    (tmp_path / "tiny.group").write_text(
        (cli._resolve_data("bolza", cli.GROUP_SUFFIX)).read_text())
    monkeypatch.setenv("MAGTRACE_DATA", str(tmp_path))
    code, out, _ = run(capsys, "classes", "--group", "tiny", "--max-length", "3.2")
    assert code == cli.EXIT_OK and len(out.splitlines()) == 26


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "1")
    assert code == cli.EXIT_OK
    assert out.startswith("[PASS] criterion 1")


def test_entry_point_usage_error():
    r = subprocess.run([sys.executable, "-m", "magtrace.cli", "trace"], capture_output=True,
                       text=True)
    assert r.returncode == cli.EXIT_USAGE
