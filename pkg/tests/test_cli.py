import json
from pathlib import Path

import pytest

from aoclab.cli import main
from aoclab.config import dump_config
from aoclab.store import read_records

from conftest import make_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.toml"
    dump_config(make_config(E=(1.0, 2.0), Ls=(20.0, 30.0, 40.0)), p)
    return p


def test_check_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 10


def test_gamma_zero_potential(capsys):
    assert main(["gamma", "-c", str(CONFIGS / "free_1d.toml")]) == 0
    assert "gamma = 0 " in capsys.readouterr().out


def test_compare_before_sweep(tmp_path, capsys):
    assert main(["compare", "--out", str(tmp_path / "nothing")]) == 3
    assert "no records" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    assert main(["frobnicate"]) == 1
    assert main(["sweep", "--bogus"]) == 1
    assert main([]) == 1


def test_validation_error_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    dump_config(make_config(R=0.7), p)
    assert main(["gamma", "-c", str(p)]) == 1
    assert "supp(V)" in capsys.readouterr().err
    assert main(["gamma", "-c", str(tmp_path / "missing.toml")]) == 1


def test_numerical_error_exit_2(tmp_path, monkeypatch, capsys):
    from aoclab import cli
    from aoclab.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("no convergence")

    monkeypatch.setattr(cli, "predict", boom)
    assert main(["gamma", "-c", str(CONFIGS / "reference_1d.toml")]) == 2


def test_sweep_compare_plots_and_round_trip(tmp_path, small_config, capsys):
    run = tmp_path / "run"
    assert main(["sweep", "-c", str(small_config), "--out", str(run)]) == 0
    recs = read_records(run / "records.csv")
    assert len(recs) == 6
    assert (run / "config.toml").exists()

    # the resolved config reproduces identical records
    run2 = tmp_path / "run2"
    assert main(["sweep", "-c", str(run / "config.toml"), "--out", str(run2)]) == 0
    strip = lambda rs: [(r.E, r.L, r.N, r.log_abs_overlap, r.I, r.F, r.xi, r.hadamard_ok) for r in rs]
    assert strip(read_records(run2 / "records.csv")) == strip(recs)

    assert main(["compare", "--out", str(run), "--plots", "--window", "20", "40"]) == 0
    report = json.loads((run / "report.json").read_text())
    assert {e["E"] for e in report["entries"]} == {1.0, 2.0}
    assert "fits" in report and report["window"] == [20.0, 40.0]
    plots = sorted(p.name for p in (run / "plots").iterdir())
    assert plots == ["F_E1.gp", "F_E2.gp", "logS_E1.gp", "logS_E2.gp"]
    assert "records.csv" in (run / "plots" / "F_E2.gp").read_text()


def test_spectrum_overlap_phases(small_config, capsys):
    assert main(["spectrum", "-c", str(small_config), "-L", "20", "-E", "2"]) == 0
    spec = json.loads(capsys.readouterr().out)
    assert spec["count"] == len(spec["eigenvalues"]) > 0
    assert main(["overlap", "-c", str(small_config), "-L", "20"]) == 0
    reps = json.loads(capsys.readouterr().out)
    assert [r["E"] for r in reps] == [1.0, 2.0] and all(r["hadamard_ok"] for r in reps)
    assert main(["phases", "-c", str(small_config), "-E", "2"]) == 0
    ph = json.loads(capsys.readouterr().out)
    assert ph[0]["unitarity_defect"] < 1e-12
    assert main(["phases", "-c", str(CONFIGS / "reference_3d.toml")]) == 0
    ph3 = json.loads(capsys.readouterr().out)
    assert ph3[0]["lmax"] >= 2 and ph3[0]["tail_bound"] < 1e-10


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "aoclab", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "aoclab" in r.stdout
