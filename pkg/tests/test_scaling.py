import math

import numpy as np
import pytest

from aoclab.errors import InsufficientDataError, ValidationError
from aoclab.scaling import (
    Quantity,
    compare_report,
    fit_all,
    fit_loglinear,
    run_sweep,
)
from aoclab.scattering import GammaPrediction
from aoclab.store import RunStore, SweepRecord

from conftest import make_config

LS = [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0]


def synth(values, E=2.0, col="F", Ls=LS, **extra):
    out = []
    for L, y in zip(Ls, values):
        d = dict(
            run_id="s", E=E, L=L, N=1, log_abs_overlap=-0.1, I=0.1, F=0.1, xi=0,
            hadamard_ok=True, degenerate_at_E=False, wall_ms=0.0,
        )
        d.update(extra)
        d[col] = y
        out.append(SweepRecord(**d))
    return out


def test_exact_line_is_reproduced():
    ys = [0.3 + 0.7 * math.log(L) for L in LS]
    f = fit_loglinear(synth(ys), Quantity.F_VS_LNL)
    assert f.slope == pytest.approx(0.7, abs=1e-12)
    assert f.intercept == pytest.approx(0.3, abs=1e-11)
    assert f.stderr < 1e-12
    assert (f.used, f.excluded) == (6, 0)


def test_bounded_oscillation_barely_moves_slope():
    ys = [0.7 * math.log(L) + 0.2 * math.cos(3.1 * i) for i, L in enumerate(LS)]
    f = fit_loglinear(synth(ys), Quantity.F_VS_LNL)
    assert abs(f.slope - 0.7) < 0.1
    assert f.stderr > 0


def test_minus_infinity_excluded_and_counted():
    ys = [-0.1, -math.inf, -0.2, -0.25, -math.inf, -0.35]
    f = fit_loglinear(synth(ys, col="log_abs_overlap"), Quantity.LOGS_VS_LNL)
    assert (f.used, f.excluded) == (4, 2)
    with pytest.raises(InsufficientDataError):
        fit_loglinear(synth([-math.inf] * 6, col="log_abs_overlap"), "logS_vs_lnL")


def test_window_and_energy_selection():
    recs = synth([float(i) for i in range(6)]) + synth([0.0] * 6, E=3.0)
    f = fit_loglinear(recs, Quantity.F_VS_LNL, window=(100.0, 800.0), E=2.0)
    assert f.used == 4 and f.window == (100.0, 800.0)
    with pytest.raises(ValueError):
        fit_loglinear(recs, Quantity.F_VS_LNL)
    with pytest.raises(InsufficientDataError):
        fit_loglinear(recs, Quantity.F_VS_LNL, window=(1000.0, 2000.0), E=2.0)


def _fits_and_pred(slope_F, slope_S, gamma, E=2.0):
    recs = synth([slope_F * math.log(L) for L in LS], E=E)
    for r, L in zip(recs, LS):
        r.log_abs_overlap = slope_S * math.log(L)
    return fit_all(recs), {E: GammaPrediction(E, gamma, "HS_1D")}, recs


def test_compare_verdicts():
    fits, pred, recs = _fits_and_pred(0.0115, -0.006, 0.0114)
    rep = compare_report(fits, pred, recs)
    e = rep.entries[0]
    assert rep.passed and e.F_verdict and e.bound_direction and e.hadamard_all
    assert e.ratio_F == pytest.approx(0.0115 / 0.0114, rel=1e-10)

    fits, pred, recs = _fits_and_pred(0.02, -0.001, 0.0114)
    e = compare_report(fits, pred, recs).entries[0]
    assert not e.F_verdict and not e.bound_direction and e.notes


def test_compare_zero_gamma_branch():
    fits, pred, recs = _fits_and_pred(0.0, 0.0, 0.0)
    e = compare_report(fits, pred, recs).entries[0]
    assert e.ratio_F is None and e.F_verdict and e.bound_direction


def test_compare_rejects_mismatched_energies():
    fits, _, _ = _fits_and_pred(0.01, -0.01, 0.01, E=2.0)
    with pytest.raises(ValidationError):
        compare_report(fits, {3.0: GammaPrediction(3.0, 0.01, "HS_1D")})


def test_report_serializes_non_finite():
    fits, pred, recs = _fits_and_pred(0.01, -0.01, 0.01)
    d = compare_report(fits, pred, recs).to_dict()
    assert d["passed"] in (True, False) and d["entries"][0]["E"] == 2.0


# --- sweeps on a small configuration ------------------------------------------------


def small_cfg(**kw):
    return make_config(E=(1.0, 2.0), Ls=(20.0, 30.0, 40.0, 50.0), **kw)


def test_sweep_records_are_ordered_and_deterministic():
    a = run_sweep(small_cfg())
    b = run_sweep(small_cfg())
    assert [r.key for r in a.records] == sorted(r.key for r in a.records)
    assert len(a.records) == 8 and not a.errors
    strip = lambda rs: [(r.key, r.N, r.I, r.F, r.xi, r.log_abs_overlap) for r in rs]
    assert strip(a.records) == strip(b.records)
    for r in a.records:
        assert r.hadamard_ok and r.xi >= 0


def test_sweep_is_resumable(tmp_path):
    store = RunStore(tmp_path / "run")
    cfg = small_cfg()
    part = cfg.replace(L_schedule=(20.0, 30.0))
    first = run_sweep(part, store)
    assert first.computed == 4
    full = run_sweep(cfg, store)
    assert full.computed == 4 and len(full.records) == 8
    again = run_sweep(cfg, store)
    assert again.computed == 0
    assert [r.I for r in again.records] == [r.I for r in full.records]


def test_parallel_sweep_matches_serial():
    cfg = small_cfg()
    s = run_sweep(cfg, workers=1)
    p = run_sweep(cfg, workers=2)
    assert [(r.key, r.I, r.F, r.log_abs_overlap) for r in s.records] == [
        (r.key, r.I, r.F, r.log_abs_overlap) for r in p.records
    ]


def test_workers_env_override(monkeypatch):
    from aoclab.scaling import WORKERS_ENV, _worker_count

    monkeypatch.setenv(WORKERS_ENV, "3")
    assert _worker_count(small_cfg(), None) == 3
    assert _worker_count(small_cfg(), 1) == 1


def test_sweep_rejects_invalid_config():
    with pytest.raises(ValidationError):
        run_sweep(small_cfg(v=-1.0))


def test_zero_potential_sweep_is_exactly_trivial():
    res = run_sweep(small_cfg(v=0.0))
    for r in res.records:
        assert (r.I, r.F, r.xi, r.log_abs_overlap) == (0.0, 0.0, 0, 0.0)
