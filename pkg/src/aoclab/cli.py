"""Command-line interface: ``aoclab <subcommand> ...``.

Exit codes: 0 success, 1 validation or usage error, 2 numerical error,
3 insufficient data.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import dump_config, load_config
from .errors import DomainError, InsufficientDataError, NumericalError, ValidationError
from .model import validate_config
from .scaling import Quantity, compare_report, fit_all, run_sweep
from .scattering import predict
from .spectra import ChannelKey, Operator, compute_spectra, spectrum_below
from .store import RunStore

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INSUFFICIENT = 0, 1, 2, 3

log = logging.getLogger("aoclab")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _jsonable(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    return obj


def _emit(payload) -> None:
    print(json.dumps(_jsonable(payload), indent=2))


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "workers", None) is not None:
        cfg = cfg.replace(workers=args.workers)
    rep = validate_config(cfg)
    if not rep.ok:
        raise ValidationError("invalid configuration:\n" + str(rep), rep.violations)
    return cfg


def _energies(args, cfg):
    return list(args.E) if args.E else list(cfg.fermi_energies)


# --- subcommands -----------------------------------------------------------------


def cmd_spectrum(args) -> int:
    cfg = _config(args)
    E = args.E[0] if args.E else cfg.fermi_energies[0]
    spec = spectrum_below(cfg, Operator(args.which), ChannelKey(args.ell), args.L, E)
    _emit(
        {
            "L": args.L,
            "E": E,
            "operator": spec.which,
            "ell": args.ell,
            "count": len(spec),
            "near_threshold": spec.near_threshold,
            "eigenvalues": spec.values,
        }
    )
    return EXIT_OK


def cmd_overlap(args) -> int:
    from .overlap import anderson_report

    cfg = _config(args)
    energies = _energies(args, cfg)
    spectra = compute_spectra(cfg, args.L, cfg.working_threshold(args.L, max(0.0, max(energies) - cfg.E_max)))
    reports = [anderson_report(spectra, E, cfg.tolerances) for E in energies]
    _emit([{**_jsonable(r), "sandwich_ok": r.sandwich_ok} for r in reports])
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    store = RunStore(args.out).ensure()
    dump_config(cfg, store.config_path)
    result = run_sweep(cfg, store, run_id=args.run_id, workers=args.workers)
    print(
        f"{len(result.records)} records in {store.records_path} "
        f"({result.computed} computed, {len(result.errors)} failed)"
    )
    for (E, L), msg in sorted(result.errors.items()):
        print(f"  E={E:g} L={L:g}: {msg}", file=sys.stderr)
    return EXIT_OK


def cmd_phases(args) -> int:
    cfg = _config(args)
    out = []
    for E in _energies(args, cfg):
        pred = predict(cfg, E)
        entry = {"E": E, "gamma": pred.gamma.gamma, "notes": pred.notes}
        if pred.s_matrix is not None:
            S = pred.s_matrix
            entry.update(t=S.t, r_left=S.r_left, r_right=S.r_right, unitarity_defect=S.unitarity_defect())
        if pred.phases is not None:
            p = pred.phases
            entry.update(shifts=p.shifts, lmax=p.lmax, tail_bound=p.tail_bound, radii=p.radii)
        out.append(entry)
    _emit(out)
    return EXIT_OK


def cmd_gamma(args) -> int:
    cfg = _config(args)
    for E in _energies(args, cfg):
        g = predict(cfg, E).gamma
        print(f"E = {E:g}  gamma = {g.gamma:.12g}  ({g.method})")
    return EXIT_OK


def _gnuplot(store: RunStore, E: float, fits, gamma: float) -> list[Path]:
    store.plots_dir.mkdir(parents=True, exist_ok=True)
    csv = Path("..") / store.records_path.name
    # columns: 2 E, 3 L, 5 log_abs_overlap, 7 F
    select = f"(abs($2-{E!r})<1e-12*abs({E!r})+1e-300 ? log($3) : 1/0)"
    written = []
    specs = [
        ("F", 7, fits.get(Quantity.F_VS_LNL), gamma, "F_L(E)", "gamma ln L"),
        ("logS", 5, fits.get(Quantity.LOGS_VS_LNL), -gamma / 2, "ln|S_L(E)|", "-(gamma/2) ln L"),
    ]
    for name, col, fit, guide, ylabel, guide_label in specs:
        lines = [
            "# gnuplot script; run from this directory",
            "set datafile separator ','",
            "set key left top",
            "set xlabel 'ln L'",
            f"set ylabel '{ylabel}'",
            f"set title 'E = {E:g}'",
        ]
        plots = [f"'{csv}' skip 1 using {select}:{col} with points pt 7 title 'data'"]
        if fit is not None and hasattr(fit, "slope"):
            lines.append(f"fit_line(x) = {fit.intercept!r} + {fit.slope!r}*x")
            lines.append(f"guide(x) = {fit.intercept!r} + {guide!r}*x")
            plots.append(f"fit_line(x) title 'fit, slope {fit.slope:.4g}'")
            plots.append(f"guide(x) dashtype 2 title '{guide_label}'")
        lines.append("plot " + ", \\\n     ".join(plots))
        path = store.plots_dir / f"{name}_E{E:g}.gp"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def cmd_compare(args) -> int:
    store = RunStore(args.out)
    records = store.records()
    if not records:
        raise InsufficientDataError(f"no records in {store.records_path}; run 'sweep' first")
    args.config = args.config or store.config_path
    cfg = _config(args)
    window = tuple(args.window) if args.window else None
    fits = fit_all(records, window)
    preds = {E: predict(cfg, E).gamma for E in fits}
    tol = cfg.tolerances
    report = compare_report(fits, preds, records, tol.scaling, tol.zero_slope)
    payload = report.to_dict()
    payload["window"] = window
    payload["fits"] = {
        str(E): {
            q.value: (_jsonable(f) if not isinstance(f, Exception) else {"error": str(f)})
            for q, f in fq.items()
        }
        for E, fq in fits.items()
    }
    store.save_report(_jsonable(payload))
    for e in report.entries:
        ratio = "n/a" if e.ratio_F is None else f"{e.ratio_F:.4f}"
        print(
            f"E = {e.E:g}: gamma = {e.gamma:.6g}, slope(F) = {e.slope_F}, ratio = {ratio}, "
            f"F {'PASS' if e.F_verdict else 'FAIL'}, bound {'PASS' if e.bound_direction else 'FAIL'}"
        )
        for n in e.notes:
            print(f"    note: {n}")
    if args.plots:
        for E in fits:
            for p in _gnuplot(store, E, fits[E], preds[E].gamma):
                print(f"wrote {p}")
    print(f"report: {store.report_path}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .check import run_checks

    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_NUMERICAL


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aoclab", description="Finite-volume orthogonality catastrophe toolkit.")
    p.add_argument("--version", action="version", version=f"aoclab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def with_config(sp, required=True):
        sp.add_argument("--config", "-c", required=required, help="TOML configuration file")

    def with_energy(sp, help_="Fermi energies (default: those of the config)"):
        sp.add_argument("-E", type=float, nargs="+", help=help_)

    sp = sub.add_parser("spectrum", help="eigenvalues below E for one L")
    with_config(sp)
    sp.add_argument("-L", type=float, required=True)
    with_energy(sp, "upper cut (default: first configured Fermi energy)")
    sp.add_argument("--which", choices=[o.value for o in Operator], default="H")
    sp.add_argument("--ell", type=int, default=0, help="angular momentum channel (3D)")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("overlap", help="overlap report for one L")
    with_config(sp)
    sp.add_argument("-L", type=float, required=True)
    with_energy(sp)
    sp.set_defaults(func=cmd_overlap)

    sp = sub.add_parser("sweep", help="records for the full L schedule")
    with_config(sp)
    sp.add_argument("--out", required=True, help="run directory")
    sp.add_argument("--run-id", default="run")
    sp.add_argument("--workers", type=int, help="worker processes (overrides config and AOCLAB_WORKERS)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("phases", help="S-matrix (1D) or phase shifts (3D)")
    with_config(sp)
    with_energy(sp)
    sp.set_defaults(func=cmd_phases)

    sp = sub.add_parser("gamma", help="predicted gamma(E)")
    with_config(sp)
    with_energy(sp)
    sp.set_defaults(func=cmd_gamma)

    sp = sub.add_parser("compare", help="fit slopes and compare with gamma")
    with_config(sp, required=False)
    sp.add_argument("--out", required=True, help="run directory produced by sweep")
    sp.add_argument("--window", type=float, nargs=2, metavar=("LMIN", "LMAX"))
    sp.add_argument("--plots", action="store_true", help="write gnuplot scripts to DIR/plots")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("check", help="identity and inequality suite on a built-in instance")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (ValidationError, DomainError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
