"""Run directory layout and the records CSV format.

A run directory holds::

    config.toml     resolved configuration (re-loadable)
    records.csv     one row per (E, L), ordered by (E, L)
    errors.json     per-(E, L) failures of the last sweep, if any
    report.json     comparison report written by ``compare``
    plots/          gnuplot scripts written by ``compare --plots``
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional

COLUMNS = (
    "run_id",
    "E",
    "L",
    "N",
    "log_abs_overlap",
    "I",
    "F",
    "xi",
    "hadamard_ok",
    "degenerate_at_E",
    "wall_ms",
)


@dataclass
class SweepRecord:
    run_id: str
    E: float
    L: float
    N: int
    log_abs_overlap: float
    I: float
    F: float
    xi: int
    hadamard_ok: bool
    degenerate_at_E: bool
    wall_ms: float

    @property
    def key(self) -> tuple:
        return (self.E, self.L)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return repr(value)
    return str(value)


def _parse(name: str, text: str):
    if name == "run_id":
        return text
    if name in ("N", "xi"):
        return int(text)
    if name in ("hadamard_ok", "degenerate_at_E"):
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r} in column {name}")
        return text == "true"
    return float(text)


def write_records(path: Path, records: Iterable[SweepRecord]) -> None:
    path = Path(path)
    rows = sorted(records, key=lambda r: r.key)
    tmp = path.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    tmp.replace(path)


def read_records(path: Path) -> list[SweepRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        out = [SweepRecord(**{c: _parse(c, v) for c, v in zip(COLUMNS, row)}) for row in reader if row]
    return sorted(out, key=lambda r: r.key)


class RunStore:
    """Self-describing run directory."""

    def __init__(self, root):
        self.root = Path(root)

    @property
    def config_path(self) -> Path:
        return self.root / "config.toml"

    @property
    def records_path(self) -> Path:
        return self.root / "records.csv"

    @property
    def errors_path(self) -> Path:
        return self.root / "errors.json"

    @property
    def report_path(self) -> Path:
        return self.root / "report.json"

    @property
    def plots_dir(self) -> Path:
        return self.root / "plots"

    def ensure(self) -> "RunStore":
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    def records(self) -> list[SweepRecord]:
        return read_records(self.records_path)

    def save_records(self, records) -> None:
        self.ensure()
        write_records(self.records_path, records)

    def save_errors(self, errors: dict) -> None:
        self.ensure()
        if errors:
            payload = [{"E": E, "L": L, "error": msg} for (E, L), msg in sorted(errors.items())]
            self.errors_path.write_text(json.dumps(payload, indent=2) + "\n")
        elif self.errors_path.exists():
            self.errors_path.unlink()

    def save_report(self, report: dict) -> None:
        self.ensure()
        self.report_path.write_text(json.dumps(report, indent=2, default=_json_default) + "\n")

    def load_report(self) -> Optional[dict]:
        if not self.report_path.exists():
            return None
        return json.loads(self.report_path.read_text())


def _json_default(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")

