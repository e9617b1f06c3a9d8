"""TOML configuration files.

Schema (all sections required unless noted)::

    [geometry]
    kind = "interval1d"          # or "radial3d"

    [potential]
    kind = "square"              # square | gaussian | tabulated
    amplitude = 1.0              # square, gaussian
    radius = 0.5                 # square: support radius
    width = 0.1                  # gaussian
    truncation = 0.5             # gaussian: support radius
    points = [-0.5, 0.0, 0.5]    # tabulated
    values = [0.0, 1.0, 0.0]     # tabulated
    support_radius = 0.5         # tabulated

    [potential.background]       # optional, default zero
    kind = "zero"                # zero | constant | cosine
    amplitude = 0.0
    period = 1.0

    [grid]
    h = 0.05
    scattering_step = 0.0125     # optional, default h/4

    [sweep]
    fermi_energies = [2.0]
    L = [50, 100, 200, 400, 800, 1600]
    smear_width = 0.2            # optional; enables the Birman window check
    lmax = "auto"                # or an integer
    workers = 1

    [tolerances]                 # optional; any field of Tolerances
    eigenvalue = 1e-12
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

import tomli
import tomli_w

from .errors import ValidationError
from .model import (
    Background,
    Geometry,
    GeometryKind,
    GridSpec,
    PhysicsConfig,
    PotentialSpec,
    SquareBarrier,
    TabulatedPotential,
    Tolerances,
    TruncatedGaussian,
)


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ValidationError(f"missing key {key!r} in [{where}]")
    return table[key]


def _perturbation(p: dict):
    kind = p.get("kind", "square")
    if kind == "square":
        return SquareBarrier(float(_need(p, "amplitude", "potential")), float(_need(p, "radius", "potential")))
    if kind == "gaussian":
        return TruncatedGaussian(
            float(_need(p, "amplitude", "potential")),
            float(_need(p, "width", "potential")),
            float(_need(p, "truncation", "potential")),
        )
    if kind == "tabulated":
        try:
            return TabulatedPotential(
                tuple(_need(p, "points", "potential")),
                tuple(_need(p, "values", "potential")),
                float(_need(p, "support_radius", "potential")),
            )
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
    raise ValidationError(f"unknown potential kind {kind!r}")


def config_from_dict(data: dict) -> PhysicsConfig:
    try:
        geo = data.get("geometry", {})
        pot = _need(data, "potential", "root")
        grid = _need(data, "grid", "root")
        sweep = _need(data, "sweep", "root")
        bg = pot.get("background", {})
        lmax = sweep.get("lmax", "auto")
        tol_fields = {f.name for f in dataclasses.fields(Tolerances)}
        tol_data = data.get("tolerances", {})
        unknown = set(tol_data) - tol_fields
        if unknown:
            raise ValidationError(f"unknown tolerance keys {sorted(unknown)}")
        return PhysicsConfig(
            geometry=Geometry(GeometryKind(geo.get("kind", "interval1d"))),
            potentials=PotentialSpec(
                _perturbation(pot),
                Background(bg.get("kind", "zero"), float(bg.get("amplitude", 0.0)), float(bg.get("period", 1.0))),
            ),
            grid=GridSpec(float(_need(grid, "h", "grid"))),
            fermi_energies=tuple(float(e) for e in _need(sweep, "fermi_energies", "sweep")),
            L_schedule=tuple(float(x) for x in _need(sweep, "L", "sweep")),
            smear_width=float(sweep["smear_width"]) if "smear_width" in sweep else None,
            lmax=None if lmax in (None, "auto") else int(lmax),
            tolerances=Tolerances(**tol_data),
            scattering_step=float(grid["scattering_step"]) if "scattering_step" in grid else None,
            workers=int(sweep.get("workers", 1)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed configuration: {exc}") from exc


def config_to_dict(cfg: PhysicsConfig) -> dict:
    """Resolved configuration (defaults made explicit), inverse of config_from_dict."""
    p = cfg.potentials.perturbation
    if isinstance(p, SquareBarrier):
        pot = {"kind": "square", "amplitude": p.amplitude, "radius": p.radius}
    elif isinstance(p, TruncatedGaussian):
        pot = {"kind": "gaussian", "amplitude": p.amplitude, "width": p.width, "truncation": p.truncation}
    else:
        pot = {
            "kind": "tabulated",
            "points": list(p.points),
            "values": list(p.values),
            "support_radius": p.support_radius,
        }
    b = cfg.potentials.background
    pot["background"] = {"kind": b.kind, "amplitude": b.amplitude, "period": b.period}
    sweep = {
        "fermi_energies": list(cfg.fermi_energies),
        "L": list(cfg.L_schedule),
        "lmax": "auto" if cfg.lmax is None else cfg.lmax,
        "workers": cfg.workers,
    }
    if cfg.smear_width is not None:
        sweep["smear_width"] = cfg.smear_width
    return {
        "geometry": {"kind": cfg.geometry.kind.value},
        "potential": pot,
        "grid": {"h": cfg.grid.h, "scattering_step": cfg.h_scatter},
        "sweep": sweep,
        "tolerances": dataclasses.asdict(cfg.tolerances),
    }


def load_config(path) -> PhysicsConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: PhysicsConfig, path) -> None:
    Path(path).write_text(tomli_w.dumps(config_to_dict(cfg)))
