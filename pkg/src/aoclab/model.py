"""Physical and numerical configuration: geometry, potentials, grid and sweep.

Units throughout are hbar = 1, 2m = 1, so the single-particle operator is
``H = -Laplacian + V0`` and energies carry units of inverse length squared.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError


class GeometryKind(str, enum.Enum):
    INTERVAL_1D = "interval1d"
    RADIAL_3D = "radial3d"


class Which(str, enum.Enum):
    V0 = "V0"
    V = "V"
    V0_PLUS_V = "V0plusV"


@dataclass(frozen=True)
class Geometry:
    """Box shape. 1D: interval [-L/2, L/2]. 3D: ball of radius L/2 split into
    radial channels by angular momentum."""

    kind: GeometryKind = GeometryKind.INTERVAL_1D

    @property
    def is_radial(self) -> bool:
        return self.kind is GeometryKind.RADIAL_3D

    def box_extent(self, L: float) -> float:
        """Length of the 1D domain actually discretized (L, or the radius L/2)."""
        return 0.5 * L if self.is_radial else float(L)

    def contains(self, coords, L: float) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        if self.is_radial:
            return (c >= 0.0) & (c <= 0.5 * L)
        return np.abs(c) <= 0.5 * L


# --- perturbations ---------------------------------------------------------


@dataclass(frozen=True)
class SquareBarrier:
    amplitude: float
    radius: float

    kind = "square"

    @property
    def support_radius(self) -> float:
        return self.radius

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.radius, float(self.amplitude), 0.0)


@dataclass(frozen=True)
class TruncatedGaussian:
    amplitude: float
    width: float
    truncation: float

    kind = "gaussian"

    @property
    def support_radius(self) -> float:
        return self.truncation

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = self.amplitude * np.exp(-0.5 * (x / self.width) ** 2)
        return np.where(np.abs(x) <= self.truncation, g, 0.0)


@dataclass(frozen=True)
class TabulatedPotential:
    """Samples ``values`` at ``points``, linearly interpolated; zero beyond
    ``support_radius`` and outside the sampled range."""

    points: tuple
    values: tuple
    support_radius: float

    kind = "tabulated"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.points) != len(self.values) or len(self.points) < 2:
            raise ValueError("tabulated potential needs >= 2 matching points/values")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise ValueError("tabulated points must be strictly increasing")

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.interp(x, self.points, self.values, left=0.0, right=0.0)
        return np.where(np.abs(x) <= self.support_radius, v, 0.0)


Perturbation = Union[SquareBarrier, TruncatedGaussian, TabulatedPotential]


# --- backgrounds -----------------------------------------------------------


@dataclass(frozen=True)
class Background:
    """Bounded background potential ``V0``.

    ``kind`` is ``"zero"``, ``"constant"`` (value ``amplitude``) or
    ``"cosine"`` (``amplitude * cos(2 pi x / period)``, periodic).
    """

    kind: str = "zero"
    amplitude: float = 0.0
    period: float = 1.0

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0.0

    @property
    def sup_norm(self) -> float:
        return 0.0 if self.kind == "zero" else abs(self.amplitude)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, float(self.amplitude))
        if self.kind == "cosine":
            return self.amplitude * np.cos(2.0 * np.pi * x / self.period)
        raise ValueError(f"unknown background kind {self.kind!r}")


@dataclass(frozen=True)
class PotentialSpec:
    perturbation: Perturbation
    background: Background = field(default_factory=Background)

    @property
    def support_radius(self) -> float:
        return float(self.perturbation.support_radius)

    @property
    def is_free(self) -> bool:
        """True when the perturbation vanishes identically."""
        p = self.perturbation
        if isinstance(p, TabulatedPotential):
            return not any(p.values)
        return p.amplitude == 0.0


# --- grid / tolerances / config -------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    h: float

    def n_points(self, geometry: Geometry, L: float) -> int:
        """Interior point count: round(L/h) - 1 (1D), round((L/2)/h) - 1 (3D)."""
        return int(round(geometry.box_extent(L) / self.h)) - 1

    def coordinates(self, geometry: Geometry, L: float) -> np.ndarray:
        n = self.n_points(geometry, L)
        i = np.arange(1, n + 1, dtype=float)
        if geometry.is_radial:
            return self.h * i
        return -0.5 * L + self.h * i


@dataclass(frozen=True)
class Tolerances:
    # relative tolerances are multiplied by the operator norm ||T||
    eigenvalue: float = 1e-12
    cluster: float = 1e-8
    degeneracy: float = 1e-10
    residual: float = 1e-10
    orthogonality: float = 1e-10
    max_inverse_iterations: int = 8
    margin_spacings: float = 10.0
    det: float = 1e-8
    unitarity: float = 1e-8
    tail: float = 1e-10
    scaling: float = 0.2
    zero_slope: float = 0.02


@dataclass(frozen=True)
class PhysicsConfig:
    geometry: Geometry
    potentials: PotentialSpec
    grid: GridSpec
    fermi_energies: tuple
    L_schedule: tuple
    smear_width: Optional[float] = None
    lmax: Optional[int] = None  # None: automatic (tail tolerance)
    tolerances: Tolerances = field(default_factory=Tolerances)
    scattering_step: Optional[float] = None  # default h/4
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "fermi_energies", tuple(float(e) for e in self.fermi_energies))
        object.__setattr__(self, "L_schedule", tuple(float(x) for x in self.L_schedule))

    @property
    def E_max(self) -> float:
        return max(self.fermi_energies)

    @property
    def h_scatter(self) -> float:
        return self.scattering_step if self.scattering_step else self.grid.h / 4.0

    def level_spacing(self, L: float, E: Optional[float] = None) -> float:
        """Mean level spacing near E of the free box operator (per channel in 3D)."""
        E = self.E_max if E is None else E
        k = math.sqrt(max(E, 0.0))
        return 2.0 * math.pi * max(k, 1.0 / L) / self.geometry.box_extent(L)

    def working_threshold(self, L: float, extra: float = 0.0) -> float:
        """E_work = E_max + extra + margin (margin in mean level spacings)."""
        return self.E_max + extra + self.tolerances.margin_spacings * self.level_spacing(L)

    def replace(self, **changes) -> "PhysicsConfig":
        import dataclasses

        return dataclasses.replace(self, **changes)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.violations)


def _perturbation_samples(cfg: PhysicsConfig) -> np.ndarray:
    """Values of V on the grid of the smallest box plus the declared table."""
    p = cfg.potentials.perturbation
    ok_grid = cfg.grid.h > 0.0 and cfg.L_schedule and min(cfg.L_schedule) > 0.0
    pts = [cfg.grid.coordinates(cfg.geometry, min(cfg.L_schedule))] if ok_grid else []
    if isinstance(p, TabulatedPotential):
        return np.concatenate([np.asarray(p.values)] + [p(x) for x in pts])
    return np.concatenate([p(x) for x in pts]) if pts else np.zeros(0)


def validate_config(cfg: PhysicsConfig) -> ValidationReport:
    """Collect every violated invariant of ``cfg``; empty report on success."""
    out = []
    geo, pot, grid = cfg.geometry, cfg.potentials, cfg.grid
    p = pot.perturbation

    samples = _perturbation_samples(cfg)
    if samples.size and np.min(samples) < 0.0:
        out.append(f"V >= 0 violated: minimum sample {np.min(samples):g}")
    if not np.all(np.isfinite(samples)) or not math.isfinite(p.sup_norm):
        out.append("V must be bounded (finite sup-norm)")
    R = pot.support_radius
    if not R > 0.0 and not pot.is_free:
        out.append(f"support radius must be positive, got {R:g}")
    if R > 0.5:
        out.append(f"supp(V) ⊆ Λ₁ violated: support radius {R:g} > 1/2")
    if isinstance(p, TabulatedPotential) and max(abs(x) for x in p.points) > R and any(
        v != 0.0 for x, v in zip(p.points, p.values) if abs(x) > R
    ):
        out.append("tabulated samples beyond the declared support radius must be zero")
    if pot.background.kind not in ("zero", "constant", "cosine"):
        out.append(f"unknown background kind {pot.background.kind!r}")
    elif not math.isfinite(pot.background.sup_norm):
        out.append("V0 must be bounded")

    if not grid.h > 0.0:
        out.append(f"grid spacing must be positive, got {grid.h:g}")
        return ValidationReport(out)

    Ls = cfg.L_schedule
    if not Ls:
        out.append("L schedule is empty")
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        out.append("L schedule must be strictly increasing")
    for L in Ls:
        if not L > 1.0:
            out.append(f"L > 1 violated: L={L:g}")
        n = grid.n_points(geo, L)
        if n < 8:
            out.append(f"too few grid points ({n}) at L={L:g}; need n(L) >= 8")

    if not cfg.fermi_energies:
        out.append("no Fermi energies given")
    else:
        kh = math.sqrt(max(cfg.E_max, 0.0)) * grid.h
        if kh >= 0.5:
            out.append(f"dispersion guard k·h < 0.5 violated: k·h = {kh:.3g}")
        band_top = 4.0 / grid.h**2 - pot.background.sup_norm
        band_bottom = -pot.background.sup_norm
        for E in cfg.fermi_energies:
            if not (band_bottom < E < band_top):
                out.append(f"Fermi energy E={E:g} outside ({band_bottom:g}, {band_top:g})")

    eps = cfg.smear_width
    if eps is not None:
        if not eps > 0.0:
            out.append(f"smear width must be positive, got {eps:g}")
        elif Ls and cfg.fermi_energies:
            spacing = cfg.level_spacing(min(Ls))
            if eps <= 5.0 * spacing:
                out.append(
                    f"smear width {eps:g} must exceed 5 mean level spacings "
                    f"({5 * spacing:.3g}) at the smallest L"
                )
    if cfg.lmax is not None and cfg.lmax < 0:
        out.append("lmax must be nonnegative")
    if cfg.workers < 1:
        out.append("workers must be >= 1")
    return ValidationReport(out)


def sample_potential(
    spec: PotentialSpec,
    which: Union[Which, str],
    coords: Sequence[float],
    geometry: Optional[Geometry] = None,
    L: Optional[float] = None,
) -> np.ndarray:
    """Evaluate V0, V or V0+V pointwise at ``coords``.

    If ``geometry`` and ``L`` are given, coordinates outside the box raise
    :class:`DomainError`.
    """
    which = Which(which)
    x = np.asarray(coords, dtype=float)
    if geometry is not None and L is not None and not np.all(geometry.contains(x, L)):
        raise DomainError(f"coordinates outside the box of size L={L:g}")
    if which is Which.V0:
        return spec.background(x)
    if which is Which.V:
        return spec.perturbation(x)
    return spec.background(x) + spec.perturbation(x)
