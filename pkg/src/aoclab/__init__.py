"""Finite-volume orthogonality catastrophe: spectra, overlaps, scattering and scaling fits."""

__version__ = "0.1.0"

from .errors import AoclabError, DomainError, InsufficientDataError, NumericalError, ValidationError
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
    validate_config,
)
from .config import load_config, dump_config
from .spectra import compute_spectra, particle_number
from .overlap import anderson_report, birman_estimate, coupling_identity_residual, overlap_matrix
from .scattering import gamma_1d, gamma_3d, phase_shifts_3d, predict, s_matrix_1d
from .scaling import compare_report, fit_loglinear, run_sweep
from .store import RunStore

__all__ = [
    "AoclabError",
    "Background",
    "DomainError",
    "Geometry",
    "GeometryKind",
    "GridSpec",
    "InsufficientDataError",
    "NumericalError",
    "PhysicsConfig",
    "PotentialSpec",
    "RunStore",
    "SquareBarrier",
    "TabulatedPotential",
    "Tolerances",
    "TruncatedGaussian",
    "ValidationError",
    "anderson_report",
    "birman_estimate",
    "compare_report",
    "compute_spectra",
    "coupling_identity_residual",
    "dump_config",
    "fit_loglinear",
    "gamma_1d",
    "gamma_3d",
    "load_config",
    "overlap_matrix",
    "particle_number",
    "phase_shifts_3d",
    "predict",
    "run_sweep",
    "s_matrix_1d",
    "validate_config",
]
