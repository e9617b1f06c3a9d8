"""Finite-difference Dirichlet operators H_L, H'_L = H_L + V and their spectra.

1D: interior points of [-L/2, L/2]. 3D (spherically symmetric V): one
reduced radial problem per angular momentum l on r in (0, L/2) with
u(0) = u(L/2) = 0 and centrifugal term l(l+1)/r^2; each channel carries
multiplicity 2l+1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .model import PhysicsConfig, Which, sample_potential
from .tridiag import EigenPairs, SymTridiag, eigs_below, near_threshold, sturm_count

# hard stop for the channel scan; l(l+1)/r^2 alone exceeds any sane threshold long before
_MAX_CHANNELS = 100_000


class Operator(str, enum.Enum):
    H = "H"
    H_PRIME = "H'"


@dataclass(frozen=True, order=True)
class ChannelKey:
    ell: int = 0

    @property
    def multiplicity(self) -> int:
        return 2 * self.ell + 1


ONE_D = ChannelKey(0)


@dataclass
class ChannelSpectrum:
    """Eigenpairs of one channel; ``vectors`` normalized to h * sum(v**2) = 1."""

    key: ChannelKey
    which: Operator
    L: float
    h: float
    values: np.ndarray
    vectors: np.ndarray
    threshold: float
    near_threshold: bool = False

    def __len__(self) -> int:
        return self.values.size


def _multiplicity(cfg: PhysicsConfig, key: ChannelKey) -> int:
    return key.multiplicity if cfg.geometry.is_radial else 1


def assemble_operator(cfg: PhysicsConfig, which, key: ChannelKey, L: float) -> SymTridiag:
    which = Operator(which)
    h = cfg.grid.h
    x = cfg.grid.coordinates(cfg.geometry, L)
    pot = Which.V0_PLUS_V if which is Operator.H_PRIME else Which.V0
    diag = 2.0 / h**2 + sample_potential(cfg.potentials, pot, x)
    if cfg.geometry.is_radial and key.ell > 0:
        diag = diag + key.ell * (key.ell + 1) / x**2
    return SymTridiag(diag, np.full(x.size - 1, -1.0 / h**2))


def spectrum_below(cfg: PhysicsConfig, which, key: ChannelKey, L: float, threshold: float) -> ChannelSpectrum:
    which = Operator(which)
    T = assemble_operator(cfg, which, key, L)
    pairs = _window(T, threshold, cfg)
    return _wrap(cfg, which, key, L, pairs)


def _window(T: SymTridiag, threshold: float, cfg: PhysicsConfig) -> EigenPairs:
    lo, _ = T.gershgorin()
    if threshold <= lo:
        # nothing below; eigs_below requires an interior threshold
        return EigenPairs(np.zeros(0), np.zeros((T.n, 0)), threshold, False)
    return eigs_below(T, threshold, cfg.tolerances)


def _wrap(cfg, which, key, L, pairs: EigenPairs) -> ChannelSpectrum:
    h = cfg.grid.h
    return ChannelSpectrum(
        key=key,
        which=which,
        L=float(L),
        h=h,
        values=pairs.values,
        vectors=pairs.vectors / np.sqrt(h),
        threshold=pairs.threshold,
        near_threshold=pairs.near_threshold,
    )


def channel_keys(cfg: PhysicsConfig, L: float, threshold: float) -> list[ChannelKey]:
    """Channels with at least one unperturbed eigenvalue <= threshold.

    The scan stops at the first empty channel; the lowest eigenvalue grows
    with l, so every higher channel is empty too (channel completeness).
    """
    if not cfg.geometry.is_radial:
        return [ONE_D]
    keys = []
    for ell in range(_MAX_CHANNELS):
        key = ChannelKey(ell)
        if sturm_count(assemble_operator(cfg, Operator.H, key, L), threshold) == 0:
            break
        keys.append(key)
    return keys


@dataclass
class ParticleCount:
    N: int
    by_channel: dict = field(default_factory=dict)  # ChannelKey -> count (without multiplicity)
    degenerate: bool = False


def particle_number(cfg: PhysicsConfig, L: float, E: float, which=Operator.H) -> ParticleCount:
    """N_L(E) = sum over channels of multiplicity * #{eigenvalues <= E}.

    Sturm counts only; no eigenvectors. ``which=H'`` gives the perturbed count.
    """
    which = Operator(which)
    total = 0
    by = {}
    degenerate = False
    for key in channel_keys(cfg, L, E):
        T = assemble_operator(cfg, which, key, L)
        c = sturm_count(T, E)
        by[key] = c
        total += _multiplicity(cfg, key) * c
        degenerate |= near_threshold(T, E, cfg.tolerances)
    return ParticleCount(total, by, degenerate)


@dataclass
class ChannelPair:
    key: ChannelKey
    multiplicity: int
    H: ChannelSpectrum
    H_prime: ChannelSpectrum
    T: SymTridiag
    T_prime: SymTridiag


@dataclass
class SpectraPair:
    """Spectra of H_L and H'_L below a common working threshold, all channels."""

    L: float
    h: float
    threshold: float
    coords: np.ndarray
    V: np.ndarray  # perturbation samples on the grid
    channels: list
    radial: bool = False


def compute_spectra(cfg: PhysicsConfig, L: float, threshold: float | None = None) -> SpectraPair:
    """Both spectra of every populated channel below ``threshold`` (default E_work)."""
    threshold = cfg.working_threshold(L) if threshold is None else float(threshold)
    coords = cfg.grid.coordinates(cfg.geometry, L)
    channels = []
    for key in channel_keys(cfg, L, threshold):
        T = assemble_operator(cfg, Operator.H, key, L)
        Tp = assemble_operator(cfg, Operator.H_PRIME, key, L)
        H = _wrap(cfg, Operator.H, key, L, _window(T, threshold, cfg))
        if np.array_equal(T.diag, Tp.diag) and np.array_equal(T.offdiag, Tp.offdiag):
            # V vanishes on this channel's grid: the perturbed spectrum is the same object
            Hp = H
        else:
            Hp = _wrap(cfg, Operator.H_PRIME, key, L, _window(Tp, threshold, cfg))
        channels.append(
            ChannelPair(
                key=key,
                multiplicity=_multiplicity(cfg, key),
                H=H,
                H_prime=Hp,
                T=T,
                T_prime=Tp,
            )
        )
    return SpectraPair(
        L=float(L),
        h=cfg.grid.h,
        threshold=threshold,
        coords=coords,
        V=sample_potential(cfg.potentials, Which.V, coords),
        channels=channels,
        radial=cfg.geometry.is_radial,
    )
