"""Finite-volume overlap statistics for a pair of spectra.

All inner products are discrete L^2 products with weight h. In 3D the
overlap matrix is block diagonal over (l, m); the 2l+1 copies of a channel
share the same block, so only one block per l is formed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import lu_factor

from .errors import DomainError, InsufficientDataError
from .model import Tolerances
from .spectra import ChannelKey, SpectraPair
from .tridiag import near_threshold, sturm_count


class FillingRule(str, enum.Enum):
    GLOBAL_N = "GlobalN"
    FIXED_ENERGY = "FixedEnergy"


@dataclass
class OverlapBlock:
    """Overlap block of one channel.

    ``matrix`` has ``rows`` rows and the largest column count among the
    copies; ``copies`` lists ``(columns, number_of_copies)``.
    """

    key: ChannelKey
    rows: int
    matrix: np.ndarray
    copies: list

    @property
    def multiplicity(self) -> int:
        return sum(n for _, n in self.copies)


@dataclass
class OverlapMatrix:
    E: float
    L: float
    rule: FillingRule
    blocks: list
    N: int
    tie: bool = False  # the N-th perturbed level is (near-)degenerate with the next one

    @property
    def row_count(self) -> int:
        return sum(b.rows * b.multiplicity for b in self.blocks)

    @property
    def column_count(self) -> int:
        return sum(c * n for b in self.blocks for c, n in b.copies)

    def max_abs_entry(self) -> float:
        return max((float(np.max(np.abs(b.matrix))) for b in self.blocks if b.matrix.size), default=0.0)


class LogOverlap(NamedTuple):
    value: float
    status: str  # "ok", "empty" (N = 0), "mismatch" (channel occupancy), "singular"


def _filled_rows(pair, E: float) -> int:
    return sturm_count(pair.T, E)


def _select_global(spectra: SpectraPair, N: int, tol: Tolerances):
    """Per channel: list of (columns, copies) for the lowest N perturbed states.

    Ties are broken by (eigenvalue, l, n); a partially filled multiplet or a
    near-degenerate N-th/(N+1)-th pair sets the tie flag.
    """
    levels = []
    for idx, ch in enumerate(spectra.channels):
        for n, mu in enumerate(ch.H_prime.values):
            levels.append((float(mu), ch.key.ell, n, idx))
    levels.sort()
    cols = [0] * len(spectra.channels)
    partial = None
    filled = 0
    pos = 0
    while filled < N:
        if pos >= len(levels):
            raise DomainError(
                f"only {filled} perturbed states below the working threshold, need N={N}; raise the margin"
            )
        mu, ell, n, idx = levels[pos]
        mult = spectra.channels[idx].multiplicity
        take = min(mult, N - filled)
        if take < mult:
            partial = (idx, take)
        else:
            cols[idx] += 1
        filled += take
        pos += 1
    tie = partial is not None
    if 0 < pos < len(levels):
        gap = levels[pos][0] - levels[pos - 1][0]
        tie |= gap <= tol.degeneracy * max(c.T_prime.norm for c in spectra.channels)
    out = []
    for idx, ch in enumerate(spectra.channels):
        mult = ch.multiplicity
        if partial is not None and partial[0] == idx:
            p = partial[1]
            out.append([(cols[idx] + 1, p), (cols[idx], mult - p)])
        else:
            out.append([(cols[idx], mult)])
    return out, tie


def overlap_matrix(
    spectra: SpectraPair,
    E: float,
    rule=FillingRule.GLOBAL_N,
    tol: Tolerances = Tolerances(),
) -> OverlapMatrix:
    """Channel blocks of <phi_j, psi_k> for the filled states under ``rule``."""
    rule = FillingRule(rule)
    if E > spectra.threshold:
        raise DomainError(f"E={E:g} above the working threshold {spectra.threshold:g}")
    h = spectra.h
    for ch in spectra.channels:
        if ch.H.L != ch.H_prime.L or ch.H.h != ch.H_prime.h or ch.H.vectors.shape[0] != ch.H_prime.vectors.shape[0]:
            raise ValueError(f"spectra of channel l={ch.key.ell} come from different grids or L")
    rows = [_filled_rows(ch, E) for ch in spectra.channels]
    N = sum(r * ch.multiplicity for r, ch in zip(rows, spectra.channels))
    tie = False
    if rule is FillingRule.GLOBAL_N:
        copies, tie = _select_global(spectra, N, tol)
    else:
        copies = [[(sturm_count(ch.T_prime, E), ch.multiplicity)] for ch in spectra.channels]
    blocks = []
    for ch, r, cp in zip(spectra.channels, rows, copies):
        c = max(cc for cc, _ in cp)
        if ch.H_prime is ch.H:
            # identical operators: orthonormality makes the block exactly [I 0]
            m = np.eye(r, c)
        else:
            m = h * (ch.H.vectors[:, :r].T @ ch.H_prime.vectors[:, :c])
        blocks.append(OverlapBlock(ch.key, r, m, [x for x in cp if x[1] > 0]))
    return OverlapMatrix(E=float(E), L=spectra.L, rule=rule, blocks=blocks, N=N, tie=tie)


def _log_abs_det(A: np.ndarray) -> float:
    if A.shape[0] == 0:
        return 0.0
    lu, _ = lu_factor(A, check_finite=False)
    piv = np.abs(np.diag(lu))
    if np.any(piv == 0.0):
        return -math.inf
    return float(np.sum(np.log(piv)))


def log_abs_overlap(M: OverlapMatrix) -> LogOverlap:
    """ln|S_L(E)| from the block structure of a GlobalN overlap matrix.

    Returns -inf with status "mismatch" when some channel copy has unequal
    row and column counts (the determinant vanishes by symmetry).
    """
    if M.rule is not FillingRule.GLOBAL_N:
        raise ValueError("log_abs_overlap needs the GlobalN filling rule")
    if M.N == 0:
        return LogOverlap(0.0, "empty")
    for b in M.blocks:
        for cols, _ in b.copies:
            if cols != b.rows:
                return LogOverlap(-math.inf, "mismatch")
    total = 0.0
    for b in M.blocks:
        for cols, n in b.copies:
            ld = _log_abs_det(b.matrix[:, :cols])
            if ld == -math.inf:
                return LogOverlap(-math.inf, "singular")
            total += n * ld
    return LogOverlap(total, "ok")


def explicit_block_matrix(M: OverlapMatrix) -> np.ndarray:
    """Full overlap matrix with every (l, m) copy laid out block-diagonally.

    Rows and columns of all channels are merged into one square matrix; for
    cross-checking the channel factorization on small instances.
    """
    nr = M.row_count
    nc = M.column_count
    full = np.zeros((nr, nc))
    r0 = c0 = 0
    for b in M.blocks:
        for cols, n in b.copies:
            for _ in range(n):
                full[r0 : r0 + b.rows, c0 : c0 + cols] = b.matrix[:, :cols]
                r0 += b.rows
                c0 += cols
    return full


def _fill_deficit(block: OverlapBlock) -> float:
    """sum over copies of sum_j (1 - sum_k |M_jk|^2) for the block's filling."""
    total = 0.0
    sq = block.matrix**2
    for cols, n in block.copies:
        total += n * (block.rows - float(np.sum(sq[:, :cols])))
    return total


@dataclass
class ChannelStats:
    ell: int
    multiplicity: int
    rows: int
    columns: list
    perturbed_below_E: int
    I: float
    F: float
    xi: int


@dataclass
class OverlapReport:
    L: float
    E: float
    N: int
    log_abs_overlap: float
    I: float
    F: float
    xi: int
    hadamard_ok: bool
    degenerate_at_E: bool
    overlap_status: str = "ok"
    tie: bool = False
    channels: list = field(default_factory=list)

    @property
    def sandwich_ok(self) -> bool:
        return 0.0 <= self.F - self.I <= self.xi + 1e-9 * max(1, self.N)


def anderson_report(spectra: SpectraPair, E: float, tol: Tolerances = Tolerances()) -> OverlapReport:
    """I_L(E), F_L(E), xi_L(E), ln|S_L(E)| and the Hadamard check for one (L, E).

    I uses the filled x filled form, exact in finite dimension by Parseval.
    """
    Mg = overlap_matrix(spectra, E, FillingRule.GLOBAL_N, tol)
    Mf = overlap_matrix(spectra, E, FillingRule.FIXED_ENERGY, tol)
    logS = log_abs_overlap(Mg)
    I = 0.0
    F = 0.0
    N_prime = 0
    degenerate = False
    stats = []
    for ch, bg, bf in zip(spectra.channels, Mg.blocks, Mf.blocks):
        Ic = _fill_deficit(bg)
        Fc = _fill_deficit(bf)
        below = sturm_count(ch.T_prime, E)
        N_prime += ch.multiplicity * below
        I += Ic
        F += Fc
        degenerate |= near_threshold(ch.T, E, tol) or near_threshold(ch.T_prime, E, tol)
        stats.append(
            ChannelStats(
                ell=ch.key.ell,
                multiplicity=ch.multiplicity,
                rows=bg.rows,
                columns=list(bg.copies),
                perturbed_below_E=below,
                I=Ic,
                F=Fc,
                xi=ch.multiplicity * (bg.rows - below),
            )
        )
    N = Mg.N
    hadamard_ok = logS.value <= -0.5 * I + tol.det * max(N, 1)
    return OverlapReport(
        L=spectra.L,
        E=float(E),
        N=N,
        log_abs_overlap=logS.value,
        I=I,
        F=F,
        xi=N - N_prime,
        hadamard_ok=bool(hadamard_ok),
        degenerate_at_E=bool(degenerate),
        overlap_status=logS.status,
        tie=Mg.tie,
        channels=stats,
    )


def coupling_identity_residual(
    spectra: SpectraPair,
    V: Optional[np.ndarray] = None,
    pairs=None,
    gap_min: float = 1e-6,
    floor: Optional[float] = None,
    channel: int = 0,
) -> float:
    """Max relative residual of |<phi_j,psi_k>| |mu_k - lambda_j| = |<phi_j, V psi_k>|.

    ``pairs`` is an iterable of (j, k) index pairs; default: all computed
    pairs of the channel. Pairs with |mu_k - lambda_j| <= gap_min are skipped.

    The denominator is max(|<phi_j, V psi_k>|, floor). Couplings that vanish by
    symmetry leave a left side of order eps * n * gap, so an absolute floor
    far below that turns rounding noise into O(1) "relative" errors. The
    default floor is 1e-4 ||V||_inf, the bound on any coupling.
    """
    ch = spectra.channels[channel]
    V = spectra.V if V is None else np.asarray(V, dtype=float)
    h = spectra.h
    phi, psi = ch.H.vectors, ch.H_prime.vectors
    lam, mu = ch.H.values, ch.H_prime.values
    if pairs is None:
        A = h * (phi.T @ psi)
        B = h * (phi.T @ (V[:, None] * psi))
        gap = mu[None, :] - lam[:, None]
    else:
        j, k = (np.asarray(t, dtype=int) for t in zip(*pairs))
        A = h * np.einsum("ij,ij->j", phi[:, j], psi[:, k])
        B = h * np.einsum("ij,ij->j", phi[:, j], V[:, None] * psi[:, k])
        gap = mu[k] - lam[j]
    mask = np.abs(gap) > gap_min
    if not np.any(mask):
        raise InsufficientDataError("all sampled pairs are degenerate; nothing to compare")
    lhs = np.abs(A[mask]) * np.abs(gap[mask])
    rhs = np.abs(B[mask])
    if floor is None:
        floor = max(1e-4 * float(np.max(np.abs(V), initial=0.0)), np.finfo(float).tiny)
    return float(np.max(np.abs(lhs - rhs) / np.maximum(rhs, floor)))


@dataclass
class BirmanEstimate:
    E: float
    E_prime: float
    eps: float
    gamma2d: float
    gamma1: float
    gamma2: float
    levels_E: int
    levels_E_prime: int
    low_statistics: bool

    @property
    def inequality_ok(self) -> bool:
        return self.gamma2d <= self.gamma1 * self.gamma2 * (1 + 1e-8) + 1e-300


def birman_estimate(
    spectra: SpectraPair,
    E: float,
    E_prime: Optional[float] = None,
    eps: float = 0.2,
    V: Optional[np.ndarray] = None,
    min_levels: int = 5,
) -> BirmanEstimate:
    """Smeared finite-volume surrogates for gamma^(2)(E, E'), gamma_1(E), gamma_2(E').

    Windows are the open intervals ]E - eps/2, E + eps/2[ on the spectra of H
    (for E) and H' (for E').
    """
    E_prime = E if E_prime is None else E_prime
    V = spectra.V if V is None else np.asarray(V, dtype=float)
    if not eps > 0:
        raise DomainError("smear width must be positive")
    for e in (E, E_prime):
        if e - eps / 2 <= 0.0 or e + eps / 2 >= spectra.threshold:
            raise DomainError(
                f"window around {e:g} of width {eps:g} not inside (0, {spectra.threshold:g})"
            )
    h = spectra.h
    g2d = g1 = g2 = 0.0
    n1 = n2 = 0
    for ch in spectra.channels:
        lam, mu = ch.H.values, ch.H_prime.values
        wj = (lam > E - eps / 2) & (lam < E + eps / 2)
        wk = (mu > E_prime - eps / 2) & (mu < E_prime + eps / 2)
        n1 += ch.multiplicity * int(wj.sum())
        n2 += ch.multiplicity * int(wk.sum())
        if not (wj.any() or wk.any()):
            continue
        phi = ch.H.vectors[:, wj]
        psi = ch.H_prime.vectors[:, wk]
        C = h * (phi.T @ (V[:, None] * psi))
        g2d += ch.multiplicity * float(np.sum(C**2))
        g1 += ch.multiplicity * h * float(np.sum(V[:, None] * phi**2))
        g2 += ch.multiplicity * h * float(np.sum(V[:, None] * psi**2))
    return BirmanEstimate(
        E=float(E),
        E_prime=float(E_prime),
        eps=float(eps),
        gamma2d=g2d / eps**2,
        gamma1=g1 / eps,
        gamma2=g2 / eps,
        levels_E=n1,
        levels_E_prime=n2,
        low_statistics=min(n1, n2) < min_levels,
    )
