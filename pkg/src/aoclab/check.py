"""Exact-identity and inequality suite on a small built-in instance.

The instance is the 1D unit square barrier (v = 1, R_V = 0.5) on h = 0.05
with L = 3.05, i.e. n = 60 interior points, and E = 40 (N = 6 particles).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .model import Geometry, GridSpec, PhysicsConfig, PotentialSpec, SquareBarrier
from .overlap import anderson_report, birman_estimate, coupling_identity_residual
from .scattering import gamma_1d, riccati_bessel, s_matrix_1d
from .spectra import compute_spectra

BUILTIN_L = 3.05
BUILTIN_E = 40.0

# frozen from a dense numpy.linalg.eigh / slogdet evaluation of the built-in instance
GOLDEN = {
    "N": 6,
    "xi": 0,
    "I": 0.000211098503932825,
    "F": 0.000211098503932825,
    "log_abs_overlap": -0.00010555489637759364,
}
GOLDEN_RTOL = 1e-7


def builtin_config(amplitude: float = 1.0) -> PhysicsConfig:
    return PhysicsConfig(
        geometry=Geometry(),
        potentials=PotentialSpec(SquareBarrier(amplitude, 0.5)),
        grid=GridSpec(0.05),
        fermi_energies=(BUILTIN_E,),
        L_schedule=(BUILTIN_L,),
    )


def full_spectra(cfg: PhysicsConfig, L: float):
    """Spectra with every eigenpair of both operators (small n only)."""
    from .spectra import ONE_D, Operator, assemble_operator, spectrum_below

    def top(which):
        return assemble_operator(cfg, which, ONE_D, L).gershgorin()[1] * (1 - 1e-12)

    sp = compute_spectra(cfg, L, threshold=min(top(Operator.H), top(Operator.H_PRIME)))
    ch = sp.channels[0]
    # each operator is cut at its own Gershgorin bound so no level is lost
    shared = ch.H_prime is ch.H
    ch.H = spectrum_below(cfg, Operator.H, ONE_D, L, top(Operator.H))
    ch.H_prime = ch.H if shared else spectrum_below(cfg, Operator.H_PRIME, ONE_D, L, top(Operator.H_PRIME))
    n = sp.coords.size
    if len(ch.H) != n or len(ch.H_prime) != n:
        raise NumericalError(f"incomplete spectrum: {len(ch.H)}, {len(ch.H_prime)} of {n} levels")
    sp.threshold = max(top(Operator.H), top(Operator.H_PRIME))
    return sp


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def run_checks() -> list[CheckResult]:
    out = []

    def add(name, ok, detail):
        out.append(CheckResult(name, bool(ok), detail))

    cfg = builtin_config()
    sp = full_spectra(cfg, BUILTIN_L)
    ch = sp.channels[0]
    n = sp.coords.size
    add("grid size", n == 60 and len(ch.H) == n and len(ch.H_prime) == n, f"n={n}")

    res = coupling_identity_residual(sp, gap_min=1e-6)
    add("coupling identity", res <= 1e-8, f"max relative residual {res:.3e} (<= 1e-8)")

    rep = anderson_report(sp, BUILTIN_E, cfg.tolerances)
    A = sp.h * (ch.H.vectors.T @ ch.H_prime.vectors)
    N = rep.N
    brute_I = float(np.sum(A[:N, N:] ** 2))
    add("Parseval shortcut", abs(rep.I - brute_I) <= 1e-9, f"|I - double sum| = {abs(rep.I - brute_I):.3e}")
    completeness = float(np.max(np.abs(np.sum(A**2, axis=1) - 1.0)))
    add("Parseval completeness", completeness <= 1e-10, f"max |sum_k |<phi_j,psi_k>|^2 - 1| = {completeness:.3e}")

    add("Hadamard bound", rep.hadamard_ok, f"ln|S| = {rep.log_abs_overlap:.6g}, -I/2 = {-rep.I / 2:.6g}")
    add(
        "sandwich 0 <= F - I <= xi",
        rep.degenerate_at_E or 0.0 <= rep.F - rep.I <= rep.xi + 1e-12,
        f"F - I = {rep.F - rep.I:.3e}, xi = {rep.xi}",
    )
    for key, ref in GOLDEN.items():
        val = getattr(rep, key)
        ok = val == ref if isinstance(ref, int) else math.isclose(val, ref, rel_tol=GOLDEN_RTOL)
        add(f"golden {key}", ok, f"{val!r} vs frozen {ref!r}")

    b = birman_estimate(sp, 200.0, 220.0, 150.0)
    add(
        "Birman inequality",
        min(b.gamma1, b.gamma2, b.gamma2d) >= 0 and b.inequality_ok,
        f"gamma2d = {b.gamma2d:.4g} <= gamma1*gamma2 = {b.gamma1 * b.gamma2:.4g}",
    )

    free = full_spectra(builtin_config(0.0), BUILTIN_L)
    r0 = anderson_report(free, BUILTIN_E)
    add(
        "V = 0 exactness",
        r0.I == 0.0 and r0.F == 0.0 and r0.xi == 0 and r0.log_abs_overlap == 0.0,
        f"I={r0.I}, F={r0.F}, xi={r0.xi}, ln|S|={r0.log_abs_overlap}",
    )

    S = s_matrix_1d(cfg.potentials, 2.0, cfg.h_scatter)
    add("S-matrix unitarity", S.unitarity_defect() <= 1e-8, f"defect {S.unitarity_defect():.3e}")
    g0 = gamma_1d(s_matrix_1d(builtin_config(0.0).potentials, 2.0)).gamma
    add("gamma(V = 0) = 0", g0 == 0.0, f"gamma = {g0}")

    worst = 0.0
    for x in np.linspace(0.05, 40.0, 60):
        s, c, ds, dc = riccati_bessel(20, x)
        worst = max(worst, float(np.max(np.abs(ds * c - s * dc - 1.0))))
    add("Riccati-Bessel Wronskian", worst <= 1e-10, f"max |W - 1| = {worst:.3e}")
    return out
