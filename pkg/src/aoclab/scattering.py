"""Infinite-volume scattering predictions for the decay exponent gamma(E).

1D: 2x2 S-matrix from transfer matrices over a piecewise-constant
approximation of V, then gamma = ||S - 1||_HS^2 / (2 pi)^2.
3D (spherically symmetric V): phase shifts from outward Numerov integration
of the reduced radial equation, matched to Riccati-Bessel functions at two
radii outside the support, then gamma = sum (2l+1) sin^2(delta_l) / pi^2.

Requires V0 = 0 and E > 0. Phase shifts follow u(r) ~ sin(kr - l pi/2 + delta),
so a repulsive V gives delta < 0; only sin^2(delta) enters gamma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .errors import DomainError, NumericalError
from .model import PhysicsConfig, PotentialSpec

_FOUR_PI2 = 4.0 * math.pi**2


def _perturbation(potential):
    if isinstance(potential, PotentialSpec):
        if not potential.background.is_zero:
            raise DomainError(
                "scattering predictions require V0 ≡ 0; finite-volume statistics only for this config"
            )
        return potential.perturbation
    return potential


# --- 1D ----------------------------------------------------------------------


@dataclass
class SMatrix1D:
    E: float
    t: complex
    r_left: complex
    r_right: complex

    def unitarity_defect(self) -> float:
        a = abs(abs(self.t) ** 2 + abs(self.r_left) ** 2 - 1.0)
        b = abs(abs(self.t) ** 2 + abs(self.r_right) ** 2 - 1.0)
        c = abs(abs(self.r_left) - abs(self.r_right))
        return max(a, b, c)

    def as_matrix(self) -> np.ndarray:
        """S in the (right-going, left-going) outgoing basis."""
        return np.array([[self.t, self.r_right], [self.r_left, self.t]])


def _cell_transfer(q2: complex, w: float) -> np.ndarray:
    # (u, u') across width w where u'' = -q2 u
    q = np.sqrt(q2 + 0j)
    c = np.cos(q * w)
    s_over_q = w * np.sinc(q * w / np.pi) if q != 0 else w
    return np.array([[c, s_over_q], [-q2 * s_over_q, c]])


def s_matrix_1d(potential, E: float, step: float = 0.0125) -> SMatrix1D:
    """Transmission/reflection amplitudes of ``-u'' + V u = E u``.

    V is replaced by its midpoint values on cells of width <= ``step``
    tiling [-R_V, R_V]; left incidence u = e^{ikx} + r_left e^{-ikx} -> t e^{ikx}.
    """
    if not E > 0:
        raise DomainError(f"scattering energy must be positive, got E={E:g}")
    V = _perturbation(potential)
    R = float(V.support_radius)
    k = math.sqrt(E)
    M = np.eye(2, dtype=complex)
    if V.sup_norm == 0:
        return SMatrix1D(float(E), 1.0 + 0j, 0j, 0j)
    if R > 0:
        n = max(1, int(math.ceil(2 * R / step)))
        w = 2 * R / n
        mids = -R + w * (np.arange(n) + 0.5)
        vals = V(mids)
        # consecutive equal cells collapse into one exact step
        i = 0
        while i < n:
            j = i
            while j + 1 < n and vals[j + 1] == vals[i]:
                j += 1
            M = _cell_transfer(E - vals[i], (j - i + 1) * w) @ M
            i = j + 1

    def plane(x):
        e = np.exp(1j * k * x)
        return np.array([[e, 1 / e], [1j * k * e, -1j * k / e]])

    W = np.linalg.solve(plane(R), M @ plane(-R))
    r_left = -W[1, 0] / W[1, 1]
    t = np.linalg.det(W) / W[1, 1]
    r_right = W[0, 1] / W[1, 1]
    return SMatrix1D(float(E), complex(t), complex(r_left), complex(r_right))


@dataclass
class GammaPrediction:
    E: float
    gamma: float
    method: str  # "HS_1D" or "PartialWave3D"
    sigma_total: Optional[float] = None
    transmission: Optional[float] = None
    reflection: Optional[float] = None
    gamma_cross_section: Optional[float] = None


def gamma_1d(S: SMatrix1D, tol_unitarity: float = 1e-8) -> GammaPrediction:
    """gamma = (2 pi)^-2 (2|t-1|^2 + |r_left|^2 + |r_right|^2)."""
    defect = S.unitarity_defect()
    if defect > tol_unitarity:
        raise NumericalError(f"S-matrix not unitary at E={S.E:g}: defect {defect:.3g}")
    hs = 2 * abs(S.t - 1) ** 2 + abs(S.r_left) ** 2 + abs(S.r_right) ** 2
    return GammaPrediction(
        E=S.E,
        gamma=hs / _FOUR_PI2,
        method="HS_1D",
        transmission=abs(S.t) ** 2,
        reflection=abs(S.r_left) ** 2,
    )


# --- Riccati-Bessel ----------------------------------------------------------


@numba.njit(cache=True)
def _riccati(lmax, x):
    # s[l] = x j_l(x), c[l] = -x y_l(x) for l = -1..lmax (index shifted by 1)
    s = np.empty(lmax + 2)
    c = np.empty(lmax + 2)
    sx = math.sin(x)
    cx = math.cos(x)
    c[0] = -sx
    c[1] = cx
    for l in range(0, lmax):
        c[l + 2] = (2 * l + 1) / x * c[l + 1] - c[l]
    # Miller's downward recurrence on j_l, renormalized against j_0 or j_1
    start = lmax + 20 + int(x) + int(math.sqrt(40.0 * (lmax + x + 1)))
    js = np.zeros(lmax + 1)
    jp1 = 0.0
    jl = 1e-300
    for l in range(start, 0, -1):
        jm1 = (2 * l + 1) / x * jl - jp1
        jp1 = jl
        jl = jm1
        if l - 1 <= lmax:
            js[l - 1] = jl
        if abs(jl) > 1e250:
            jl *= 1e-250
            jp1 *= 1e-250
            for i in range(js.size):
                js[i] *= 1e-250
    j0 = sx / x
    j1 = sx / (x * x) - cx / x
    if lmax == 0 or abs(j0) >= abs(j1):
        scale = j0 / js[0]
    else:
        scale = j1 / js[1]
    s[0] = cx
    s[1] = sx
    for l in range(1, lmax + 1):
        s[l + 1] = x * js[l] * scale
    return s, c


def riccati_bessel(lmax: int, x: float):
    """(s, c, ds, dc) arrays for l = 0..lmax at argument x > 0.

    s = x j_l(x), c = -x y_l(x); ds, dc their x-derivatives. With this
    convention the Wronskian s' c - s c' equals 1.
    """
    if not x > 0:
        raise DomainError("Riccati-Bessel argument must be positive")
    s, c = _riccati(int(lmax), float(x))
    ell = np.arange(0, lmax + 1)
    ds = s[:-1] - ell / x * s[1:]
    dc = c[:-1] - ell / x * c[1:]
    return s[1:], c[1:], ds, dc


# --- Numerov -----------------------------------------------------------------


@numba.njit(cache=True)
def _numerov(ell, V, E, step, i1, i2):
    # integrate u'' = f u on r_i = i*step, i = 0..i2; returns (u[i1], u[i2])
    n = i2 + 1
    ll = ell * (ell + 1.0)
    h2 = step * step / 12.0
    f = np.empty(n)
    for i in range(1, n):
        r = i * step
        f[i] = ll / (r * r) + V[i] - E
    a = (V[1] - E) / (2.0 * (2 * ell + 3))
    # regular-solution series, scaled so u(step) ~ 1
    u_prev = 1.0 + a * step * step
    u_cur = 2.0 ** (ell + 1) * (1.0 + a * 4.0 * step * step)
    u1 = 0.0
    if i1 == 1:
        u1 = u_prev
    elif i1 == 2:
        u1 = u_cur
    for i in range(2, i2):
        u_next = (2.0 * (1.0 + 5.0 * h2 * f[i]) * u_cur - (1.0 - h2 * f[i - 1]) * u_prev) / (
            1.0 - h2 * f[i + 1]
        )
        u_prev = u_cur
        u_cur = u_next
        if abs(u_cur) > 1e200:
            u_prev *= 1e-200
            u_cur *= 1e-200
            u1 *= 1e-200
        if i + 1 == i1:
            u1 = u_cur
    return u1, u_cur


@dataclass
class PhaseShiftTable:
    E: float
    shifts: np.ndarray  # delta_l mod pi in (-pi/2, pi/2], l = 0..lmax
    tail_bound: float
    tail_tolerance: float
    radii: tuple = ()
    lmax_raised: bool = False

    @property
    def lmax(self) -> int:
        return self.shifts.size - 1

    @property
    def tail_ok(self) -> bool:
        return self.tail_bound < self.tail_tolerance


def _wrap_mod_pi(d: float) -> float:
    d = math.fmod(d, math.pi)
    if d <= -math.pi / 2:
        d += math.pi
    elif d > math.pi / 2:
        d -= math.pi
    return d


def _node_values(V, r, step):
    # mean of one-sided limits, so a jump of V at a node costs O(step^2) rather than O(step)
    d = 1e-9 * step
    return 0.5 * (np.asarray(V(r - d), dtype=float) + np.asarray(V(r + d), dtype=float))


def _phase_shift(V, ell, E, step, R1, R2, floor=1e-12, retries=4):
    k = math.sqrt(E)
    R = float(V.support_radius)
    wavelength = 2 * math.pi / k
    for attempt in range(retries + 1):
        i1 = max(3, int(round(R1 / step)))
        i2 = max(i1 + 2, int(round(R2 / step)))
        vals = _node_values(V, step * np.arange(i2 + 1), step)
        u1, u2 = _numerov(ell, vals, E, step, i1, i2)
        a, b = i1 * step, i2 * step
        s1, c1, _, _ = riccati_bessel(ell, k * a)
        s2, c2, _, _ = riccati_bessel(ell, k * b)
        s1, c1, s2, c2 = s1[ell], c1[ell], s2[ell], c2[ell]
        num = s1 * u2 - s2 * u1
        den = c2 * u1 - c1 * u2
        scale = math.hypot(s1 * u2, s2 * u1) + math.hypot(c2 * u1, c1 * u2)
        if math.hypot(num, den) > floor * scale:
            return _wrap_mod_pi(math.atan2(num, den)), (a, b)
        R1 += wavelength / 8
        R2 += wavelength / 8
    raise NumericalError(f"phase-shift matching failed for l={ell} at E={E:g}")


def _default_radii(V, E, step):
    k = math.sqrt(E)
    R = float(V.support_radius)
    quarter = 0.25 * 2 * math.pi / k
    R1 = R + max(quarter, 4 * step)
    return R1, R1 + max(quarter, 4 * step)


def phase_shifts_3d(
    potential,
    E: float,
    lmax: Optional[int] = None,
    tail_tolerance: float = 1e-10,
    step: float = 0.0125,
    radii: Optional[tuple] = None,
    max_l: int = 500,
) -> PhaseShiftTable:
    """delta_l(E) for l = 0..lmax by Numerov integration and two-radius matching.

    ``lmax=None`` selects it automatically: stop once sin^2(delta_l) drops
    below ``tail_tolerance`` for two consecutive l. A fixed ``lmax`` is
    raised if the next partial wave still violates the tail tolerance.
    """
    if not E > 0:
        raise DomainError(f"scattering energy must be positive, got E={E:g}")
    V = _perturbation(potential)
    R1, R2 = radii if radii is not None else _default_radii(V, E, step)
    if min(R1, R2) <= V.support_radius:
        raise DomainError("matching radii must lie outside the support of V")
    shifts = []
    used = None
    quiet = 0
    raised = False
    ell = 0
    while True:
        d, used = _phase_shift(V, ell, E, step, R1, R2)
        shifts.append(d)
        small = math.sin(d) ** 2 < tail_tolerance
        quiet = quiet + 1 if small else 0
        if lmax is None:
            if quiet >= 2:
                break
        elif ell >= lmax + 1:
            if small:
                break
            raised = True
        ell += 1
        if ell > max_l:
            raise NumericalError(f"phase shifts not below tail tolerance up to l={max_l}")
    if lmax is not None:
        # the last computed partial wave only served as the tail probe
        tail = math.sin(shifts[-1]) ** 2
        shifts = shifts[:-1]
    else:
        tail = max(math.sin(x) ** 2 for x in shifts[-2:])
    return PhaseShiftTable(
        E=float(E),
        shifts=np.array(shifts),
        tail_bound=tail,
        tail_tolerance=tail_tolerance,
        radii=used,
        lmax_raised=raised,
    )


def gamma_3d(table: PhaseShiftTable) -> GammaPrediction:
    """gamma = pi^-2 sum (2l+1) sin^2 delta_l, cross-checked against E sigma / (4 pi^3)."""
    if not table.tail_ok:
        raise NumericalError(
            f"phase-shift tail {table.tail_bound:.3g} exceeds tolerance {table.tail_tolerance:.3g}"
        )
    ell = np.arange(table.shifts.size)
    weights = (2 * ell + 1) * np.sin(table.shifts) ** 2
    total = float(np.sum(weights))
    gamma = total / math.pi**2
    sigma = 4 * math.pi / table.E * total
    gamma_xs = table.E * sigma / (4 * math.pi**3)
    if abs(gamma - gamma_xs) > 1e-12 * max(1.0, gamma):
        raise NumericalError(f"partial-wave and cross-section routes disagree: {gamma!r} vs {gamma_xs!r}")
    return GammaPrediction(
        E=table.E,
        gamma=gamma,
        method="PartialWave3D",
        sigma_total=sigma,
        gamma_cross_section=gamma_xs,
    )


@dataclass
class ScatteringPrediction:
    gamma: GammaPrediction
    s_matrix: Optional[SMatrix1D] = None
    phases: Optional[PhaseShiftTable] = None
    notes: list = field(default_factory=list)


def predict(cfg: PhysicsConfig, E: float) -> ScatteringPrediction:
    """gamma(E) for the configured geometry; 0 for E < 0 or V ≡ 0."""
    if E < 0:
        return ScatteringPrediction(GammaPrediction(E, 0.0, _method(cfg)), notes=["E < 0: gamma = 0"])
    if cfg.potentials.is_free:
        return ScatteringPrediction(GammaPrediction(E, 0.0, _method(cfg)), notes=["V ≡ 0: gamma = 0"])
    if E == 0:
        raise DomainError("gamma is not evaluated at the band edge E = 0")
    step = cfg.h_scatter
    tol = cfg.tolerances
    if cfg.geometry.is_radial:
        table = phase_shifts_3d(cfg.potentials, E, cfg.lmax, tol.tail, step)
        return ScatteringPrediction(gamma_3d(table), phases=table)
    S = s_matrix_1d(cfg.potentials, E, step)
    return ScatteringPrediction(gamma_1d(S, tol.unitarity), s_matrix=S)


def _method(cfg: PhysicsConfig) -> str:
    return "PartialWave3D" if cfg.geometry.is_radial else "HS_1D"
