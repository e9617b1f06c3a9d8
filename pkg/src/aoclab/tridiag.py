"""Windowed eigensolver for real symmetric tridiagonal matrices.

Eigenvalue counts come from Sturm sequences (LDL^T pivots of ``T - x I``),
eigenvalues below a threshold from bisection on those counts, and
eigenvectors from inverse iteration with a pivoted tridiagonal LU. Only the
window below the threshold is ever touched, so the cost is O(n m) for m
returned pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DomainError, NumericalError
from .model import Tolerances

_TINY = np.finfo(float).tiny
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SymTridiag:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=float)
        e = np.ascontiguousarray(self.offdiag, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("diag must be a nonempty 1-d array")
        if e.shape != (d.size - 1,):
            raise ValueError(f"offdiag must have length {d.size - 1}, got {e.shape}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("tridiagonal entries must be finite")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def gershgorin(self) -> tuple[float, float]:
        ae = np.abs(self.offdiag)
        r = np.zeros(self.n)
        r[:-1] += ae
        r[1:] += ae
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    @property
    def norm(self) -> float:
        """Upper bound on the spectral norm (max Gershgorin radius), at least 1e-300."""
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi), 1e-300)

    def shifted(self, c: float) -> "SymTridiag":
        return SymTridiag(self.diag + c, self.offdiag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diag[:, None] * v.reshape(self.n, -1)
        w = v.reshape(self.n, -1)
        out[:-1] += self.offdiag[:, None] * w[1:]
        out[1:] += self.offdiag[:, None] * w[:-1]
        return out.reshape(v.shape)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass
class EigenPairs:
    """Eigenpairs below ``threshold``; ``vectors[:, i]`` has unit Euclidean norm."""

    values: np.ndarray
    vectors: np.ndarray
    threshold: float
    near_threshold: bool = False
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return self.values.size


# --- kernels ---------------------------------------------------------------


@numba.njit(cache=True)
def _sturm(d, e2, x, pivmin):
    # number of eigenvalues <= x; zero pivots are pushed to -pivmin
    n = d.size
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@numba.njit(cache=True)
def _sturm_many(d, e2, xs, pivmin):
    out = np.empty(xs.size, dtype=np.int64)
    for i in range(xs.size):
        out[i] = _sturm(d, e2, xs[i], pivmin)
    return out


_BATCH = 8


@numba.njit(cache=True)
def _sturm_batch(d, e2, xs, nx, pivmin, out):
    # several independent Sturm recurrences in one sweep over the rows
    q = np.empty(_BATCH)
    for b in range(nx):
        q[b] = d[0] - xs[b]
        if abs(q[b]) < pivmin:
            q[b] = -pivmin
        out[b] = 1 if q[b] < 0.0 else 0
    for i in range(1, d.size):
        di = d[i]
        ei = e2[i - 1]
        for b in range(nx):
            t = di - xs[b] - ei / q[b]
            if abs(t) < pivmin:
                t = -pivmin
            q[b] = t
            if t < 0.0:
                out[b] += 1


@numba.njit(cache=True)
def _bisect(d, e2, m, lo, hi, abstol, pivmin):
    # lowest m eigenvalues, all known to lie in (lo, hi]
    low = np.full(m, lo)
    up = np.full(m, hi)
    xs = np.empty(_BATCH)
    counts = np.empty(_BATCH, dtype=np.int64)
    first = 0
    while True:
        while first < m and (up[first] - low[first] <= abstol):
            first += 1
        if first >= m:
            break
        nx = 0
        k = first
        while k < m and nx < _BATCH:
            w = up[k] - low[k]
            if w > abstol:
                mid = 0.5 * (low[k] + up[k])
                if mid <= low[k] or mid >= up[k]:
                    # interval cannot be split further in floating point
                    low[k] = up[k] - 0.5 * abstol
                elif nx == 0 or mid != xs[nx - 1]:
                    xs[nx] = mid
                    nx += 1
            k += 1
        if nx == 0:
            continue
        _sturm_batch(d, e2, xs, nx, pivmin, counts)
        for b in range(nx):
            mid = xs[b]
            c = counts[b]
            for j in range(first, m):
                if j < c:
                    if mid < up[j]:
                        up[j] = mid
                else:
                    if mid > low[j]:
                        low[j] = mid
    vals = np.empty(m)
    for k in range(m):
        vals[k] = 0.5 * (low[k] + up[k])
    return vals


@numba.njit(cache=True)
def _gttrf(a, e, du2, du, dl, ipiv, pivmin):
    # LU with partial pivoting of the tridiagonal matrix (e, a, e); in place
    n = a.size
    for i in range(n - 1):
        du[i] = e[i]
        dl[i] = e[i]
        du2[i] = 0.0
    for i in range(n - 1):
        if abs(a[i]) >= abs(dl[i]):
            ipiv[i] = 0
            if abs(a[i]) < pivmin:
                a[i] = pivmin
            f = dl[i] / a[i]
            dl[i] = f
            a[i + 1] -= f * du[i]
        else:
            ipiv[i] = 1
            f = a[i] / dl[i]
            a[i] = dl[i]
            dl[i] = f
            t = du[i]
            du[i] = a[i + 1]
            a[i + 1] = t - f * a[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -f * du[i + 1]
    if abs(a[n - 1]) < pivmin:
        a[n - 1] = pivmin


@numba.njit(cache=True)
def _gttrs(a, du2, du, dl, ipiv, b):
    n = a.size
    for i in range(n - 1):
        if ipiv[i] == 0:
            b[i + 1] -= dl[i] * b[i]
        else:
            t = b[i]
            b[i] = b[i + 1]
            b[i + 1] = t - dl[i] * b[i + 1]
    b[n - 1] /= a[n - 1]
    if n > 1:
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / a[n - 2]
    for i in range(n - 3, -1, -1):
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / a[i]


@numba.njit(cache=True)
def _residual(d, e, lam, v):
    n = d.size
    s = 0.0
    for i in range(n):
        r = (d[i] - lam) * v[i]
        if i > 0:
            r += e[i - 1] * v[i - 1]
        if i < n - 1:
            r += e[i] * v[i + 1]
        s += r * r
    return np.sqrt(s)


@numba.njit(cache=True)
def _inverse_iteration(d, e, vals, cluster_tol, res_tol, max_iter, pivmin, tnorm):
    # returns (vectors[m, n], residuals[m], status); status = -1 on success,
    # else the index of the first eigenvalue that failed to converge
    n = d.size
    m = vals.size
    vecs = np.zeros((m, n))
    res = np.zeros(m)
    a = np.empty(n)
    du2 = np.empty(max(n - 1, 1))
    du = np.empty(max(n - 1, 1))
    dl = np.empty(max(n - 1, 1))
    ipiv = np.empty(max(n - 1, 1), dtype=np.int64)
    y = np.empty(n)
    sep = 10.0 * 2.220446049250313e-16 * tnorm
    cstart = 0
    prev = 0.0
    for k in range(m):
        lam = vals[k]
        if k > 0 and lam - vals[k - 1] >= cluster_tol:
            cstart = k
        if k > cstart and lam <= prev + sep:
            lam = prev + sep
        prev = lam
        for i in range(n):
            a[i] = d[i] - lam
        _gttrf(a, e, du2, du, dl, ipiv, pivmin)
        # deterministic start vector
        for i in range(n):
            y[i] = 1.0 + 0.5 * np.sin(0.7548776662466927 * (i + 1) + 0.5698402909980532 * (k + 1))
        converged = False
        extra = 0
        for it in range(max_iter):
            nrm = 0.0
            for i in range(n):
                nrm += y[i] * y[i]
            nrm = np.sqrt(nrm)
            for i in range(n):
                y[i] /= nrm
            _gttrs(a, du2, du, dl, ipiv, y)
            for c in range(cstart, k):
                s = 0.0
                for i in range(n):
                    s += vecs[c, i] * y[i]
                for i in range(n):
                    y[i] -= s * vecs[c, i]
            nrm = 0.0
            for i in range(n):
                nrm += y[i] * y[i]
            nrm = np.sqrt(nrm)
            if nrm == 0.0:
                break
            for i in range(n):
                y[i] /= nrm
            r = _residual(d, e, vals[k], y)
            if r <= res_tol:
                if extra >= 2:
                    converged = True
                    res[k] = r
                    break
                extra += 1
        if not converged:
            return vecs, res, k
        # re-orthogonalize inside the cluster once more (modified Gram-Schmidt)
        for c in range(cstart, k):
            s = 0.0
            for i in range(n):
                s += vecs[c, i] * y[i]
            for i in range(n):
                y[i] -= s * vecs[c, i]
        nrm = 0.0
        for i in range(n):
            nrm += y[i] * y[i]
        nrm = np.sqrt(nrm)
        for i in range(n):
            vecs[k, i] = y[i] / nrm
    return vecs, res, -1


# --- public API ------------------------------------------------------------


def _pivmin(T: SymTridiag) -> float:
    e2max = float(np.max(T.offdiag**2)) if T.n > 1 else 0.0
    return _TINY * max(1.0, e2max)


def sturm_count(T: SymTridiag, threshold: float) -> int:
    """Exact number of eigenvalues of ``T`` that are <= ``threshold``."""
    return int(_sturm(T.diag, T.offdiag**2, float(threshold), _pivmin(T)))


def sturm_counts(T: SymTridiag, thresholds) -> np.ndarray:
    xs = np.ascontiguousarray(thresholds, dtype=float)
    return _sturm_many(T.diag, T.offdiag**2, xs, _pivmin(T))


def near_threshold(T: SymTridiag, threshold: float, tol: Tolerances = Tolerances()) -> bool:
    """True if some eigenvalue lies within ``tol.degeneracy * ||T||`` of threshold."""
    delta = tol.degeneracy * T.norm
    return sturm_count(T, threshold + delta) != sturm_count(T, threshold - delta)


def eigs_below(T: SymTridiag, threshold: float, tol: Tolerances = Tolerances()) -> EigenPairs:
    """All eigenpairs of ``T`` with eigenvalue <= ``threshold``, ascending.

    Vectors are unit-norm, sign-fixed so that the first non-negligible
    component is positive.
    """
    threshold = float(threshold)
    lo, hi = T.gershgorin()
    if not np.isfinite(threshold) or not (lo < threshold < hi):
        raise DomainError(
            f"threshold {threshold:g} not strictly inside the Gershgorin interval ({lo:g}, {hi:g})"
        )
    tnorm = T.norm
    pivmin = _pivmin(T)
    e2 = T.offdiag**2
    m = int(_sturm(T.diag, e2, threshold, pivmin))
    near = near_threshold(T, threshold, tol)
    if m == 0:
        return EigenPairs(np.zeros(0), np.zeros((T.n, 0)), threshold, near, np.zeros(0))

    abstol = max(tol.eigenvalue * tnorm, 4 * _EPS * tnorm)
    vals = _bisect(T.diag, e2, m, lo - abstol, threshold, abstol, pivmin)
    vecs, res, status = _inverse_iteration(
        T.diag,
        T.offdiag,
        vals,
        tol.cluster * tnorm,
        tol.residual * tnorm,
        int(tol.max_inverse_iterations),
        pivmin,
        tnorm,
    )
    if status >= 0:
        raise NumericalError(
            f"inverse iteration did not converge for eigenvalue #{status} "
            f"(lambda={vals[status]:.15g}) within {tol.max_inverse_iterations} iterations"
        )
    vecs = vecs.T
    vals = _rayleigh_polish(T, vals, vecs, abstol, threshold)
    _fix_signs(vecs)
    return EigenPairs(vals, vecs, threshold, near, res)


def _rayleigh_polish(T, vals, vecs, abstol, threshold):
    """Rayleigh quotients of the converged vectors (error ~ residual^2).

    A quotient is kept only if it stays within the bisection bracket and
    below the threshold, so counts and ordering are unchanged.
    """
    tv = T.matvec(vecs)
    rq = np.einsum("ij,ij->j", vecs, tv) / np.einsum("ij,ij->j", vecs, vecs)
    ok = (np.abs(rq - vals) <= 2 * abstol) & (rq <= threshold)
    out = np.where(ok, rq, vals)
    if np.any(np.diff(out) < 0):
        return vals
    return out


def _fix_signs(vecs: np.ndarray) -> None:
    if vecs.size == 0:
        return
    big = np.abs(vecs) > 1e-8 * np.max(np.abs(vecs), axis=0)
    first = np.argmax(big, axis=0)
    s = np.sign(vecs[first, np.arange(vecs.shape[1])])
    s[s == 0] = 1.0
    vecs *= s
