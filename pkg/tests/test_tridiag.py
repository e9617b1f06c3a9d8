import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoclab.errors import DomainError
from aoclab.model import Tolerances
from aoclab.tridiag import SymTridiag, eigs_below, near_threshold, sturm_count, sturm_counts


def laplacian(n, h=1.0):
    return SymTridiag(np.full(n, 2.0 / h**2), np.full(n - 1, -1.0 / h**2))


def random_tridiag(rng, n):
    return SymTridiag(rng.normal(size=n) * 3, rng.normal(size=n - 1))


def test_free_laplacian_closed_form():
    n, h = 200, 0.05
    T = laplacian(n, h)
    thr = 500.0
    pairs = eigs_below(T, thr)
    j = np.arange(1, n + 1)
    exact = (4 / h**2) * np.sin(j * np.pi / (2 * (n + 1))) ** 2
    exact = exact[exact <= thr]
    assert len(pairs) == exact.size
    assert np.max(np.abs(pairs.values - exact)) <= 1e-11 * T.norm
    # eigenvectors are sine modes
    x = np.arange(1, n + 1)
    for k in (0, 3, len(pairs) - 1):
        mode = np.sin((k + 1) * np.pi * x / (n + 1))
        mode /= np.linalg.norm(mode)
        assert abs(abs(mode @ pairs.vectors[:, k]) - 1) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_matches_dense_eigh(seed):
    rng = np.random.default_rng(seed)
    n = 150
    T = random_tridiag(rng, n)
    w, V = np.linalg.eigh(T.to_dense())
    thr = float(np.median(w)) + 1e-3
    pairs = eigs_below(T, thr)
    m = int(np.sum(w <= thr))
    assert len(pairs) == m
    assert np.allclose(pairs.values, w[:m], atol=1e-10 * T.norm, rtol=0)
    overlap = np.abs(np.sum(pairs.vectors * V[:, :m], axis=0))
    assert np.all(np.abs(overlap - 1) < 1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_residual_and_orthogonality(seed):
    rng = np.random.default_rng(100 + seed)
    T = random_tridiag(rng, 400)
    lo, hi = T.gershgorin()
    pairs = eigs_below(T, 0.5 * (lo + hi))
    V = pairs.vectors
    R = T.matvec(V) - V * pairs.values
    assert np.max(np.linalg.norm(R, axis=0)) <= 1e-10 * T.norm
    assert np.max(np.abs(V.T @ V - np.eye(V.shape[1]))) <= 1e-10


def test_clustered_eigenvalues_stay_orthogonal():
    # two decoupled copies of the same block: every eigenvalue is exactly double
    b = laplacian(60)
    d = np.concatenate([b.diag, b.diag])
    e = np.concatenate([b.offdiag, [0.0], b.offdiag])
    T = SymTridiag(d, e)
    pairs = eigs_below(T, 1.0)
    assert len(pairs) % 2 == 0
    V = pairs.vectors
    assert np.max(np.abs(V.T @ V - np.eye(V.shape[1]))) <= 1e-10
    assert np.allclose(pairs.values[0::2], pairs.values[1::2], atol=1e-12)


def test_sturm_count_matches_dense():
    rng = np.random.default_rng(7)
    T = random_tridiag(rng, 300)
    w = np.linalg.eigvalsh(T.to_dense())
    xs = np.linspace(w[0] - 1, w[-1] + 1, 37)
    got = sturm_counts(T, xs)
    want = np.searchsorted(w, xs, side="right")
    # away from eigenvalues the counts are exact
    safe = np.min(np.abs(xs[:, None] - w[None, :]), axis=1) > 1e-9
    assert np.array_equal(np.asarray(got)[safe], want[safe])
    assert sturm_count(T, w[-1] + 1) == T.n


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=60), st.integers(0, 10_000), st.floats(-5, 5))
def test_shift_invariance(n, seed, c):
    rng = np.random.default_rng(seed)
    T = random_tridiag(rng, n)
    lo, hi = T.gershgorin()
    thr = lo + 0.6 * (hi - lo)
    a = eigs_below(T, thr)
    b = eigs_below(T.shifted(c), thr + c)
    assert len(a) == len(b)
    assert np.allclose(a.values + c, b.values, atol=1e-9 * max(T.norm, T.shifted(c).norm))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=3, max_value=50), st.integers(0, 10_000))
def test_interlacing_with_leading_submatrix(n, seed):
    rng = np.random.default_rng(seed)
    T = random_tridiag(rng, n)
    S = SymTridiag(T.diag[:-1], T.offdiag[:-1])
    w = np.linalg.eigvalsh(T.to_dense())
    for x in np.linspace(w[0] - 0.5, w[-1] + 0.5, 11):
        assert 0 <= sturm_count(T, x) - sturm_count(S, x) <= 1


def test_threshold_outside_gershgorin_raises():
    T = laplacian(20)
    lo, hi = T.gershgorin()
    with pytest.raises(DomainError):
        eigs_below(T, hi + 1)
    with pytest.raises(DomainError):
        eigs_below(T, lo)


def test_near_threshold_flag():
    T = laplacian(50)
    w = np.linalg.eigvalsh(T.to_dense())
    tol = Tolerances()
    assert near_threshold(T, w[5], tol)
    assert not near_threshold(T, 0.5 * (w[5] + w[6]), tol)
    assert eigs_below(T, w[5] + 1e-14).near_threshold


def test_no_eigenvalues_below():
    T = SymTridiag(np.full(10, 5.0), np.full(9, 0.1))
    pairs = eigs_below(T, 4.805)  # lowest eigenvalue is 5 + 0.2 cos(10 pi/11) > 4.808
    assert len(pairs) == 0 and pairs.vectors.shape == (10, 0)


def test_one_by_one_and_arrays_read_only():
    T = SymTridiag(np.array([3.0]), np.zeros(0))
    assert sturm_count(T, 3.5) == 1 and sturm_count(T, 2.5) == 0
    with pytest.raises(ValueError):
        T.diag[0] = 1.0
    with pytest.raises(ValueError):
        SymTridiag(np.ones(3), np.ones(3))
