import math

import numpy as np
import pytest

from aoclab.spectra import (
    ONE_D,
    ChannelKey,
    Operator,
    assemble_operator,
    channel_keys,
    compute_spectra,
    particle_number,
    spectrum_below,
)

from conftest import make_config


def test_particle_number_weyl_law_1d():
    cfg = make_config()
    for E in (0.5, 2.0, 5.0):
        N = particle_number(cfg, 100.0, E).N
        assert abs(N - 100.0 * math.sqrt(E) / math.pi) <= 2


def test_perturbed_count_never_exceeds_unperturbed():
    cfg = make_config()
    for L in (50.0, 100.0, 200.0):
        assert particle_number(cfg, L, 2.0, Operator.H_PRIME).N <= particle_number(cfg, L, 2.0).N


def test_free_box_eigenvalues_converge_at_second_order():
    L = 3.0
    errs = []
    for h in (0.05, 0.025, 0.0125):
        cfg = make_config(v=0.0, h=h, E=(20.0,), Ls=(L,))
        vals = spectrum_below(cfg, Operator.H, ONE_D, L, 20.0).values
        exact = (np.pi * np.arange(1, vals.size + 1) / L) ** 2
        errs.append(np.max(np.abs(vals - exact)))
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 3.5 < r1 < 4.5 and 3.5 < r2 < 4.5


def test_radial_s_wave_is_half_box():
    cfg = make_config(v=0.0, E=(1.0,), Ls=(20.0,), radial=True)
    s = spectrum_below(cfg, Operator.H, ChannelKey(0), 20.0, 1.0)
    n = cfg.grid.n_points(cfg.geometry, 20.0)
    j = np.arange(1, s.values.size + 1)
    exact = (4 / 0.05**2) * np.sin(j * np.pi / (2 * (n + 1))) ** 2
    assert np.allclose(s.values, exact, atol=1e-10)


def test_vectors_are_grid_normalized(cfg1d):
    s = spectrum_below(cfg1d, Operator.H_PRIME, ONE_D, 50.0, 2.0)
    assert np.allclose(cfg1d.grid.h * np.sum(s.vectors**2, axis=0), 1.0, atol=1e-12)


def test_3d_particle_number_matches_dense_merge(cfg3d):
    L, E = 20.0, 1.0
    total = 0
    ell = 0
    while True:
        T = assemble_operator(cfg3d, Operator.H, ChannelKey(ell), L).to_dense()
        c = int(np.sum(np.linalg.eigvalsh(T) <= E))
        if c == 0:
            break
        total += (2 * ell + 1) * c
        ell += 1
    pc = particle_number(cfg3d, L, E)
    assert pc.N == total
    assert max(k.ell for k in pc.by_channel) == ell - 1


def test_channel_set_is_complete(cfg3d):
    L = 30.0
    thr = cfg3d.working_threshold(L)
    keys = channel_keys(cfg3d, L, thr)
    nxt = ChannelKey(keys[-1].ell + 1)
    w = np.linalg.eigvalsh(assemble_operator(cfg3d, Operator.H, nxt, L).to_dense())
    assert w[0] > thr
    # higher channels are emptier: lowest level grows with l
    lows = [np.linalg.eigvalsh(assemble_operator(cfg3d, Operator.H, k, L).to_dense())[0] for k in keys]
    assert np.all(np.diff(lows) > 0)


def test_compute_spectra_windows(cfg1d):
    sp = compute_spectra(cfg1d, 50.0)
    ch = sp.channels[0]
    assert sp.threshold > cfg1d.E_max
    assert np.all(ch.H.values <= sp.threshold) and np.all(ch.H_prime.values <= sp.threshold)
    assert ch.H.values.size == particle_number(cfg1d, 50.0, sp.threshold).N
    assert sp.V.shape == sp.coords.shape and sp.V.max() == 1.0


def test_zero_potential_shares_spectrum():
    cfg = make_config(v=0.0)
    sp = compute_spectra(cfg, 50.0)
    assert sp.channels[0].H_prime is sp.channels[0].H


def test_operator_uses_centrifugal_term(cfg3d):
    T0 = assemble_operator(cfg3d, Operator.H, ChannelKey(0), 20.0)
    T2 = assemble_operator(cfg3d, Operator.H, ChannelKey(2), 20.0)
    r = cfg3d.grid.coordinates(cfg3d.geometry, 20.0)
    assert np.allclose(T2.diag - T0.diag, 6.0 / r**2)


@pytest.mark.parametrize("which", [Operator.H, Operator.H_PRIME])
def test_spectrum_matches_dense(cfg1d, which):
    L = 10.0
    s = spectrum_below(cfg1d, which, ONE_D, L, 5.0)
    w = np.linalg.eigvalsh(assemble_operator(cfg1d, which, ONE_D, L).to_dense())
    assert np.allclose(s.values, w[w <= 5.0], atol=1e-10)
