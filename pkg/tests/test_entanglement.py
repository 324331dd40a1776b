import numpy as np
import pytest

import wgarray as w
from wgarray.entanglement import _check_physical


def logneg_partial_transpose(sigma):
    """Independent route: flip p_b, then symplectic spectrum of i Omega sigma."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    st = flip @ sigma @ flip
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    nus = np.sort(np.abs(np.linalg.eigvals(1j * omega @ st)))[::2]
    return max(0.0, -np.log2(2.0 * nus[0]))


def random_physical_sigma(rng, nu_max=3.0, squeeze=0.5):
    """sigma = S diag(nu1, nu1, nu2, nu2) S^T with S = expm(Omega H) symplectic.

    The squeeze scale keeps E_N <= ~4 (the regime this package produces);
    far stronger squeezing degrades the determinant route by cancellation.
    """
    from scipy.linalg import expm

    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    h = rng.normal(scale=squeeze / 2, size=(4, 4))
    s = expm(omega @ (h + h.T))
    nus = 0.5 + rng.uniform(0.0, nu_max - 0.5, size=2)
    d = np.diag(np.repeat(nus, 2))
    return s @ d @ s.T


def tmsv_sigma(r):
    pm = w.PairMoments(np.sinh(r) ** 2, np.sinh(r) ** 2, 0.0,
                       np.sinh(r) * np.cosh(r), 0.0, 0.0)
    return w.covariance_from_moments(pm)


def test_vacuum_covariance():
    pm = w.PairMoments(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    sigma = w.covariance_from_moments(pm)
    np.testing.assert_allclose(sigma, 0.5 * np.eye(4))
    inv = w.symplectic_invariants(sigma)
    assert (inv.a_det, inv.b_det, inv.c_det) == (0.25, 0.25, 0.0)
    assert inv.sigma_det == pytest.approx(1.0 / 16)
    assert w.log_negativity(sigma) == 0.0


def test_two_mode_squeezed_covariance():
    r = 1.0
    sigma = tmsv_sigma(r)
    c2, s2 = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
    np.testing.assert_allclose(sigma[:2, :2], c2 * np.eye(2), atol=1e-14)
    np.testing.assert_allclose(sigma[2:, 2:], c2 * np.eye(2), atol=1e-14)
    np.testing.assert_allclose(sigma[:2, 2:], np.diag([s2, -s2]), atol=1e-14)
    # closed form E_N = 2r / ln 2, cross-checked by partial transpose
    assert w.log_negativity(sigma) == pytest.approx(2 * r / np.log(2), rel=1e-12)
    assert w.log_negativity(sigma) == pytest.approx(
        logneg_partial_transpose(sigma), rel=1e-10)


def test_single_mode_thermal_block():
    nbar = 0.8
    pm = w.PairMoments(nbar, 0.0, 0.0, 0.0, 0.0, 0.0)
    sigma = w.covariance_from_moments(pm)
    np.testing.assert_allclose(sigma[:2, :2], (nbar + 0.5) * np.eye(2))
    np.testing.assert_allclose(sigma[:2, 2:], np.zeros((2, 2)))
    assert w.log_negativity(sigma) == 0.0


def test_product_thermal_separable():
    pm = w.PairMoments(1.3, 0.4, 0.0, 0.0, 0.0, 0.0)
    assert w.log_negativity(w.covariance_from_moments(pm)) == 0.0


def test_logneg_brute_force_agreement():
    rng = np.random.default_rng(42)
    for _ in range(300):
        sigma = random_physical_sigma(rng)
        assert w.log_negativity(sigma) == pytest.approx(
            logneg_partial_transpose(sigma), abs=1e-9)


def test_unphysical_covariance_rejected():
    pm = w.PairMoments(0.0, 0.0, 0.0, 0.9, 0.0, 0.0)  # |<ab>| too large for vacuum
    with pytest.raises(w.InvariantViolationError):
        w.covariance_from_moments(pm)


def test_pair_moments_extraction():
    p = w.SimParams(n_sites=3, c_s=0.0, g=1.0, dz=1e-3)
    s = w.evolve(w.initial_vacuum(p), p, 1.0)
    pm = w.pair_moments(s, 0, 1)
    assert pm.occ_a == pytest.approx(np.sinh(1.0) ** 2, rel=1e-6)
    assert pm.occ_b == 0.0
    assert pm.cross_num == 0.0 and pm.cross_anom == 0.0
    assert abs(pm.self_anom_a) == pytest.approx(np.sinh(1.0) * np.cosh(1.0), rel=1e-6)
    with pytest.raises(ValueError):
        w.pair_moments(s, 0, 0)
    with pytest.raises(IndexError):
        w.pair_moments(s, 0, 2)

    pg = w.SimParams(n_sites=3, c_s=0.0, g=1.0, dz=1e-3, case=w.Case.GENERAL)
    sg = w.evolve(w.initial_vacuum(pg), pg, 1.0)
    pmg = w.pair_moments(sg, 0, 0)  # same-guide signal-idler pair is valid
    assert pmg.occ_a == pytest.approx(np.sinh(1.0) ** 2, rel=1e-6)
    assert abs(pmg.cross_anom) == pytest.approx(np.sinh(1.0) * np.cosh(1.0), rel=1e-6)
    assert pmg.self_anom_a == 0.0 and pmg.self_anom_b == 0.0


def test_general_central_pair_is_tmsv():
    # c_s = 0 general case is exactly a two-mode squeezed vacuum: E_N = 2gz/ln2
    p = w.SimParams(n_sites=3, c_s=0.0, g=1.0, dz=1e-3, case=w.Case.GENERAL)
    s = w.evolve(w.initial_vacuum(p), p, 1.0)
    assert w.pair_log_negativity(s, 0, 0) == pytest.approx(2 / np.log(2), rel=1e-6)


def test_vacuum_map_is_zero():
    p = w.SimParams(n_sites=9, c_s=1.0, g=0.0, dz=0.01)
    s = w.evolve(w.initial_vacuum(p), p, 1.0)
    emap = w.entanglement_map(s)
    assert np.all(emap.values == 0.0)


def test_map_matches_scalar_route():
    p = w.SimParams(n_sites=21, c_s=1.0, g=1.0, dz=5e-3)
    s = w.evolve(w.initial_vacuum(p), p, 3.0)
    emap = w.entanglement_map(s)
    rng = np.random.default_rng(3)
    mid = p.center
    for _ in range(40):
        m, n = rng.integers(-mid, mid + 1, size=2)
        if m == n:
            continue
        assert emap.value(m, n) == pytest.approx(
            w.pair_log_negativity(s, m, n), abs=1e-10)


def test_map_symmetries():
    p = w.SimParams(n_sites=21, c_s=1.0, g=1.0, dz=5e-3)
    s = w.evolve(w.initial_vacuum(p), p, 3.0)
    v = w.entanglement_map(s).values
    assert np.all(v >= 0.0)
    assert np.max(np.abs(v - v.T)) < 1e-8
    assert np.max(np.abs(v - v[::-1, ::-1])) < 1e-8
    assert np.all(np.diagonal(v) == 0.0)

    pg = w.SimParams(n_sites=21, c_s=1.0, g=1.0, dz=5e-3, case=w.Case.GENERAL)
    sg = w.evolve(w.initial_vacuum(pg), pg, 3.0)
    vg = w.entanglement_map(sg).values
    assert np.all(vg >= 0.0)
    assert np.max(np.abs(vg - vg[::-1, ::-1])) < 1e-8
    assert vg[p.center, p.center] > 0.0  # same-guide signal-idler pair retained


def test_full_covariance_purity_vacuum():
    p = w.SimParams(n_sites=9, c_s=1.0, g=0.0, dz=0.01)
    s = w.initial_vacuum(p)
    assert w.global_purity_check(s) == pytest.approx(0.0, abs=1e-12)


def test_purity_preserved_under_coherent_pump():
    p = w.SimParams(n_sites=21, c_s=1.0, g=1.0, dz=2e-3)
    s = w.evolve(w.initial_vacuum(p), p, 3.0)
    assert w.global_purity_check(s) < 1e-8

    pg = w.SimParams(n_sites=11, c_s=1.0, g=1.0, dz=2e-3, case=w.Case.GENERAL)
    sg = w.evolve(w.initial_vacuum(pg), pg, 2.0)
    assert w.global_purity_check(sg) < 1e-8


def test_purity_lost_under_phase_noise():
    devs = []
    for z in (1.0, 3.0):
        p = w.SimParams(n_sites=15, c_s=1.0, g=1.0, gamma=0.05, dz=2e-3)
        s = w.evolve(w.initial_vacuum(p), p, z)
        devs.append(w.global_purity_check(s))
    assert devs[0] > 1e-6
    assert devs[1] > devs[0]


def test_reduced_single_mode_blocks_physical():
    p = w.SimParams(n_sites=15, c_s=1.0, g=1.2, gamma=0.01, dz=5e-3)
    s = w.evolve(w.initial_vacuum(p), p, 3.0)
    for m in range(-7, 8):
        for n in range(-7, 8):
            if m == n:
                continue
            sig = w.covariance_from_moments(w.pair_moments(s, m, n), check=False)
            inv = w.symplectic_invariants(sig)
            assert inv.a_det >= 0.25 - 1e-9
            assert inv.b_det >= 0.25 - 1e-9


def test_stationary_zero_gain():
    p = w.SimParams(n_sites=9, c_s=1.0, g=0.0, dz=0.01)
    res = w.stationary_logneg(p, pair=(1, -1), z_probe=1.0, z_max=5.0)
    assert res.converged
    assert res.value == 0.0


def test_stationary_requires_coherent_pump():
    p = w.SimParams(n_sites=9, c_s=1.0, g=1.0, gamma=0.01, dz=0.01)
    with pytest.raises(ValueError):
        w.stationary_logneg(p)


def test_survival_gamma_zero_unbounded():
    p = w.SimParams(n_sites=9, c_s=1.0, g=1.0, gamma=0.0, dz=0.01)
    res = w.survival_distance(p, pair=(1, -1), eps=1e-4)
    assert res.status == "unbounded"
    assert res.z_vanish == np.inf


def test_survival_detects_decay():
    # strong noise kills the pair entanglement quickly
    p = w.SimParams(n_sites=15, c_s=1.0, g=1.0, gamma=0.02, dz=0.01)
    res = w.survival_distance(p, pair=(1, -1), eps=1e-3, z_max=60.0, sample_dz=0.1)
    assert res.status == "vanished"
    assert 1.0 < res.z_vanish < 60.0
    assert res.peak > 0.3
    # a looser detection threshold vanishes no later
    res_hi = w.survival_distance(p, pair=(1, -1), eps=1e-2, z_max=60.0,
                                 sample_dz=0.1)
    assert res_hi.z_vanish <= res.z_vanish + 1e-9


def test_check_physical_catches_asymmetry():
    sigma = 0.5 * np.eye(4)
    sigma[0, 1] = 0.3
    with pytest.raises(w.InvariantViolationError):
        _check_physical(sigma)
