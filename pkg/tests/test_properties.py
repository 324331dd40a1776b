"""Property-based invariants (hypothesis)."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import wgarray as w


def rot2(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def tmsv_sigma(r):
    pm = w.PairMoments(np.sinh(r) ** 2, np.sinh(r) ** 2, 0.0,
                       np.sinh(r) * np.cosh(r), 0.0, 0.0)
    return w.covariance_from_moments(pm)


# determinant arithmetic holds 1e-9 only for moderate squeezing; stronger
# states lose precision to cancellation in D - sqrt(D^2 - 4 det sigma)
@given(r=st.floats(0.01, 2.0))
def test_tmsv_logneg_closed_form(r):
    assert w.log_negativity(tmsv_sigma(r)) == pytest.approx(
        2.0 * r / np.log(2.0), rel=1e-9)


@given(r1=st.floats(0.01, 2.0), r2=st.floats(0.01, 2.0))
def test_tmsv_logneg_monotone_in_r(r1, r2):
    if abs(r1 - r2) < 1e-6:
        return
    lo, hi = sorted((r1, r2))
    assert w.log_negativity(tmsv_sigma(lo)) < w.log_negativity(tmsv_sigma(hi))


# r is kept away from the separability boundary, where E_N has a square-root
# kink and float roundoff alone moves it by ~sqrt(eps)
@given(r=st.floats(0.15, 1.5), ta=st.floats(0.0, 2 * np.pi),
       tb=st.floats(0.0, 2 * np.pi), nbar=st.floats(0.0, 2.0))
def test_logneg_invariant_under_local_rotations(r, ta, tb, nbar):
    pm = w.PairMoments(np.sinh(r) ** 2 + nbar, np.sinh(r) ** 2, 0.1 * nbar,
                       np.sinh(r) * np.cosh(r), 0.0, 0.0)
    sigma = w.covariance_from_moments(pm, check=False)
    rot = np.block([[rot2(ta), np.zeros((2, 2))],
                    [np.zeros((2, 2)), rot2(tb)]])
    rotated = rot @ sigma @ rot.T
    assert w.log_negativity(rotated) == pytest.approx(
        w.log_negativity(sigma), abs=1e-10)


@given(k=st.integers(1, 40), x=st.floats(0.05, 500.0))
@settings(max_examples=60, deadline=None)
def test_bessel_recurrence_property(k, x):
    lhs = w.bessel_j(k - 1, x) + w.bessel_j(k + 1, x)
    rhs = (2.0 * k / x) * w.bessel_j(k, x)
    assert abs(lhs - rhs) < 1e-9


@given(gamma=st.floats(1e-4, 0.5), dz=st.floats(1e-3, 0.05),
       seed=st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_phase_path_starts_at_zero_and_is_reproducible(gamma, dz, seed):
    a = w.sample_phase_path(gamma, dz, 20 * dz, seed)
    b = w.sample_phase_path(gamma, dz, 20 * dz, seed)
    assert a.phi[0] == 0.0
    np.testing.assert_array_equal(a.phi, b.phi)


@given(g=st.floats(0.0, 2.0), gamma=st.floats(0.0, 0.05),
       z=st.floats(0.2, 2.0))
@settings(max_examples=12, deadline=None)
def test_evolution_preserves_structure(g, gamma, z):
    p = w.SimParams(n_sites=9, c_s=1.0, g=g, gamma=gamma, dz=5e-3)
    s = w.evolve(w.initial_vacuum(p), p, z)
    num, anom = s.num, s.anom
    assert np.max(np.abs(num - num.conj().T)) < 1e-9
    assert np.max(np.abs(anom - anom.T)) < 1e-9
    for k in range(5):
        assert np.max(np.abs(s.data[k] - s.data[k][::-1, ::-1])) < 1e-10
    assert np.min(np.diagonal(num).real) >= -1e-12


@given(g=st.floats(0.2, 1.8), z=st.floats(0.3, 1.5))
@settings(max_examples=10, deadline=None)
def test_map_entries_match_scalar_op(g, z):
    p = w.SimParams(n_sites=9, c_s=1.0, g=g, dz=5e-3)
    s = w.evolve(w.initial_vacuum(p), p, z)
    emap = w.entanglement_map(s)
    for m, n in ((0, 1), (1, -1), (-2, 3)):
        assert emap.value(m, n) == pytest.approx(
            w.pair_log_negativity(s, m, n), abs=1e-10)
