"""Averaged second-moment dynamics of the pumped waveguide lattice.

The quantum state of the lattice is Gaussian with zero mean everywhere, so
it is fully described by quadratic moments.  With a phase-diffusing pump
the moments that close under evolution come in two families:

Degenerate case (one mode b_n per guide), five N x N matrices::

    num        <b+_m b_n>              number / coherence matrix
    anom_ph    <b_m b_n  e^{-i phi}>   anomalous pairs, pump-phase frame
    anom       <b_m b_n>               bare anomalous pairs
    num_ph     <b+_m b_n  e^{+i phi}>  number matrix, pump-phase frame
    canom_ph2  <b+_m b+_n e^{+2i phi}> conjugate pairs, doubly dressed

General case (signal b_n and idler c_n per guide), seven matrices::

    num_s      <b+_m b_n>      num_i      <c+_m c_n>
    anom_ph    <b_m c_n e^{-i phi}>       anom      <b_m c_n>
    num_s_ph   <b+_m b_n e^{+i phi}>      num_i_ph  <c+_m c_n e^{+i phi}>
    canom_ph2  <b+_m c+_n e^{+2i phi}>

All remaining quadratic moments (<b_m b_n>, <c_m c_n>, <b+_m c_n>, ...)
obey homogeneous equations and stay identically zero from vacuum input;
analyzers treat them as exact zeros.

Ensemble averaging over the Wiener pump phase closes the equations: a
moment dressed with e^{ik phi} acquires a damping -k^2 gamma, and the bare
commutator source terms pick up the factor <e^{i phi(z)}> = e^{-gamma z}.
The dynamics is a linear ODE system integrated with fixed-step classical
RK4; the explicit z dependence enters only through that source factor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import exp

import numpy as np

from .params import Case, InvariantViolationError, NonFiniteError, SimParams

__all__ = [
    "DegenerateMoments",
    "GeneralMoments",
    "initial_vacuum",
    "rhs_degenerate",
    "rhs_general",
    "rk4_step",
    "evolve",
    "photon_number_profile",
]

DEG_FIELDS = ("num", "anom_ph", "anom", "num_ph", "canom_ph2")
GEN_FIELDS = ("num_s", "num_i", "anom_ph", "anom", "num_s_ph", "num_i_ph", "canom_ph2")


@dataclass
class _MomentState:
    """Stack of moment matrices at a fixed propagation distance.

    ``data`` has shape (n_fields, N, N) complex; named views are exposed
    as properties.  Treat instances as immutable snapshots; use ``copy()``
    to obtain a writable clone.
    """

    data: np.ndarray
    z: float

    @property
    def n_sites(self) -> int:
        return self.data.shape[-1]

    @property
    def center(self) -> int:
        return self.n_sites // 2

    def copy(self):
        return replace(self, data=self.data.copy(), z=self.z)

    def field(self, name: str) -> np.ndarray:
        return self.data[self._FIELDS.index(name)]


class DegenerateMoments(_MomentState):
    _FIELDS = DEG_FIELDS

    @property
    def num(self):
        return self.data[0]

    @property
    def anom_ph(self):
        return self.data[1]

    @property
    def anom(self):
        return self.data[2]

    @property
    def num_ph(self):
        return self.data[3]

    @property
    def canom_ph2(self):
        return self.data[4]


class GeneralMoments(_MomentState):
    _FIELDS = GEN_FIELDS

    @property
    def num_s(self):
        return self.data[0]

    @property
    def num_i(self):
        return self.data[1]

    @property
    def anom_ph(self):
        return self.data[2]

    @property
    def anom(self):
        return self.data[3]

    @property
    def num_s_ph(self):
        return self.data[4]

    @property
    def num_i_ph(self):
        return self.data[5]

    @property
    def canom_ph2(self):
        return self.data[6]


def initial_vacuum(params: SimParams):
    """Vacuum input state: every moment matrix is identically zero at z=0.

    Normal-ordered and anomalous vacuum expectations vanish, and the phase
    factors have unit mean at the input, so nothing survives.
    """
    n = params.n_sites
    if params.case is Case.DEGENERATE:
        return DegenerateMoments(np.zeros((5, n, n), dtype=complex), 0.0)
    return GeneralMoments(np.zeros((7, n, n), dtype=complex), 0.0)


def _nsum_rows(a: np.ndarray) -> np.ndarray:
    """a[m-1, n] + a[m+1, n] with open (zero) boundaries."""
    out = np.empty_like(a)
    out[0] = a[1]
    out[-1] = a[-2]
    np.add(a[:-2], a[2:], out=out[1:-1])
    return out


def _nsum_cols(a: np.ndarray) -> np.ndarray:
    """a[m, n-1] + a[m, n+1] with open (zero) boundaries."""
    out = np.empty_like(a)
    out[:, 0] = a[:, 1]
    out[:, -1] = a[:, -2]
    np.add(a[:, :-2], a[:, 2:], out=out[:, 1:-1])
    return out


def _check_dims(state, params: SimParams, expected_cls):
    if not isinstance(state, expected_cls):
        raise TypeError(
            f"expected {expected_cls.__name__}, got {type(state).__name__}"
        )
    if state.n_sites != params.n_sites:
        raise ValueError(
            f"state has {state.n_sites} sites but params expect {params.n_sites}"
        )


def _rhs_deg(y: np.ndarray, z: float, p: SimParams) -> np.ndarray:
    num, anom_ph, anom, num_ph, canom_ph2 = y
    ics = 1j * p.c_s
    ig = 1j * p.g
    gam = p.gamma
    M = y.shape[-1] // 2
    src = exp(-gam * z)

    out = np.empty_like(y)

    # d num = i c (cols - rows) num + i g [conj(anom_ph) on col 0 - anom_ph on row 0]
    d = out[0]
    np.subtract(_nsum_cols(num), _nsum_rows(num), out=d)
    d *= ics
    d[:, M] += ig * np.conj(anom_ph[M, :])
    d[M, :] -= ig * anom_ph[M, :]

    # d anom_ph = -gamma anom_ph + i c (cols + rows) anom_ph
    #             + i g [num row 0 onto row and col] + i g at (0, 0)
    d = out[1]
    np.add(_nsum_cols(anom_ph), _nsum_rows(anom_ph), out=d)
    d *= ics
    d -= gam * anom_ph
    d[M, :] += ig * num[M, :]
    d[:, M] += ig * num[M, :]
    d[M, M] += ig

    # d anom = i c (cols + rows) anom + i g [num_ph row 0] + i g e^{-gamma z}
    d = out[2]
    np.add(_nsum_cols(anom), _nsum_rows(anom), out=d)
    d *= ics
    d[M, :] += ig * num_ph[M, :]
    d[:, M] += ig * num_ph[M, :]
    d[M, M] += ig * src

    # d num_ph = -gamma num_ph + i c (cols - rows) num_ph
    #            + i g canom_ph2 col 0 - i g anom row 0
    d = out[3]
    np.subtract(_nsum_cols(num_ph), _nsum_rows(num_ph), out=d)
    d *= ics
    d -= gam * num_ph
    d[:, M] += ig * canom_ph2[:, M]
    d[M, :] -= ig * anom[M, :]

    # d canom_ph2 = -4 gamma canom_ph2 - i c (cols + rows) canom_ph2
    #               - i g [num_ph col 0] - i g e^{-gamma z}
    d = out[4]
    np.add(_nsum_cols(canom_ph2), _nsum_rows(canom_ph2), out=d)
    d *= -ics
    d -= 4.0 * gam * canom_ph2
    d[M, :] -= ig * num_ph[:, M]
    d[:, M] -= ig * num_ph[:, M]
    d[M, M] -= ig * src

    return out


def _rhs_gen(y: np.ndarray, z: float, p: SimParams) -> np.ndarray:
    num_s, num_i, anom_ph, anom, num_s_ph, num_i_ph, canom_ph2 = y
    ics = 1j * p.c_s
    ig = 1j * p.g
    gam = p.gamma
    M = y.shape[-1] // 2
    src = exp(-gam * z)

    out = np.empty_like(y)

    d = out[0]
    np.subtract(_nsum_cols(num_s), _nsum_rows(num_s), out=d)
    d *= ics
    d[:, M] += ig * np.conj(anom_ph[:, M])
    d[M, :] -= ig * anom_ph[:, M]

    d = out[1]
    np.subtract(_nsum_cols(num_i), _nsum_rows(num_i), out=d)
    d *= ics
    d[:, M] += ig * np.conj(anom_ph[M, :])
    d[M, :] -= ig * anom_ph[M, :]

    d = out[2]
    np.add(_nsum_cols(anom_ph), _nsum_rows(anom_ph), out=d)
    d *= ics
    d -= gam * anom_ph
    d[M, :] += ig * num_i[M, :]
    d[:, M] += ig * num_s[M, :]
    d[M, M] += ig

    d = out[3]
    np.add(_nsum_cols(anom), _nsum_rows(anom), out=d)
    d *= ics
    d[M, :] += ig * num_i_ph[M, :]
    d[:, M] += ig * num_s_ph[M, :]
    d[M, M] += ig * src

    d = out[4]
    np.subtract(_nsum_cols(num_s_ph), _nsum_rows(num_s_ph), out=d)
    d *= ics
    d -= gam * num_s_ph
    d[:, M] += ig * canom_ph2[:, M]
    d[M, :] -= ig * anom[:, M]

    d = out[5]
    np.subtract(_nsum_cols(num_i_ph), _nsum_rows(num_i_ph), out=d)
    d *= ics
    d -= gam * num_i_ph
    d[:, M] += ig * canom_ph2[M, :]
    d[M, :] -= ig * anom[M, :]

    d = out[6]
    np.add(_nsum_cols(canom_ph2), _nsum_rows(canom_ph2), out=d)
    d *= -ics
    d -= 4.0 * gam * canom_ph2
    d[:, M] -= ig * num_s_ph[:, M]
    d[M, :] -= ig * num_i_ph[:, M]
    d[M, M] -= ig * src

    return out


def rhs_degenerate(state: DegenerateMoments, params: SimParams) -> DegenerateMoments:
    """Right-hand side of the degenerate moment system at the state's z."""
    _check_dims(state, params, DegenerateMoments)
    return DegenerateMoments(_rhs_deg(state.data, state.z, params), state.z)


def rhs_general(state: GeneralMoments, params: SimParams) -> GeneralMoments:
    """Right-hand side of the general (signal/idler) moment system."""
    _check_dims(state, params, GeneralMoments)
    return GeneralMoments(_rhs_gen(state.data, state.z, params), state.z)


def _rhs_for(state):
    if isinstance(state, DegenerateMoments):
        return _rhs_deg
    if isinstance(state, GeneralMoments):
        return _rhs_gen
    raise TypeError(f"unknown state type {type(state).__name__}")


def rk4_step(state, params: SimParams):
    """One classical RK4 step of size params.dz.

    The source terms carry an explicit e^{-gamma z} factor, so the stage
    evaluations use the correct intermediate z values.
    """
    if state.n_sites != params.n_sites:
        raise ValueError("state/params lattice size mismatch")
    rhs = _rhs_for(state)
    h = params.dz
    y, z = state.data, state.z
    k1 = rhs(y, z, params)
    k2 = rhs(y + (0.5 * h) * k1, z + 0.5 * h, params)
    k3 = rhs(y + (0.5 * h) * k2, z + 0.5 * h, params)
    k4 = rhs(y + h * k3, z + h, params)
    k2 += k3
    k1 += k4
    k1 += 2.0 * k2
    data = y + (h / 6.0) * k1
    return replace(state, data=data, z=z + h)


def evolve(state, params: SimParams, z_target: float, observer=None,
           sample_dz: float | None = None, check_every: int = 200):
    """Integrate the moment system from state.z to z_target.

    The interval is rounded to a whole number of RK4 steps.  If an
    ``observer`` is given it is called as ``observer(z, state)`` every
    ``sample_dz`` of propagation (rounded to whole steps; default every
    step).  Observed states share the integrator's buffers and are marked
    read-only; call ``state.copy()`` to retain one.

    Raises
    ------
    NonFiniteError
        If any moment matrix stops being finite (step too large for the
        configured gain).
    """
    if state.n_sites != params.n_sites:
        raise ValueError("state/params lattice size mismatch")
    if z_target < state.z - 1e-12:
        raise ValueError(f"z_target {z_target} lies behind state.z {state.z}")
    rhs = _rhs_for(state)
    h = params.dz
    n_steps = int(round((z_target - state.z) / h))
    if n_steps <= 0:
        return state

    obs_every = 1
    if observer is not None and sample_dz is not None:
        obs_every = max(1, int(round(sample_dz / h)))

    y = state.data.copy()
    z = state.z
    for k in range(1, n_steps + 1):
        # overflow in a diverging run is reported via the finiteness check
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(y, z, params)
            k2 = rhs(y + (0.5 * h) * k1, z + 0.5 * h, params)
            k3 = rhs(y + (0.5 * h) * k2, z + 0.5 * h, params)
            k4 = rhs(y + h * k3, z + h, params)
            k2 += k3
            k1 += k4
            k1 += 2.0 * k2
            k1 *= h / 6.0
            y += k1
        z = state.z + k * h

        if k % check_every == 0 or k == n_steps:
            if not np.all(np.isfinite(y)):
                raise NonFiniteError(
                    f"non-finite moments at z = {z:.6g} "
                    f"(dz = {h:g}, g = {params.g:g}); reduce the step size"
                )
        if observer is not None and (k % obs_every == 0 or k == n_steps):
            snap = replace(state, data=y, z=z)
            snap.data.flags.writeable = False
            observer(z, snap)
            snap.data.flags.writeable = True

    return replace(state, data=y, z=z)


def photon_number_profile(state) -> np.ndarray:
    """Mean photon number per guide: the real diagonal of num (num_s).

    Raises InvariantViolationError if the diagonal has drifted off the
    real axis beyond tolerance; tiny negative values are clipped to zero.
    """
    diag = np.diagonal(state.data[0]).copy()
    tol = 1e-8 * (1.0 + np.abs(diag))
    if np.any(np.abs(diag.imag) > tol):
        raise InvariantViolationError(
            f"photon-number diagonal has imaginary parts up to "
            f"{np.max(np.abs(diag.imag)):.3e} at z = {state.z:g}"
        )
    prof = diag.real
    if np.any(prof < -tol):
        raise InvariantViolationError(
            f"photon-number diagonal has negative entries down to "
            f"{prof.min():.3e} at z = {state.z:g}"
        )
    return np.maximum(prof, 0.0)
