"""Two-mode covariance matrices and logarithmic negativity.

Quadratures are q = (a + a+)/sqrt(2), p = i(a+ - a)/sqrt(2), so the vacuum
variance is 1/2 and a physical covariance matrix has every symplectic
eigenvalue >= 1/2.  All states produced by the lattice have zero mean, so
covariances are plain symmetrized second moments.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .moments import DegenerateMoments, GeneralMoments, evolve, initial_vacuum
from .params import Case, InvariantViolationError, SimParams

__all__ = [
    "PairMoments",
    "SymplecticInvariants",
    "EntanglementMap",
    "StationaryResult",
    "SurvivalResult",
    "pair_moments",
    "covariance_from_moments",
    "symplectic_invariants",
    "log_negativity",
    "entanglement_map",
    "pair_log_negativity",
    "global_purity_check",
    "full_covariance",
    "symplectic_eigenvalues",
    "stationary_logneg",
    "survival_distance",
]

_OMEGA_1 = np.array([[0.0, 1.0], [-1.0, 0.0]])

# Roundoff budget when taking square roots of determinant combinations.
_RADICAND_SLACK = 1e-12


@dataclass(frozen=True)
class PairMoments:
    """Second moments of one mode pair (a, b).

    occ_* are the mean occupations <a+ a>; cross_num = <a+ b>,
    cross_anom = <a b>; self_anom_* = <a a> of each mode alone.
    """

    occ_a: float
    occ_b: float
    cross_num: complex
    cross_anom: complex
    self_anom_a: complex
    self_anom_b: complex


@dataclass(frozen=True)
class SymplecticInvariants:
    a_det: float
    b_det: float
    c_det: float
    sigma_det: float


@dataclass(frozen=True)
class EntanglementMap:
    """Pairwise logarithmic negativity over all guide pairs at fixed z.

    values[i, j] is E_N for the pair of centered indices (i - M, j - M).
    Degenerate case: both modes at the carrier, diagonal excluded (zero).
    General case: mode (m, signal) paired with (n, idler), diagonal kept.
    """

    values: np.ndarray
    case: Case
    z: float

    def value(self, m: int, n: int) -> float:
        M = self.values.shape[0] // 2
        return float(self.values[m + M, n + M])


@dataclass(frozen=True)
class StationaryResult:
    value: float
    z_reached: float
    converged: bool


@dataclass(frozen=True)
class SurvivalResult:
    """Outcome of a survival-distance search.

    status is one of 'vanished', 'unbounded', 'inconclusive'; z_vanish is
    the largest z with E_N > eps ('vanished'), math.inf ('unbounded') or
    nan ('inconclusive': still above eps but decaying at z_max).
    """

    z_vanish: float
    status: str
    peak: float


def pair_moments(state, m: int, n: int) -> PairMoments:
    """Extract the six second moments of a mode pair from a lattice state.

    Indices are centered (-M..M).  Degenerate case: modes are guides m and
    n at the carrier; the self pair m == n is rejected.  General case:
    mode a is (guide m, signal), mode b is (guide n, idler); m == n is a
    valid signal-idler pair in the same guide.  Self-anomalous general
    moments are exact zeros by construction.
    """
    M = state.center
    i, j = m + M, n + M
    if not (0 <= i < state.n_sites and 0 <= j < state.n_sites):
        raise IndexError(f"pair ({m}, {n}) outside -{M}..{M}")
    if isinstance(state, DegenerateMoments):
        if m == n:
            raise ValueError("degenerate self-pair (m == n) has no pair entanglement")
        return PairMoments(
            occ_a=state.num[i, i].real,
            occ_b=state.num[j, j].real,
            cross_num=complex(state.num[i, j]),
            cross_anom=complex(state.anom[i, j]),
            self_anom_a=complex(state.anom[i, i]),
            self_anom_b=complex(state.anom[j, j]),
        )
    if isinstance(state, GeneralMoments):
        return PairMoments(
            occ_a=state.num_s[i, i].real,
            occ_b=state.num_i[j, j].real,
            cross_num=0.0,
            cross_anom=complex(state.anom[i, j]),
            self_anom_a=0.0,
            self_anom_b=0.0,
        )
    raise TypeError(f"unknown state type {type(state).__name__}")


def covariance_from_moments(pm: PairMoments, check: bool = True) -> np.ndarray:
    """Assemble the 4x4 covariance matrix in (q_a, p_a, q_b, p_b) order.

    Expanding the symmetrized quadrature products in mode operators gives,
    with n = <a+ a>, s = <a a>, t = <a+ b>, u = <a b>:

        <q^2> = n + 1/2 + Re s        <p^2> = n + 1/2 - Re s
        <qp>_sym = Im s
        <q_a q_b> = Re t + Re u       <p_a p_b> = Re t - Re u
        <q_a p_b> = Im t + Im u       <p_a q_b> = Im u - Im t
    """
    t, u = pm.cross_num, pm.cross_anom
    sa, sb = pm.self_anom_a, pm.self_anom_b
    sigma = np.array([
        [pm.occ_a + 0.5 + sa.real, sa.imag,
         t.real + u.real, t.imag + u.imag],
        [sa.imag, pm.occ_a + 0.5 - sa.real,
         u.imag - t.imag, t.real - u.real],
        [t.real + u.real, u.imag - t.imag,
         pm.occ_b + 0.5 + sb.real, sb.imag],
        [t.imag + u.imag, t.real - u.real,
         sb.imag, pm.occ_b + 0.5 - sb.real],
    ])
    if check:
        _check_physical(sigma)
    return sigma


def _check_physical(sigma: np.ndarray, tol: float = 1e-9):
    if np.max(np.abs(sigma - sigma.T)) > 1e-12 * max(1.0, np.max(np.abs(sigma))):
        raise InvariantViolationError("covariance matrix is not symmetric")
    if np.any(np.diagonal(sigma) <= 0):
        raise InvariantViolationError("covariance diagonal must be positive")
    # Williamson requires sigma > 0; without it the i Omega sigma spectrum
    # can go complex and |.| would hide the violation
    if np.min(np.linalg.eigvalsh(sigma)) <= 0:
        raise InvariantViolationError("covariance matrix is not positive definite")
    nu = symplectic_eigenvalues(sigma)
    if np.min(nu) < 0.5 - tol:
        raise InvariantViolationError(
            f"unphysical covariance: min symplectic eigenvalue {np.min(nu):.12g} < 1/2"
        )


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), _OMEGA_1)


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """Moduli of the eigenvalues of i Omega sigma, one per mode, sorted."""
    n_modes = sigma.shape[0] // 2
    ev = np.linalg.eigvals(1j * symplectic_form(n_modes) @ sigma)
    return np.sort(np.abs(ev))[::2]


def symplectic_invariants(sigma: np.ndarray) -> SymplecticInvariants:
    """Determinants of the 2x2 blocks and of the full two-mode matrix."""
    a = np.linalg.det(sigma[:2, :2])
    b = np.linalg.det(sigma[2:, 2:])
    c = np.linalg.det(sigma[:2, 2:])
    s = np.linalg.det(sigma)
    return SymplecticInvariants(a, b, c, s)


def log_negativity(sigma: np.ndarray) -> float:
    """Logarithmic negativity of a two-mode Gaussian state.

    Uses the partial-transpose combination of block determinants:
    nu_minus^2 = (D - sqrt(D^2 - 4 det sigma)) / 2 with D = A + B - 2C,
    and E_N = max(0, -log2(2 nu_minus)).
    """
    inv = symplectic_invariants(sigma)
    dtilde = inv.a_det + inv.b_det - 2.0 * inv.c_det
    scale = max(1.0, dtilde * dtilde)
    disc = dtilde * dtilde - 4.0 * inv.sigma_det
    if disc < -_RADICAND_SLACK * scale:
        raise InvariantViolationError(
            f"negative discriminant {disc:.3e} in log-negativity"
        )
    nu2 = 0.5 * (dtilde - math.sqrt(max(disc, 0.0)))
    if nu2 < -_RADICAND_SLACK * max(1.0, abs(dtilde)):
        raise InvariantViolationError(
            f"negative nu_minus^2 = {nu2:.3e}: corrupted covariance upstream"
        )
    if nu2 <= 0.0:
        raise InvariantViolationError("vanishing nu_minus: unphysical covariance")
    return max(0.0, -0.5 * math.log2(4.0 * nu2))


def pair_log_negativity(state, m: int, n: int, check: bool = True) -> float:
    """E_N of one guide pair straight from a moment state."""
    return log_negativity(covariance_from_moments(pair_moments(state, m, n), check))


def entanglement_map(state) -> EntanglementMap:
    """E_N for every mode pair, assembled vectorized over the lattice.

    Degenerate maps are symmetric with the (meaningless) diagonal set to
    zero; general maps cover the full grid including the same-guide
    signal-idler diagonal.
    """
    n = state.n_sites
    if isinstance(state, DegenerateMoments):
        occ = np.diagonal(state.num).real
        t = state.num
        u = state.anom
        sdiag = np.diagonal(state.anom)
        sa = sdiag[:, None] * np.ones((1, n))
        sb = np.ones((n, 1)) * sdiag[None, :]
        case = Case.DEGENERATE
    elif isinstance(state, GeneralMoments):
        occ = None
        t = np.zeros((n, n), dtype=complex)
        u = state.anom
        sa = np.zeros((n, n), dtype=complex)
        sb = sa
        case = Case.GENERAL
    else:
        raise TypeError(f"unknown state type {type(state).__name__}")

    if case is Case.DEGENERATE:
        na = occ[:, None] * np.ones((1, n))
        nb = np.ones((n, 1)) * occ[None, :]
    else:
        na = np.diagonal(state.num_s).real[:, None] * np.ones((1, n))
        nb = np.ones((n, 1)) * np.diagonal(state.num_i).real[None, :]

    a11 = na + 0.5 + sa.real
    a22 = na + 0.5 - sa.real
    a12 = sa.imag
    b11 = nb + 0.5 + sb.real
    b22 = nb + 0.5 - sb.real
    b12 = sb.imag
    g11 = t.real + u.real
    g12 = t.imag + u.imag
    g21 = u.imag - t.imag
    g22 = t.real - u.real

    a_det = a11 * a22 - a12 * a12
    b_det = b11 * b22 - b12 * b12
    c_det = g11 * g22 - g12 * g21

    sig = np.empty((n, n, 4, 4))
    sig[..., 0, 0] = a11
    sig[..., 0, 1] = a12
    sig[..., 1, 0] = a12
    sig[..., 1, 1] = a22
    sig[..., 2, 2] = b11
    sig[..., 2, 3] = b12
    sig[..., 3, 2] = b12
    sig[..., 3, 3] = b22
    sig[..., 0, 2] = g11
    sig[..., 0, 3] = g12
    sig[..., 1, 2] = g21
    sig[..., 1, 3] = g22
    sig[..., 2, 0] = g11
    sig[..., 3, 0] = g12
    sig[..., 2, 1] = g21
    sig[..., 3, 1] = g22
    s_det = np.linalg.det(sig)

    if case is Case.DEGENERATE:
        # the same-guide "pair" is meaningless in the degenerate case:
        # substitute vacuum determinants so the diagonal yields E_N = 0
        rng = np.arange(n)
        a_det[rng, rng] = 0.25
        b_det[rng, rng] = 0.25
        c_det[rng, rng] = 0.0
        s_det[rng, rng] = 0.0625

    dtilde = a_det + b_det - 2.0 * c_det
    disc = dtilde * dtilde - 4.0 * s_det
    scale = np.maximum(1.0, dtilde * dtilde)
    if np.any(disc < -1e-9 * scale):
        raise InvariantViolationError("negative discriminant in entanglement map")
    nu2 = 0.5 * (dtilde - np.sqrt(np.maximum(disc, 0.0)))
    if np.any(nu2 < -1e-9 * np.maximum(1.0, np.abs(dtilde))):
        raise InvariantViolationError("negative nu_minus^2 in entanglement map")
    nu2 = np.maximum(nu2, 1e-300)
    values = np.maximum(0.0, -0.5 * np.log2(4.0 * nu2))
    if case is Case.DEGENERATE:
        np.fill_diagonal(values, 0.0)
    return EntanglementMap(values, case, state.z)


def full_covariance(state) -> np.ndarray:
    """Covariance matrix of all modes, ordering (q_1, p_1, q_2, p_2, ...).

    Degenerate states have one mode per guide; general states stack the N
    signal modes then the N idler modes (2N modes total).
    """
    if isinstance(state, DegenerateMoments):
        t = state.num
        u = state.anom
    elif isinstance(state, GeneralMoments):
        n = state.n_sites
        t = np.zeros((2 * n, 2 * n), dtype=complex)
        t[:n, :n] = state.num_s
        t[n:, n:] = state.num_i
        u = np.zeros((2 * n, 2 * n), dtype=complex)
        u[:n, n:] = state.anom
        u[n:, :n] = state.anom.T
    else:
        raise TypeError(f"unknown state type {type(state).__name__}")

    k = t.shape[0]
    sigma = np.empty((2 * k, 2 * k))
    sigma[0::2, 0::2] = t.real + u.real + 0.5 * np.eye(k)
    sigma[1::2, 1::2] = t.real - u.real + 0.5 * np.eye(k)
    sigma[0::2, 1::2] = t.imag + u.imag
    sigma[1::2, 0::2] = -t.imag + u.imag
    return 0.5 * (sigma + sigma.T)


def global_purity_check(state) -> float:
    """Largest deviation of the full symplectic spectrum from 1/2.

    Exactly zero (up to integration error) for coherent-pump evolution
    from vacuum, which is unitary; grows with z under pump phase noise.
    """
    nu = symplectic_eigenvalues(full_covariance(state))
    return float(np.max(np.abs(nu - 0.5)))


def _track_pair(params: SimParams, pair, z_stop, sample_dz, consume,
                state=None):
    """Evolve from vacuum (or `state`) recording E_N(pair) at samples."""
    m, n = pair
    if state is None:
        state = initial_vacuum(params)

    def observer(z, snap):
        consume(z, pair_log_negativity(snap, m, n, check=False))

    return evolve(state, params, z_stop, observer=observer, sample_dz=sample_dz)


def stationary_logneg(params: SimParams, pair=(1, -1), z_probe: float = 5.0,
                      plateau_tol: float = 1e-4, z_max: float = 80.0,
                      sample_dz: float = 0.05) -> StationaryResult:
    """Plateau value of E_N for one pair under a coherent pump.

    Evolves from vacuum past z_probe and declares a plateau once the
    spread of E_N over a trailing window of 1/c_s falls below
    plateau_tol relative to the current value.  Above the instability
    threshold no plateau forms and the result reports converged=False.
    """
    if params.gamma != 0:
        raise ValueError("stationary value is defined for a coherent pump (gamma = 0)")
    window_len = 1.0 / params.c_s if params.c_s > 0 else 1.0
    window: deque[tuple[float, float]] = deque()
    found = {"val": None, "z": None}

    min_span = window_len - 1.5 * sample_dz

    def consume(z, e):
        window.append((z, e))
        while window and window[0][0] < z - window_len:
            window.popleft()
        if found["val"] is None and z >= z_probe and window[-1][0] - window[0][0] >= min_span:
            vals = [v for _, v in window]
            spread = max(vals) - min(vals)
            if spread <= plateau_tol * max(abs(e), 1e-9):
                found["val"] = e
                found["z"] = z

    state = initial_vacuum(params)
    z = 0.0
    chunk = max(z_probe, 5.0)
    while z < z_max and found["val"] is None:
        z = min(z + chunk, z_max)
        state = _track_pair(params, pair, z, sample_dz, consume, state=state)
    if found["val"] is None:
        last = window[-1][1] if window else 0.0
        return StationaryResult(last, state.z, False)
    return StationaryResult(found["val"], found["z"], True)


def survival_distance(params: SimParams, pair=(1, -1), eps: float = 1e-4,
                      z_max: float = 300.0, sample_dz: float = 0.1,
                      settle_window: float = 2.0) -> SurvivalResult:
    """Largest z at which E_N(pair) exceeds eps under pump phase noise.

    The pair entanglement rises from zero, plateaus near the coherent
    value and then decays under phase diffusion; the search evolves until
    E_N has stayed below eps for settle_window after its peak.  A coherent
    pump (gamma = 0) never decays: the result is unbounded.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if params.gamma == 0:
        return SurvivalResult(math.inf, "unbounded", math.nan)

    rec = {"last_above": None, "below_since": None, "peak": 0.0, "done": False}
    trail: deque[tuple[float, float]] = deque(maxlen=64)

    def consume(z, e):
        trail.append((z, e))
        rec["peak"] = max(rec["peak"], e)
        if e > eps:
            rec["last_above"] = (z, e)
            rec["below_since"] = None
        elif rec["last_above"] is not None and rec["below_since"] is None:
            rec["below_since"] = z
        if (rec["below_since"] is not None
                and z - rec["below_since"] >= settle_window):
            rec["done"] = True

    state = initial_vacuum(params)
    z = 0.0
    chunk = 10.0
    while z < z_max and not rec["done"]:
        z = min(z + chunk, z_max)
        state = _track_pair(params, pair, z, sample_dz, consume, state=state)

    if rec["done"] or (rec["last_above"] is not None and rec["below_since"] is not None):
        return SurvivalResult(rec["last_above"][0], "vanished", rec["peak"])
    if rec["last_above"] is None:
        # never rose above eps: entanglement never detected at this level
        return SurvivalResult(0.0, "vanished", rec["peak"])
    zs = np.array([z for z, _ in trail])
    es = np.array([e for _, e in trail])
    slope = np.polyfit(zs, es, 1)[0] if len(zs) > 4 else 0.0
    if slope >= -eps / max(z_max, 1.0):
        return SurvivalResult(math.inf, "unbounded", rec["peak"])
    return SurvivalResult(math.nan, "inconclusive", rec["peak"])
