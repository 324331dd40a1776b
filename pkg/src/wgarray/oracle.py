"""Monte-Carlo cross-validation of the averaged moment equations.

Per realization of the pump phase path the lattice dynamics is linear, so
the Heisenberg evolution is a Bogoliubov map

    a_n(z) = sum_m [ mu_{nm} a_m(0) + nu_{nm} a+_m(0) ]

integrated per path with RK4 (the general case doubles the mode space
over signal and idler).  Vacuum-input moments follow from (mu, nu), the
phase-dressed moments pick up the realization's e^{+-i phi(z)} factors,
and averaging over an ensemble of Wiener phase paths must reproduce the
moment ODE solution within statistical error.  This route never touches
the averaged equations, which makes it the arbiter for their coupling
structure.

Seed mapping: path index i of a run seeded with s uses the generator
PCG64(SeedSequence((s, i))), so ensembles are reproducible and chunkable
in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moments import DegenerateMoments, GeneralMoments
from .params import Case, SimParams

__all__ = [
    "PhasePath",
    "BogoliubovPropagator",
    "OracleEstimate",
    "sample_phase_path",
    "phase_path_for",
    "propagate_bogoliubov",
    "ensemble_moments",
    "ensemble_from_seed",
]

# Propagator cost per step is O(N^3)-ish per realization; the oracle only
# ever needs small lattices.
MAX_ORACLE_SITES = 41


@dataclass(frozen=True)
class PhasePath:
    """One Wiener realization of the pump phase on a uniform z grid.

    Increments are independent Normal(0, 2 gamma dz) draws, so the path
    variance grows as 2 gamma z.  The grid must resolve the RK4 half-step
    stage times of the propagator: its spacing is half the integrator
    step.
    """

    z_grid: np.ndarray
    phi: np.ndarray
    gamma: float
    seed: object

    @property
    def dz(self) -> float:
        if len(self.z_grid) < 2:
            return 0.0
        return float(self.z_grid[1] - self.z_grid[0])

    @property
    def z_max(self) -> float:
        return float(self.z_grid[-1])


def sample_phase_path(gamma: float, dz: float, z_max: float, seed) -> PhasePath:
    """Draw one phase path on a grid of spacing dz covering [0, z_max]."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    n = int(round(z_max / dz))
    zs = np.arange(n + 1) * dz
    if gamma == 0:
        phi = np.zeros(n + 1)
    else:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        steps = rng.normal(0.0, np.sqrt(2.0 * gamma * dz), size=n)
        phi = np.empty(n + 1)
        phi[0] = 0.0
        np.cumsum(steps, out=phi[1:])
    return PhasePath(zs, phi, gamma, seed)


def phase_path_for(params: SimParams, z_max: float, seed) -> PhasePath:
    """Path with the half-step grid expected by propagate_bogoliubov."""
    return sample_phase_path(params.gamma, 0.5 * params.dz, z_max, seed)


@dataclass(frozen=True)
class BogoliubovPropagator:
    """Linear input-output map of one phase realization.

    mu and nu are K x K with K = N (degenerate) or K = 2N (general,
    signal modes stacked before idler modes).  Bosonic commutators demand
    mu mu+ - nu nu+ = 1 and mu nu^T = nu mu^T.
    """

    mu: np.ndarray
    nu: np.ndarray
    z: float
    case: Case

    def symplectic_defect(self) -> float:
        k = self.mu.shape[0]
        d1 = self.mu @ self.mu.conj().T - self.nu @ self.nu.conj().T - np.eye(k)
        d2 = self.mu @ self.nu.T - self.nu @ self.mu.T
        return float(max(np.max(np.abs(d1)), np.max(np.abs(d2))))


def _pump_rows(params: SimParams):
    """(target row, conjugate-source row) pairs of the pump coupling."""
    mid = params.center
    if params.case is Case.DEGENERATE:
        return ((mid, mid),)
    n = params.n_sites
    return ((mid, n + mid), (n + mid, mid))


def _batch_rhs(mu, nu, ph, params, pump_rows, out_mu, out_nu):
    """dmu = i c L mu + i g ph X conj(nu), and likewise dnu (batched)."""
    cs, g = params.c_s, params.g
    for src, dst in ((mu, out_mu), (nu, out_nu)):
        dst[:, 0, :] = src[:, 1, :]
        dst[:, -1, :] = src[:, -2, :]
        np.add(src[:, :-2, :], src[:, 2:, :], out=dst[:, 1:-1, :])
        if params.case is Case.GENERAL:
            # signal and idler blocks do not couple to each other linearly
            n = params.n_sites
            dst[:, n, :] = src[:, n + 1, :]
            dst[:, n - 1, :] = src[:, n - 2, :]
        dst *= 1j * cs
    coeff = (1j * g) * ph
    for i, j in pump_rows:
        out_mu[:, i, :] += coeff[:, None] * np.conj(nu[:, j, :])
        out_nu[:, i, :] += coeff[:, None] * np.conj(mu[:, j, :])


def _propagate_batch(phases: np.ndarray, params: SimParams):
    """RK4 propagation of (mu, nu) for a batch of phase realizations.

    phases has shape (R, 2 * n_steps + 1): the phase path sampled on the
    half-step grid, so each RK4 stage reads the exact node value.
    Returns stacked (R, K, K) mu and nu.
    """
    if params.n_sites > MAX_ORACLE_SITES:
        raise ValueError(
            f"oracle lattice capped at {MAX_ORACLE_SITES} sites, got {params.n_sites}"
        )
    r, nodes = phases.shape
    if nodes % 2 == 0:
        raise ValueError("phase grid must hold an odd number of nodes")
    n_steps = (nodes - 1) // 2
    k = params.n_sites if params.case is Case.DEGENERATE else 2 * params.n_sites
    pump_rows = _pump_rows(params)
    h = params.dz

    mu = np.broadcast_to(np.eye(k, dtype=complex), (r, k, k)).copy()
    nu = np.zeros((r, k, k), dtype=complex)
    eph = np.exp(1j * phases)

    k1m = np.empty_like(mu)
    k1n = np.empty_like(mu)
    k2m = np.empty_like(mu)
    k2n = np.empty_like(mu)
    k3m = np.empty_like(mu)
    k3n = np.empty_like(mu)
    k4m = np.empty_like(mu)
    k4n = np.empty_like(mu)

    for step in range(n_steps):
        p0 = eph[:, 2 * step]
        pm = eph[:, 2 * step + 1]
        p1 = eph[:, 2 * step + 2]
        _batch_rhs(mu, nu, p0, params, pump_rows, k1m, k1n)
        _batch_rhs(mu + (0.5 * h) * k1m, nu + (0.5 * h) * k1n, pm, params,
                   pump_rows, k2m, k2n)
        _batch_rhs(mu + (0.5 * h) * k2m, nu + (0.5 * h) * k2n, pm, params,
                   pump_rows, k3m, k3n)
        _batch_rhs(mu + h * k3m, nu + h * k3n, p1, params, pump_rows, k4m, k4n)
        k2m += k3m
        k1m += k4m
        k1m += 2.0 * k2m
        mu += (h / 6.0) * k1m
        k2n += k3n
        k1n += k4n
        k1n += 2.0 * k2n
        nu += (h / 6.0) * k1n

    return mu, nu


def propagate_bogoliubov(path: PhasePath, params: SimParams) -> BogoliubovPropagator:
    """Integrate one realization and validate its symplectic identity."""
    if len(path.z_grid) > 1 and abs(path.dz - 0.5 * params.dz) > 1e-12 * max(path.dz, params.dz):
        raise ValueError(
            f"phase path grid spacing {path.dz:g} must equal dz/2 = "
            f"{0.5 * params.dz:g} to resolve the RK4 stages"
        )
    mu, nu = _propagate_batch(path.phi[None, :], params)
    prop = BogoliubovPropagator(mu[0], nu[0], path.z_max, params.case)
    defect = prop.symplectic_defect()
    if defect > 1e-6:
        raise ValueError(
            f"symplectic defect {defect:.3e} exceeds 1e-6: step too large"
        )
    return prop


def _realization_moments(mu, nu, eph_final, params):
    """Stacked per-realization moment matrices, shape (R, F, N, N)."""
    n = params.n_sites
    num = np.einsum("rmj,rnj->rmn", nu.conj(), nu)
    anom = np.einsum("rmj,rnj->rmn", mu, nu)
    if params.case is Case.DEGENERATE:
        stack = np.empty((mu.shape[0], 5, n, n), dtype=complex)
        stack[:, 0] = num
        stack[:, 1] = anom * eph_final.conj()[:, None, None]
        stack[:, 2] = anom
        stack[:, 3] = num * eph_final[:, None, None]
        stack[:, 4] = anom.conj() * (eph_final ** 2)[:, None, None]
        return stack
    num_s = num[:, :n, :n]
    num_i = num[:, n:, n:]
    anom_si = anom[:, :n, n:]
    stack = np.empty((mu.shape[0], 7, n, n), dtype=complex)
    stack[:, 0] = num_s
    stack[:, 1] = num_i
    stack[:, 2] = anom_si * eph_final.conj()[:, None, None]
    stack[:, 3] = anom_si
    stack[:, 4] = num_s * eph_final[:, None, None]
    stack[:, 5] = num_i * eph_final[:, None, None]
    stack[:, 6] = anom_si.conj() * (eph_final ** 2)[:, None, None]
    return stack


@dataclass(frozen=True)
class OracleEstimate:
    """Ensemble mean of the moment matrices with per-entry standard errors."""

    state: object
    stderr: np.ndarray
    n_paths: int
    max_symplectic_defect: float

    def agreement_sigma(self, ode_state, floor: float = 1e-12) -> float:
        """Largest |ODE - MC| over entries in units of the standard error."""
        diff = np.abs(ode_state.data - self.state.data)
        return float(np.max(diff / (self.stderr + floor)))


def _reduce_paths(phases, params, accum):
    mu, nu = _propagate_batch(phases, params)
    stack = _realization_moments(mu, nu, np.exp(1j * phases[:, -1]), params)
    accum["sum"] += stack.sum(axis=0)
    accum["sum_re2"] += np.square(stack.real).sum(axis=0)
    accum["sum_im2"] += np.square(stack.imag).sum(axis=0)
    k = mu.shape[1]
    d1 = np.einsum("rij,rkj->rik", mu, mu.conj())
    d1 -= np.einsum("rij,rkj->rik", nu, nu.conj())
    d1 -= np.eye(k)
    d2 = np.einsum("rij,rkj->rik", mu, nu)
    d2 -= np.einsum("rij,rkj->rik", nu, mu)
    defect = max(np.max(np.abs(d1)), np.max(np.abs(d2)))
    accum["defect"] = max(accum["defect"], float(defect))


def ensemble_moments(paths, params: SimParams) -> OracleEstimate:
    """Average the moment matrices over explicit phase paths.

    All paths must share one grid.  The reduction is a fixed-order sum
    over path index, so the result is bit-reproducible for a given seed
    set regardless of how the caller produced the paths.
    """
    if len(paths) < 2:
        raise ValueError("ensemble needs at least two paths")
    grid = paths[0].z_grid
    for p in paths[1:]:
        if p.z_grid.shape != grid.shape or abs(p.dz - paths[0].dz) > 1e-12:
            raise ValueError("all paths must share one grid")
    if abs(paths[0].dz - 0.5 * params.dz) > 1e-12:
        raise ValueError("path grid spacing must be dz/2")
    phases = np.stack([p.phi for p in paths])
    return _ensemble_from_phases(phases, params, chunk=512)


def _make_accum(params):
    n = params.n_sites
    f = 5 if params.case is Case.DEGENERATE else 7
    return {
        "sum": np.zeros((f, n, n), dtype=complex),
        "sum_re2": np.zeros((f, n, n)),
        "sum_im2": np.zeros((f, n, n)),
        "defect": 0.0,
    }


def _finish(accum, n_paths, z, params):
    mean = accum["sum"] / n_paths
    var_re = (accum["sum_re2"] - n_paths * np.square(mean.real)) / (n_paths - 1)
    var_im = (accum["sum_im2"] - n_paths * np.square(mean.imag)) / (n_paths - 1)
    se = np.sqrt(np.maximum(var_re + var_im, 0.0) / n_paths)
    cls = DegenerateMoments if params.case is Case.DEGENERATE else GeneralMoments
    return OracleEstimate(cls(mean, z), se, n_paths, accum["defect"])


def _ensemble_from_phases(phases, params, chunk):
    accum = _make_accum(params)
    for start in range(0, phases.shape[0], chunk):
        _reduce_paths(phases[start:start + chunk], params, accum)
    n_half = phases.shape[1] - 1
    z = 0.5 * params.dz * n_half
    return _finish(accum, phases.shape[0], z, params)


def _chunk_task(args):
    params, z_max, seed, start, count = args
    accum = _make_accum(params)
    phases = np.stack([
        phase_path_for(params, z_max, (seed, i)).phi
        for i in range(start, start + count)
    ])
    _reduce_paths(phases, params, accum)
    return accum


def ensemble_from_seed(params: SimParams, n_paths: int, z_max: float, seed: int,
                       chunk: int = 512, workers: int = 1) -> OracleEstimate:
    """Seeded ensemble: path i uses SeedSequence((seed, i)).

    Chunks of fixed size keep the reduction order (and therefore the
    result bits) independent of the worker count.
    """
    if n_paths < 2:
        raise ValueError("ensemble needs at least two paths")
    tasks = [
        (params, z_max, seed, start, min(chunk, n_paths - start))
        for start in range(0, n_paths, chunk)
    ]
    if workers > 1 and len(tasks) > 1:
        from multiprocessing import Pool

        with Pool(processes=min(workers, len(tasks))) as pool:
            partials = pool.map(_chunk_task, tasks)
    else:
        partials = [_chunk_task(t) for t in tasks]

    accum = _make_accum(params)
    for p in partials:
        accum["sum"] += p["sum"]
        accum["sum_re2"] += p["sum_re2"]
        accum["sum_im2"] += p["sum_im2"]
        accum["defect"] = max(accum["defect"], p["defect"])
    n_steps = int(round(z_max / params.dz))
    return _finish(accum, n_paths, n_steps * params.dz, params)
