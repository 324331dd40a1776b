"""Named experiments behind the CLI: evolve, measure, write tables.

Every experiment writes a CSV (comment lines prefixed with '#', then a
header row) plus a .meta.json echo of the fully resolved configuration,
the seed and the artifact version.  Identical configuration and seed give
byte-identical tables.
"""

from __future__ import annotations

import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .entanglement import (
    entanglement_map,
    global_purity_check,
    stationary_logneg,
    survival_distance,
    symplectic_eigenvalues,
    full_covariance,
)
from .moments import evolve, initial_vacuum, photon_number_profile
from .oracle import ensemble_from_seed
from .params import Case, SimParams
from .reduced import (
    MemoryKernel,
    bessel_j,
    classify_growth,
    bisect_threshold,
    memory_identity_residual,
    reduced_parametric_growth,
    threshold_bracket_reduced,
    _green_trajectory,
)

_FMT = "%.12g"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return _FMT % v
    return str(v)


def write_csv(path: Path, comments: list[str], header: list[str], rows) -> Path:
    with open(path, "w", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _write_meta(path: Path, cfg: ExperimentConfig, extra: dict | None = None) -> Path:
    doc = {"artifact": "wgarray", "version": __version__, "config": cfg.resolved()}
    if extra:
        doc["results"] = extra
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _maybe_json(path: Path, cfg, header, rows) -> list[Path]:
    if not cfg.json_mirror:
        return []
    doc = [dict(zip(header, row)) for row in rows]
    jpath = path.with_suffix(".json")
    with open(jpath, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, default=str)
        fh.write("\n")
    return [jpath]


def _progress(quiet: bool, msg: str):
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


def _workers(cfg: ExperimentConfig) -> int:
    if cfg.workers > 0:
        return cfg.workers
    env = os.environ.get("WGARRAY_WORKERS")
    if env and env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1


def _pmap(n_workers: int, fn, tasks: list):
    """Order-preserving map, optionally over a process pool."""
    if n_workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    from multiprocessing import Pool

    with Pool(processes=min(n_workers, len(tasks))) as pool:
        return pool.map(fn, tasks)


def _meta_lines(cfg: ExperimentConfig, **extra) -> list[str]:
    lines = [
        f"experiment = {cfg.experiment}",
        f"n_sites = {cfg.n_sites} c_s = {_fmt(cfg.c_s)} g = {_fmt(cfg.g)} "
        f"gamma = {_fmt(cfg.gamma)} dz = {_fmt(cfg.dz)} case = {cfg.case}",
        f"seed = {cfg.seed}",
    ]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    return lines


def _centered(i: int, n: int) -> int:
    return i - n // 2


# ----------------------------------------------------------------- runs


def run_intensity_profile(cfg, out_dir, quiet):
    z_values = cfg.z_values or (3.75 / cfg.c_s,)
    params = cfg.sim_params()
    state = initial_vacuum(params)
    rows = []
    for z in sorted(z_values):
        state = evolve(state, params, z)
        prof = photon_number_profile(state)
        rows += [(state.z, _centered(i, cfg.n_sites), prof[i])
                 for i in range(cfg.n_sites)]
        _progress(quiet, f"intensity-profile: sampled z = {state.z:g}")
    path = out_dir / "intensity-profile.csv"
    header = ["z", "n", "intensity"]
    written = [write_csv(path, _meta_lines(cfg, z_values=list(z_values)), header, rows)]
    written += _maybe_json(path, cfg, header, rows)
    written.append(_write_meta(out_dir / "intensity-profile.meta.json", cfg))
    return written


def run_intensity_vs_z(cfg, out_dir, quiet):
    g_grid = cfg.g_grid or (1.5 * cfg.c_s, 2.2 * cfg.c_s)
    z_max = cfg.z_max if cfg.z_max is not None else 3.75 / cfg.c_s
    curves = []
    zs_ref = None
    for g in g_grid:
        params = cfg.sim_params(g=g)
        zs, ivals = [0.0], [0.0]

        def obs(z, snap):
            zs.append(z)
            ivals.append(photon_number_profile(snap)[params.center])

        evolve(initial_vacuum(params), params, z_max, observer=obs,
               sample_dz=cfg.sample_dz)
        curves.append(ivals)
        zs_ref = zs
        _progress(quiet, f"intensity-vs-z: finished g = {g:g}")
    header = ["z"] + [f"intensity_g={_fmt(g)}" for g in g_grid]
    rows = [tuple([zs_ref[i]] + [c[i] for c in curves]) for i in range(len(zs_ref))]
    path = out_dir / "intensity-vs-z.csv"
    written = [write_csv(path, _meta_lines(cfg, g_grid=list(g_grid), z_max=z_max),
                         header, rows)]
    written += _maybe_json(path, cfg, header, rows)
    written.append(_write_meta(out_dir / "intensity-vs-z.meta.json", cfg))
    return written


def run_entangle_map(cfg, out_dir, quiet):
    z_values = tuple(sorted(cfg.z_values)) or (2.25 / cfg.c_s, 7.5 / cfg.c_s)
    cases = (Case.DEGENERATE, Case.GENERAL) if cfg.case == "both" else (Case(cfg.case),)
    rows = []
    for case in cases:
        params = cfg.sim_params(case=case)
        state = initial_vacuum(params)
        for z in z_values:
            state = evolve(state, params, z)
            emap = entanglement_map(state)
            nz = np.nonzero(emap.values > 0)
            for i, j in zip(*nz):
                rows.append((case.value, state.z, _centered(i, cfg.n_sites),
                             _centered(j, cfg.n_sites), emap.values[i, j]))
            _progress(quiet, f"entangle-map: {case.value} z = {state.z:g} "
                             f"({len(nz[0])} nonzero pairs)")
    path = out_dir / "entangle-map.csv"
    header = ["case", "z", "m", "n", "log_negativity"]
    comments = _meta_lines(cfg, z_values=list(z_values),
                           note="only pairs with E_N > 0 are listed")
    written = [write_csv(path, comments, header, rows)]
    written += _maybe_json(path, cfg, header, rows)
    written.append(_write_meta(out_dir / "entangle-map.meta.json", cfg))
    return written


def _stationary_task(args):
    cfg, g = args
    params = cfg.sim_params(g=g, gamma=0.0)
    res = stationary_logneg(params, pair=cfg.pair, plateau_tol=cfg.plateau_tol,
                            z_max=cfg.z_max or 80.0, sample_dz=cfg.sample_dz)
    return (g, res.value, res.z_reached, res.converged)


def run_stationary_sweep(cfg, out_dir, quiet):
    g_grid = cfg.g_grid or tuple(round(0.6 + 0.1 * k, 10) for k in range(11))
    results = _pmap(_workers(cfg), _stationary_task, [(cfg, g) for g in g_grid])
    _progress(quiet, f"stationary-sweep: {len(results)} grid points done")
    path = out_dir / "stationary-sweep.csv"
    header = ["g", "log_negativity", "z_plateau", "converged"]
    comments = _meta_lines(cfg, pair=cfg.pair, plateau_tol=cfg.plateau_tol)
    written = [write_csv(path, comments, header, results)]
    written += _maybe_json(path, cfg, header, results)
    written.append(_write_meta(out_dir / "stationary-sweep.meta.json", cfg))
    return written


def _survival_task(args):
    cfg, gam, g = args
    params = cfg.sim_params(g=g, gamma=gam)
    out = [gam, g]
    # eps ladder in one pass: larger thresholds vanish earlier
    for eps in (cfg.eps, 3 * cfg.eps, 10 * cfg.eps):
        res = survival_distance(params, pair=cfg.pair, eps=eps,
                                z_max=cfg.z_max or 300.0,
                                sample_dz=cfg.sample_dz)
        out += [res.z_vanish, res.status]
    return tuple(out)


def run_survival_distance(cfg, out_dir, quiet):
    gam_grid = cfg.gamma_grid or (cfg.gamma,)
    g_grid = cfg.g_grid or (0.5, 1.0, 1.5, 2.0)
    tasks = [(cfg, gam, g) for gam in gam_grid for g in g_grid]
    results = _pmap(_workers(cfg), _survival_task, tasks)
    _progress(quiet, f"survival-distance: {len(results)} grid points done")
    path = out_dir / "survival-distance.csv"
    header = ["gamma", "g", "z_vanish", "status",
              "z_vanish_eps3x", "status_eps3x", "z_vanish_eps10x", "status_eps10x"]
    comments = _meta_lines(cfg, eps=cfg.eps, pair=cfg.pair,
                           note="z_vanish columns report the eps sensitivity ladder")
    written = [write_csv(path, comments, header, results)]
    written += _maybe_json(path, cfg, header, results)
    written.append(_write_meta(out_dir / "survival-distance.meta.json", cfg))
    return written


def run_noise_evolution(cfg, out_dir, quiet):
    pairs = cfg.pairs or (cfg.pair,)
    z_max = cfg.z_max if cfg.z_max is not None else 100.0
    params = cfg.sim_params()
    from .entanglement import pair_log_negativity

    zs, series = [0.0], [[0.0] for _ in pairs]
    maps = {}
    want_maps = tuple(sorted(cfg.z_values))
    next_map = list(want_maps)

    def obs(z, snap):
        zs.append(z)
        for k, (m, n) in enumerate(pairs):
            series[k].append(pair_log_negativity(snap, m, n, check=False))
        if next_map and z >= next_map[0] - 1e-9:
            maps[next_map.pop(0)] = entanglement_map(snap)

    evolve(initial_vacuum(params), params, z_max, observer=obs,
           sample_dz=cfg.sample_dz)
    _progress(quiet, f"noise-evolution: tracked {len(pairs)} pairs to z = {z_max:g}")

    header = ["z"] + [f"e_n_pair={m}_{n}" for m, n in pairs]
    rows = [tuple([zs[i]] + [s[i] for s in series]) for i in range(len(zs))]
    path = out_dir / "noise-evolution.csv"
    comments = _meta_lines(cfg, pairs=list(pairs), z_max=z_max)
    written = [write_csv(path, comments, header, rows)]
    written += _maybe_json(path, cfg, header, rows)

    if maps:
        mrows = []
        for z_req in want_maps:
            emap = maps.get(z_req)
            if emap is None:
                continue
            nz = np.nonzero(emap.values > 0)
            for i, j in zip(*nz):
                mrows.append((emap.z, _centered(i, cfg.n_sites),
                              _centered(j, cfg.n_sites), emap.values[i, j]))
        mpath = out_dir / "noise-evolution-maps.csv"
        written.append(write_csv(mpath, comments, ["z", "m", "n", "log_negativity"],
                                 mrows))
    written.append(_write_meta(out_dir / "noise-evolution.meta.json", cfg))
    return written


def run_oracle_check(cfg, out_dir, quiet):
    z_max = cfg.z_max if cfg.z_max is not None else 10.0
    params = cfg.sim_params()
    ode = evolve(initial_vacuum(params), params, z_max)
    est = ensemble_from_seed(params, cfg.ensemble, z_max, cfg.seed,
                             chunk=cfg.chunk, workers=_workers(cfg))
    _progress(quiet, f"oracle-check: {cfg.ensemble} paths done "
                     f"(symplectic defect {est.max_symplectic_defect:.2e})")
    names = type(ode)._FIELDS
    rows = []
    worst = 0.0
    for k, name in enumerate(names):
        diff = np.abs(ode.data[k] - est.state.data[k])
        se = est.stderr[k]
        sig = diff / (3.0 * se + 1e-9)
        worst = max(worst, float(sig.max()))
        rows.append((name, float(diff.max()), float(se.max()),
                     float(sig.max()), bool(sig.max() <= 1.0)))
    path = out_dir / "oracle-check.csv"
    header = ["matrix", "max_abs_diff", "max_stderr", "max_diff_over_3se", "pass"]
    comments = _meta_lines(cfg, ensemble=cfg.ensemble, z_max=z_max,
                           symplectic_defect=f"{est.max_symplectic_defect:.3e}")
    written = [write_csv(path, comments, header, rows)]
    written += _maybe_json(path, cfg, header, rows)
    written.append(_write_meta(out_dir / "oracle-check.meta.json", cfg,
                               extra={"max_diff_over_3se": worst,
                                      "symplectic_defect": est.max_symplectic_defect}))
    return written


def run_kernel_check(cfg, out_dir, quiet):
    z_max = cfg.z_max if cfg.z_max is not None else 5.0 / cfg.c_s
    params = cfg.sim_params(g=0.0, gamma=0.0)
    zs, a0, _, _ = _green_trajectory(params, z_max)
    kern = MemoryKernel(params.c_s)
    exact = np.array([bessel_j(0, 2.0 * params.c_s * z) for z in zs])
    residual = memory_identity_residual(params, z_max)
    _progress(quiet, f"kernel-check: max residual {residual:.3e}")
    stride = max(1, len(zs) // 500)
    rows = [(zs[i], abs(a0[i] - exact[i]), kern(zs[i])) for i in range(0, len(zs), stride)]
    path = out_dir / "kernel-check.csv"
    header = ["z", "green_error", "kernel"]
    comments = _meta_lines(cfg, z_max=z_max, max_residual=f"{residual:.6e}")
    written = [write_csv(path, comments, header, rows)]
    written += _maybe_json(path, cfg, header, rows)
    written.append(_write_meta(out_dir / "kernel-check.meta.json", cfg,
                               extra={"max_residual": residual}))
    return written


def lattice_center_intensity(params: SimParams, z_max: float, sample_dz: float):
    """I(0, z) of the full moment system, sampled along the evolution."""
    zs, ivals = [0.0], [0.0]

    def obs(z, snap):
        zs.append(z)
        ivals.append(photon_number_profile(snap)[params.center])

    evolve(initial_vacuum(params), params, z_max, observer=obs, sample_dz=sample_dz)
    return np.array(zs), np.array(ivals)


def threshold_bracket_lattice(base: SimParams, g_lo: float = 1.5, g_hi: float = 2.2,
                              resolution: float = 0.05, z_max: float = 20.0,
                              window=(12.0, 20.0)) -> tuple[float, float]:
    """Threshold bracket from the full moment system's center intensity."""

    def is_exp(g):
        p = SimParams(n_sites=base.n_sites, c_s=base.c_s, g=g, gamma=0.0,
                      dz=base.dz, case=base.case)
        zs, ivals = lattice_center_intensity(p, z_max, sample_dz=0.1)
        return classify_growth(zs, ivals, window).exponential

    return bisect_threshold(is_exp, g_lo, g_hi, resolution)


def run_threshold_scan(cfg, out_dir, quiet):
    g_grid = cfg.g_grid or (1.5, 2.2)
    z_max = cfg.z_max if cfg.z_max is not None else 20.0
    window = (0.6 * z_max, z_max)
    params = cfg.sim_params()
    rows = []
    for g in g_grid:
        p = cfg.sim_params(g=g, gamma=0.0)
        zs, ivals = lattice_center_intensity(p, z_max, sample_dz=0.1)
        cls = classify_growth(zs, ivals, window)
        rows.append(("lattice", g, cls.slope_late, cls.exponential))
        traj = reduced_parametric_growth(p, z_max)
        cls_r = classify_growth(traj.z_grid, traj.intensity, window)
        rows.append(("reduced", g, cls_r.slope_late, cls_r.exponential))
        _progress(quiet, f"threshold-scan: classified g = {g:g}")
    lat = threshold_bracket_lattice(params, z_max=z_max, window=window)
    red = threshold_bracket_reduced(params, z_max=z_max, window=window)
    _progress(quiet, f"threshold-scan: lattice bracket {lat}, reduced bracket {red}")
    path = out_dir / "threshold-scan.csv"
    header = ["model", "g", "late_log_slope", "exponential"]
    comments = _meta_lines(cfg, z_max=z_max,
                           lattice_bracket=f"{_fmt(lat[0])}..{_fmt(lat[1])}",
                           reduced_bracket=f"{_fmt(red[0])}..{_fmt(red[1])}")
    written = [write_csv(path, comments, header, rows)]
    written += _maybe_json(path, cfg, header, rows)
    written.append(_write_meta(out_dir / "threshold-scan.meta.json", cfg,
                               extra={"lattice_bracket": list(lat),
                                      "reduced_bracket": list(red)}))
    return written


def run_purity_check(cfg, out_dir, quiet):
    z_max = cfg.z_max if cfg.z_max is not None else 5.0 / cfg.c_s
    params = cfg.sim_params()
    state = evolve(initial_vacuum(params), params, z_max)
    nu = symplectic_eigenvalues(full_covariance(state))
    deviation = float(np.max(np.abs(nu - 0.5)))
    _progress(quiet, f"purity-check: max |nu - 1/2| = {deviation:.3e}")
    rows = [(k, nu[k], abs(nu[k] - 0.5)) for k in range(len(nu))]
    path = out_dir / "purity-check.csv"
    header = ["mode", "symplectic_eigenvalue", "deviation"]
    comments = _meta_lines(cfg, z_max=z_max, max_deviation=f"{deviation:.6e}")
    written = [write_csv(path, comments, header, rows)]
    written += _maybe_json(path, cfg, header, rows)
    written.append(_write_meta(out_dir / "purity-check.meta.json", cfg,
                               extra={"max_deviation": deviation}))
    return written


EXPERIMENTS = {
    "intensity-profile": (run_intensity_profile,
                          "photon-number profile over guides at chosen z values"),
    "intensity-vs-z": (run_intensity_vs_z,
                       "central-guide photon number along z for a g grid"),
    "entangle-map": (run_entangle_map,
                     "pairwise log-negativity maps at chosen z values"),
    "stationary-sweep": (run_stationary_sweep,
                         "stationary pair log-negativity over a g grid"),
    "survival-distance": (run_survival_distance,
                          "entanglement survival distance under pump phase noise"),
    "noise-evolution": (run_noise_evolution,
                        "pair log-negativity along z with phase noise"),
    "oracle-check": (run_oracle_check,
                     "Monte-Carlo validation of the moment equations"),
    "kernel-check": (run_kernel_check,
                     "discrete diffraction and memory-kernel identity checks"),
    "threshold-scan": (run_threshold_scan,
                       "growth classification and threshold bisection"),
    "purity-check": (run_purity_check,
                     "symplectic spectrum of the full covariance matrix"),
}


def run(cfg: ExperimentConfig, out_dir: str | Path, quiet: bool = False) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner, _ = EXPERIMENTS[cfg.experiment]
    return runner(cfg, out_dir, quiet)
