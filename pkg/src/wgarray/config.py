"""Key/value experiment configuration with line-precise validation.

Config files are plain text: one ``key = value`` assignment per line,
``#`` comments, blank lines ignored.  Lists are comma separated; pairs of
guide indices use ``m,n`` and lists of pairs use ``;`` between pairs.
Unknown keys are rejected.  Command-line ``--set key=value`` overrides
win over file values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .params import Case, SimParams


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


EXPERIMENT_NAMES = (
    "intensity-profile",
    "intensity-vs-z",
    "entangle-map",
    "stationary-sweep",
    "survival-distance",
    "noise-evolution",
    "oracle-check",
    "kernel-check",
    "threshold-scan",
    "purity-check",
)


@dataclass
class ExperimentConfig:
    experiment: str = ""
    n_sites: int = 257
    c_s: float = 1.0
    g: float = 1.0
    gamma: float = 0.0
    dz: float = 1e-3
    case: str = "degenerate"
    z_max: float | None = None
    z_values: tuple = ()
    g_grid: tuple = ()
    gamma_grid: tuple = ()
    pair: tuple = (1, -1)
    pairs: tuple = ()
    eps: float = 1e-4
    plateau_tol: float = 1e-4
    sample_dz: float = 0.05
    ensemble: int = 2000
    seed: int = 12345
    chunk: int = 512
    workers: int = 0
    json_mirror: bool = False

    def sim_params(self, **over) -> SimParams:
        kw = dict(n_sites=self.n_sites, c_s=self.c_s, g=self.g,
                  gamma=self.gamma, dz=self.dz)
        case = over.pop("case", self.case)
        kw.update(over)
        kw["case"] = case if isinstance(case, Case) else Case(case)
        return SimParams(**kw)

    def resolved(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def _p_int(s):
    return int(s, 0)


def _p_float(s):
    return float(s)


def _p_bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _p_str(s):
    return s.strip()


def _p_floats(s):
    items = [x for x in s.split(",") if x.strip()]
    return tuple(float(x) for x in items)


def _p_pair(s):
    parts = [x for x in s.split(",") if x.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected 'm,n', got {s!r}")
    return (int(parts[0]), int(parts[1]))


def _p_pairs(s):
    return tuple(_p_pair(group) for group in s.split(";") if group.strip())


_SCHEMA = {
    "experiment": _p_str,
    "n_sites": _p_int,
    "c_s": _p_float,
    "g": _p_float,
    "gamma": _p_float,
    "dz": _p_float,
    "case": _p_str,
    "z_max": _p_float,
    "z_values": _p_floats,
    "g_grid": _p_floats,
    "gamma_grid": _p_floats,
    "pair": _p_pair,
    "pairs": _p_pairs,
    "eps": _p_float,
    "plateau_tol": _p_float,
    "sample_dz": _p_float,
    "ensemble": _p_int,
    "seed": _p_int,
    "chunk": _p_int,
    "workers": _p_int,
    "json_mirror": _p_bool,
}


def _assign(cfg: ExperimentConfig, key: str, raw: str, where: str):
    if key not in _SCHEMA:
        known = ", ".join(sorted(_SCHEMA))
        raise ConfigError(f"{where}: unknown key {key!r} (known keys: {known})")
    try:
        value = _SCHEMA[key](raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: invalid value for {key!r}: {exc}") from None
    setattr(cfg, key, value)


def parse_config_file(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    cfg = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        _assign(cfg, key.strip(), raw.strip(), f"{path}:{lineno}")
    return cfg


def apply_overrides(cfg: ExperimentConfig, pairs: list[str]) -> ExperimentConfig:
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        _assign(cfg, key.strip(), raw.strip(), f"--set {key.strip()}")
    return cfg


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Cross-field checks; raises ConfigError with a precise message."""
    if cfg.experiment not in EXPERIMENT_NAMES:
        raise ConfigError(
            f"experiment must be one of {', '.join(EXPERIMENT_NAMES)}; "
            f"got {cfg.experiment!r}"
        )
    if cfg.case not in ("degenerate", "general", "both"):
        raise ConfigError(f"case must be degenerate, general or both; got {cfg.case!r}")
    if cfg.case == "both" and cfg.experiment not in ("entangle-map",):
        raise ConfigError("case = both is only supported by entangle-map")
    try:
        case = Case.DEGENERATE if cfg.case == "both" else Case(cfg.case)
        SimParams(n_sites=cfg.n_sites, c_s=cfg.c_s, g=cfg.g, gamma=cfg.gamma,
                  dz=cfg.dz, case=case)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.eps <= 0:
        raise ConfigError(f"eps must be > 0, got {cfg.eps}")
    if cfg.plateau_tol <= 0:
        raise ConfigError(f"plateau_tol must be > 0, got {cfg.plateau_tol}")
    if cfg.sample_dz < cfg.dz:
        raise ConfigError("sample_dz must be >= dz")
    if cfg.ensemble < 2:
        raise ConfigError("ensemble must be >= 2")
    if cfg.workers < 0:
        raise ConfigError("workers must be >= 0 (0 = machine parallelism)")
    if cfg.experiment == "oracle-check" and cfg.n_sites > 41:
        raise ConfigError("oracle-check lattices are capped at n_sites = 41")
    if cfg.experiment == "survival-distance":
        grid = cfg.gamma_grid or (cfg.gamma,)
        if any(gam < 0 for gam in grid):
            raise ConfigError("gamma values must be >= 0")
    m = cfg.n_sites // 2
    for p in (cfg.pair, *cfg.pairs):
        if not (-m <= p[0] <= m and -m <= p[1] <= m):
            raise ConfigError(f"pair {p} outside the lattice range -{m}..{m}")
    return cfg
