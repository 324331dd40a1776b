import json
from pathlib import Path

import pytest

from wgarray.cli import main
from wgarray.config import ConfigError, parse_config_file, validate, apply_overrides


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


BASE = """
# tiny smoke configuration
experiment = intensity-profile
n_sites = 9
c_s = 1.0
g = 1.0
dz = 0.01
z_values = 0.5, 1.0
"""


def test_parse_and_validate(tmp_path):
    cfg = parse_config_file(write_cfg(tmp_path, BASE))
    validate(cfg)
    assert cfg.n_sites == 9
    assert cfg.z_values == (0.5, 1.0)


def test_unknown_key_reports_line(tmp_path):
    text = BASE + "\nwavelength = 800\n"
    lineno = text.splitlines().index("wavelength = 800") + 1
    path = write_cfg(tmp_path, text)
    with pytest.raises(ConfigError) as err:
        parse_config_file(path)
    assert "wavelength" in str(err.value)
    assert f":{lineno}:" in str(err.value)  # line-precise


def test_bad_value_reports_line(tmp_path):
    path = write_cfg(tmp_path, "experiment = intensity-profile\nn_sites = many\n")
    with pytest.raises(ConfigError) as err:
        parse_config_file(path)
    assert ":2" in str(err.value)


def test_overrides_win(tmp_path):
    cfg = parse_config_file(write_cfg(tmp_path, BASE))
    apply_overrides(cfg, ["n_sites=11", "g=0.5"])
    assert cfg.n_sites == 11
    assert cfg.g == 0.5


def test_validate_catches_cross_field(tmp_path):
    cfg = parse_config_file(write_cfg(tmp_path, BASE))
    cfg.n_sites = 8  # even
    with pytest.raises(ConfigError):
        validate(cfg)
    cfg2 = parse_config_file(write_cfg(tmp_path, BASE))
    cfg2.experiment = "does-not-exist"
    with pytest.raises(ConfigError):
        validate(cfg2)
    cfg3 = parse_config_file(write_cfg(tmp_path, BASE))
    cfg3.pair = (0, 99)
    with pytest.raises(ConfigError):
        validate(cfg3)


def test_cli_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    for name in ("intensity-profile", "oracle-check", "threshold-scan"):
        assert name in out


def test_cli_validate_echoes_resolved(tmp_path, capsys):
    path = write_cfg(tmp_path, BASE)
    assert main(["validate", "--config", str(path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["experiment"] == "intensity-profile"
    assert doc["dz"] == 0.01
    assert doc["seed"] == 12345  # default materialized


def test_cli_config_error_exit_code(tmp_path):
    path = write_cfg(tmp_path, "experiment = nope\n")
    assert main(["validate", "--config", str(path)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg"), "--quiet"]) == 2


def test_cli_run_intensity_profile(tmp_path):
    path = write_cfg(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--out", str(out), "--quiet"]) == 0
    csv = (out / "intensity-profile.csv").read_text().splitlines()
    meta = json.loads((out / "intensity-profile.meta.json").read_text())
    assert meta["config"]["n_sites"] == 9
    assert meta["version"]
    header = [ln for ln in csv if not ln.startswith("#")][0]
    assert header == "z,n,intensity"
    rows = [ln for ln in csv if not ln.startswith("#")][1:]
    assert len(rows) == 2 * 9


def test_cli_byte_identical_reruns(tmp_path):
    path = write_cfg(tmp_path, BASE)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["run", "--config", str(path), "--out", str(out),
                     "--quiet"]) == 0
        outs.append((out / "intensity-profile.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_seed_flag_overrides(tmp_path):
    path = write_cfg(tmp_path, BASE)
    out = tmp_path / "seeded"
    assert main(["run", "--config", str(path), "--out", str(out), "--seed",
                 "777", "--quiet"]) == 0
    meta = json.loads((out / "intensity-profile.meta.json").read_text())
    assert meta["config"]["seed"] == 777


def test_cli_numerical_failure_exit_code(tmp_path):
    # c_s = 0 bypasses the dz guard; a huge gain then overflows RK4
    cfg = """
experiment = intensity-profile
n_sites = 5
c_s = 0.0
g = 400.0
dz = 0.05
z_values = 40.0
"""
    path = write_cfg(tmp_path, cfg)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o"),
                 "--quiet"]) == 3


def test_cli_kernel_check_run(tmp_path):
    cfg = """
experiment = kernel-check
n_sites = 61
c_s = 1.0
dz = 0.002
z_max = 1.5
"""
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "kc"
    assert main(["run", "--config", str(path), "--out", str(out), "--quiet"]) == 0
    meta = json.loads((out / "kernel-check.meta.json").read_text())
    assert meta["results"]["max_residual"] < 1e-4


def test_cli_oracle_check_run(tmp_path):
    cfg = """
experiment = oracle-check
n_sites = 7
c_s = 1.0
g = 1.0
gamma = 0.02
dz = 0.01
z_max = 1.0
ensemble = 300
seed = 4
workers = 1
"""
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "oc"
    assert main(["run", "--config", str(path), "--out", str(out), "--quiet"]) == 0
    meta = json.loads((out / "oracle-check.meta.json").read_text())
    assert meta["results"]["max_diff_over_3se"] <= 1.0


def test_cli_entangle_map_both_cases(tmp_path):
    cfg = """
experiment = entangle-map
n_sites = 11
c_s = 1.0
g = 1.0
dz = 0.01
case = both
z_values = 1.0
json_mirror = true
"""
    path = write_cfg(tmp_path, cfg)
    out = tmp_path / "em"
    assert main(["run", "--config", str(path), "--out", str(out), "--quiet"]) == 0
    text = (out / "entangle-map.csv").read_text()
    assert "degenerate" in text and "general" in text
    assert (out / "entangle-map.json").exists()


def test_workers_env_var(monkeypatch, tmp_path):
    from wgarray.config import ExperimentConfig
    from wgarray.experiments import _workers

    cfg = ExperimentConfig(experiment="intensity-profile")
    monkeypatch.setenv("WGARRAY_WORKERS", "3")
    assert _workers(cfg) == 3
    cfg.workers = 2  # config overrides the environment
    assert _workers(cfg) == 2
