import csv
import json

import numpy as np
import pytest

from npslab.cli import main
from npslab.config import ConfigError, load_config

BASE_INI = """\
[params]
d1 = 1.0
d2 = 1.0
eps = 0.5
nu = 1.0
coupling = 1.0

[bc]
alpha1 = 1.0
alpha2 = 1.1
beta1 = 1.15
beta2 = 1.05
voltage = 0.1
length = 1.0

[grid]
n = 65

[evolve]
nx = 16
ny = 8
dt = 0.005
t_end = 0.05
output_every = 2
initial = random-bounded
seed = 7
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(BASE_INI)
    return p


def test_load_config_round_trip(cfg_path):
    cfg = load_config(cfg_path)
    assert cfg.params.eps == 0.5
    assert cfg.bc.alpha2 == 1.1
    assert cfg.grid.n == 65
    assert cfg.evolve["seed"] == 7


def test_unknown_key_is_config_error(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text(BASE_INI + "\n[params]\n")  # duplicate section
    bad = tmp_path / "bad2.ini"
    bad.write_text(BASE_INI.replace("eps = 0.5", "epsilon = 0.5"))
    with pytest.raises(ConfigError):
        load_config(bad)


def test_missing_bc_section_is_config_error(tmp_path):
    p = tmp_path / "nobc.ini"
    p.write_text("[params]\nd1 = 1.0\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_cli_steady_writes_outputs(cfg_path, tmp_path):
    out = tmp_path / "out"
    assert main(["steady", "--config", str(cfg_path), "--out", str(out)]) == 0
    summary = json.loads((out / "steady_summary.json").read_text())
    assert 0.0 < summary["j1"] < 1.0
    table = np.loadtxt(out / "state.txt", skiprows=1)
    assert table.shape[0] == 65 and table.shape[1] == 8


def test_cli_criteria_summary(cfg_path, tmp_path):
    out = tmp_path / "out"
    assert main(["criteria", "--config", str(cfg_path), "--out", str(out)]) == 0
    summary = json.loads((out / "criteria_summary.json").read_text())
    assert summary["report"]["weak_current_ok"] is True
    assert summary["best_kappa"] > 0.0


def test_cli_evolve_diagnostics(cfg_path, tmp_path):
    out = tmp_path / "out"
    assert main(["evolve", "--config", str(cfg_path), "--out", str(out)]) == 0
    with open(out / "diagnostics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and "energy_f" in rows[0]
    energies = [float(r["energy_f"]) for r in rows]
    assert energies[-1] < energies[0]
    summary = json.loads((out / "evolve_summary.json").read_text())
    assert "max_divergence" in summary


def test_cli_flowcheck(tmp_path):
    th = 2 * np.pi * np.arange(64) / 64
    rows = np.column_stack([th, np.cos(th), np.sin(th),
                            1.0 + np.cos(th), np.ones(64), np.sin(th)])
    curve = tmp_path / "curve.txt"
    curve.write_text("\n".join(" ".join(repr(float(v)) for v in r) for r in rows))
    out = tmp_path / "out"
    assert main(["flowcheck", str(curve), "--out", str(out)]) == 0
    summary = json.loads((out / "flowcheck_summary.json").read_text())
    assert abs(summary["i1"] - np.pi) < 1e-6


def test_cli_config_errors_exit_64(cfg_path, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(BASE_INI.replace("eps = 0.5", "epsilon = 0.5"))
    assert main(["steady", "--config", str(bad), "--out", str(tmp_path)]) == 64
    ragged = tmp_path / "curve.txt"
    ragged.write_text("0 0 0\n1 1 1\n")
    assert main(["flowcheck", str(ragged), "--out", str(tmp_path)]) == 64


def test_cli_missing_file_exits_nonzero(tmp_path):
    assert main(["steady", "--config", str(tmp_path / "absent.ini"),
                 "--out", str(tmp_path)]) != 0


def test_cli_sweep(cfg_path, tmp_path):
    ini = cfg_path.read_text() + "\n[sweep]\nvoltage = 0.0, 0.1\neps = 0.5 1.0\n"
    p = tmp_path / "sweep.ini"
    p.write_text(ini)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(p), "--out", str(out), "--jobs", "2"]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert {"voltage", "eps", "j1", "weak_current_ok"} <= set(rows[0])
