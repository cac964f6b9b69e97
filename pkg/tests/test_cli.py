import json

import numpy as np
import pytest

from stochshe import io
from stochshe.cli import COMMANDS, main

BASE = """
[physics]
a = {a}
eps = {eps}
h = {h}
[discretization]
L = pi
N = 4
dt = 2^-7
[kernel]
kind = {kind}
[noise]
seed = 1
burn_in = 20
[experiment]
{exp}
"""


def write_cfg(tmp_path, exp="", a=2.0, eps=0.5, h="1,1:0.5", kind="constant", name="run.ini"):
    p = tmp_path / name
    p.write_text(BASE.format(a=a, eps=eps, h=h, kind=kind, exp=exp))
    return str(p)


def run(tmp_path, cmd, cfg, *extra, out="out"):
    return main([cmd, "--config", cfg, "--out", str(tmp_path / out), *extra])


def test_missing_config_exit_2(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "absent.ini"), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "usage:" in err and "cannot read config" in err


def test_missing_flag_is_usage_error():
    with pytest.raises(SystemExit) as ei:
        main(["simulate"])
    assert ei.value.code == 2


def test_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[physics]\nmystery = 1\n")
    assert run(tmp_path, "simulate", str(cfg)) == 2


def test_simulate_outputs_and_manifest(tmp_path):
    cfg = write_cfg(tmp_path, "T = 0.5\nstride = 4\nsnapshot_stride = 16\nu0 = 1,1:1")
    assert run(tmp_path, "simulate", cfg) == 0
    out = tmp_path / "out"
    header, data = io.read_csv(out / "trajectory.csv")
    assert header == ["t", "H", "V"] and data.shape == (65, 3)
    assert data[0, 1] == pytest.approx(1.0) and data[0, 2] == pytest.approx(2.0)
    snaps = sorted(out.glob("snap_*.shnf"))
    assert len(snaps) == 5
    np.testing.assert_allclose(np.linalg.norm(io.read_shnf(snaps[-1]).xi), data[-1, 1], rtol=1e-12)
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == "simulate" and m["seeds"] == [1]
    assert "trajectory.csv" in m["outputs"] and (out / "trajectory.svg").exists()


def test_simulate_reproducible_bytes(tmp_path):
    cfg = write_cfg(tmp_path, "T = 0.5")
    assert run(tmp_path, "simulate", cfg, out="a") == 0
    assert run(tmp_path, "simulate", cfg, out="b") == 0
    assert (tmp_path / "a/trajectory.csv").read_bytes() == (tmp_path / "b/trajectory.csv").read_bytes()
    assert run(tmp_path, "simulate", cfg, "--seed", "2", out="c") == 0
    assert (tmp_path / "a/trajectory.csv").read_bytes() != (tmp_path / "c/trajectory.csv").read_bytes()


def test_simulate_schemes_agree_without_noise(tmp_path):
    cfg = write_cfg(tmp_path, "T = 1.0")
    tables = []
    for scheme in ("exp-euler-rpde", "exp-em-spde"):
        assert run(tmp_path, "simulate", cfg, "--scheme", scheme, "--eps", "0", out=scheme) == 0
        tables.append(io.read_csv(tmp_path / scheme / "trajectory.csv")[1])
    assert np.max(np.abs(tables[0] - tables[1])) <= 1e-10


def test_simulate_blowup_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "T = 1.0", a=-50.0, eps=0.0, h="", kind="off")
    assert run(tmp_path, "simulate", cfg) == 1
    err = capsys.readouterr().err
    assert "numerical failure" in err and "t=" in err


def test_gronwall_zero_violations(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "n_instances = 50")
    assert run(tmp_path, "gronwall", cfg) == 0
    assert "0 violations in 50" in capsys.readouterr().out
    _, data = io.read_csv(tmp_path / "out/gronwall.csv")
    assert data[0, 0] == 50 and data[0, 2] == 0


def test_usc_eps_zero(tmp_path):
    cfg = write_cfg(tmp_path, "eps_grid = 0\nseeds = 0-1\nt_pullback = 2\nM = 2", h="")
    assert run(tmp_path, "usc", cfg, "--threads", "2") == 0
    header, data = io.read_csv(tmp_path / "out/usc.csv")
    assert header == ["eps", "seed", "t_pullback", "dist_V"]
    assert data.shape == (2, 4) and np.all(data[:, 3] == 0)


def test_usc_threads_do_not_change_results(tmp_path):
    cfg = write_cfg(tmp_path, "eps_grid = 0.5, 0.2\nseeds = 0-1\nt_pullback = 2\nM = 2", h="")
    assert run(tmp_path, "usc", cfg, "--threads", "1", out="one") == 0
    assert run(tmp_path, "usc", cfg, "--threads", "3", out="three") == 0
    assert (tmp_path / "one/usc.csv").read_bytes() == (tmp_path / "three/usc.csv").read_bytes()


def test_invmeasure_single_sample(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "T = 2^-7*8\nstride = 8\nM = 1")
    assert run(tmp_path, "invmeasure", cfg) == 0
    header, data = io.read_csv(tmp_path / "out/measure.csv")
    assert header == ["sample", "H", "V"] and data.shape == (1, 3)
    assert "1 samples" in capsys.readouterr().out


@pytest.mark.parametrize("cmd,exp,table", [
    ("pullback", "t_pullback = 2\nM = 3", "pullback.csv"),
    ("feller", "T = 0.25\nM = 4", "feller.csv"),
    ("hitting", "t = 0.5\nM = 32\nkappa = 0.1, 0.5, 2", "hitting.csv"),
    ("radii", "eps_grid = 0, 0.5, 1", "radii.csv"),
])
def test_other_commands(tmp_path, cmd, exp, table):
    cfg = write_cfg(tmp_path, exp)
    assert run(tmp_path, cmd, cfg) == 0
    header, data = io.read_csv(tmp_path / "out" / table)
    assert data.shape[0] >= 1 and np.all(np.isfinite(data))
    assert table in json.loads((tmp_path / "out/manifest.json").read_text())["outputs"]


def test_hitting_table_columns(tmp_path):
    cfg = write_cfg(tmp_path, "t = 0.5\nM = 32\nkappa = 0.05, 0.2, 1")
    assert run(tmp_path, "hitting", cfg) == 0
    header, data = io.read_csv(tmp_path / "out/hitting.csv")
    assert header == ["kappa", "t", "prob", "bound_shape", "fitted_bound"]
    assert np.all(np.diff(data[:, 2]) <= 0) and np.all(data[:, 4] >= data[:, 2])


def test_radii_zero_eps_row(tmp_path):
    cfg = write_cfg(tmp_path, "eps_grid = 0", h="")
    assert run(tmp_path, "radii", cfg) == 0
    header, data = io.read_csv(tmp_path / "out/radii.csv")
    row = dict(zip(header, data[0]))
    assert row["Meps"] == pytest.approx(0.5, abs=1e-6) and row["rho1_sq"] == pytest.approx(1.5, abs=1e-6)


def test_every_command_has_a_handler():
    from stochshe.cli import HANDLERS, build_parser
    assert set(HANDLERS) == set(COMMANDS)
    sub = build_parser()._subparsers._group_actions[0].choices
    assert set(sub) == set(COMMANDS)
