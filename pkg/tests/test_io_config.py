import json

import numpy as np
import pytest

from stochshe import io
from stochshe.config import (ConfigError, load_config, parse_int_range, parse_list, parse_modes,
                             parse_number)
from stochshe.spectral import build_basis, random_field


# ---- SHNF snapshots ------------------------------------------------------------------

def test_shnf_roundtrip(tmp_path, basis8):
    f = random_field(basis8, np.random.default_rng(0))
    p = tmp_path / "a.shnf"
    io.write_shnf(p, f)
    assert p.stat().st_size == 20 + 8 * basis8.n_modes
    g = io.read_shnf(p)
    np.testing.assert_array_equal(g.xi, f.xi)
    assert g.basis.N == 8 and g.basis.L == basis8.L
    assert io.read_shnf(p, basis8).basis is basis8


def test_shnf_errors(tmp_path, basis8, basis4):
    p = tmp_path / "a.shnf"
    io.write_shnf(p, random_field(basis8, np.random.default_rng(0)))
    with pytest.raises(ValueError, match="basis"):
        io.read_shnf(p, basis4)
    raw = p.read_bytes()
    (tmp_path / "m.shnf").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        io.read_shnf(tmp_path / "m.shnf")
    (tmp_path / "t.shnf").write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="coefficients"):
        io.read_shnf(tmp_path / "t.shnf")
    (tmp_path / "h.shnf").write_bytes(raw[:10])
    with pytest.raises(ValueError, match="header"):
        io.read_shnf(tmp_path / "h.shnf")
    (tmp_path / "v.shnf").write_bytes(raw[:4] + (9).to_bytes(4, "little") + raw[8:])
    with pytest.raises(ValueError, match="version"):
        io.read_shnf(tmp_path / "v.shnf")


# ---- CSV / SVG / manifest ------------------------------------------------------------------

def test_csv_roundtrip_exact(tmp_path):
    rows = [[0.1, 1 / 3, 2], [np.float64(np.pi), 1e-300, -0.0]]
    p = tmp_path / "x.csv"
    io.write_csv(p, ["a", "b", "c"], rows, comment="note")
    assert p.read_text().startswith("# note\na,b,c\n")
    header, data = io.read_csv(p)
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(data, np.array(rows, float))


def test_csv_empty_table(tmp_path):
    p = tmp_path / "e.csv"
    io.write_csv(p, ["a", "b"], [])
    header, data = io.read_csv(p)
    assert header == ["a", "b"] and data.shape == (0, 2)


def test_svg_output(tmp_path):
    p = tmp_path / "f.svg"
    x = np.linspace(0, 1, 5)
    io.svg_polyline(p, {"one": (x, x + 1), "two": (x, np.exp(x))}, title="t", logy=True, markers=True)
    text = p.read_text()
    assert text.startswith("<svg") and text.count("<polyline") == 2 and text.count("<circle") == 10


def test_svg_handles_degenerate_data(tmp_path):
    p = tmp_path / "g.svg"
    io.svg_polyline(p, {"flat": (np.zeros(3), np.zeros(3)), "nan": (np.ones(2), np.full(2, np.nan))})
    assert "<polyline" in p.read_text()


def test_manifest(tmp_path):
    m = io.RunManifest("simulate", "abc", [3], io.RunManifest.current_versions(), ["x.csv"], 1.5)
    m.write(tmp_path / "m.json")
    d = json.loads((tmp_path / "m.json").read_text())
    assert d["command"] == "simulate" and d["seeds"] == [3] and "numpy" in d["versions"]


def test_file_hash(tmp_path):
    (tmp_path / "a").write_bytes(b"abc")
    assert io.file_hash(tmp_path / "a") == \
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


# ---- configuration -----------------------------------------------------------------------

@pytest.mark.parametrize("text,value", [("1.5", 1.5), ("pi", np.pi), ("2pi", 2 * np.pi),
                                        ("pi/4", np.pi / 4), ("2^-10", 2.0**-10), ("sqrt(2)", np.sqrt(2)),
                                        ("3*pi", 3 * np.pi), (" 1e-3 ", 1e-3), ("pi*sqrt(2)", np.pi * np.sqrt(2))])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "abc", "pi/", "2^^3"])
def test_parse_number_rejects(text):
    with pytest.raises((ConfigError, ValueError, ZeroDivisionError)):
        parse_number(text)


def test_parse_modes(basis4):
    f = parse_modes("1,1:0.5; 2,1:-0.1", basis4)
    assert f.xi[basis4.mode_index(1, 1)] == 0.5 and f.xi[basis4.mode_index(2, 1)] == -0.1
    assert np.count_nonzero(f.xi) == 2
    assert not np.any(parse_modes("", basis4).xi)
    for bad in ("1:0.5", "9,9:1", "1,1"):
        with pytest.raises(ConfigError):
            parse_modes(bad, basis4)


def test_parse_lists():
    assert parse_list("0.8, 0.4;0.2") == [0.8, 0.4, 0.2]
    assert parse_int_range("0-3") == [0, 1, 2, 3]
    assert parse_int_range("1,5") == [1, 5]


def test_load_defaults():
    rc = load_config(text="[experiment]\nT = 2\n")
    s = rc.sim
    assert (s.a, s.eps, s.dt, s.scheme, s.basis.N, s.N_g) == (2.0, 0.5, 2.0**-10, "exp-euler-rpde", 8, 16)
    assert s.kernel.kind == "constant" and s.calculus == "stratonovich" and not s.milstein
    assert rc.exp_number("T") == 2.0 and rc.exp_number("missing", 7.0) == 7.0
    assert len(rc.text_hash) == 64


def test_load_full(tmp_path):
    text = """
[physics]
a = 3
eps = 0.25
h = 1,2:0.5
[discretization]
L = 2pi
N = 4
N_g = 32
dt = 2^-8
scheme = exp-em-spde
calculus = ito
milstein = yes
[kernel]
kind = mollifier
rho = pi/4
[noise]
seed = 17
burn_in = 10
[experiment]
u0 = random:2.0
seeds = 0-2
"""
    p = tmp_path / "c.ini"
    p.write_text(text)
    rc = load_config(p)
    s = rc.sim
    assert s.basis.L == pytest.approx(2 * np.pi) and s.N_g == 32 and s.seed == 17
    assert s.kernel.kind == "mollifier" and s.kernel.rho == pytest.approx(np.pi / 4)
    assert s.calculus == "ito" and s.milstein and s.burn_in == 10
    assert s.h.xi[s.basis.mode_index(1, 2)] == 0.5
    u0 = rc.initial_state()
    assert np.linalg.norm(u0.xi) == pytest.approx(2.0)
    np.testing.assert_array_equal(u0.xi, rc.initial_state().xi)


@pytest.mark.parametrize("text,match", [
    ("[bogus]\nx = 1\n", "unknown section"),
    ("[physics]\nalpha = 1\n", "unknown keys"),
    ("[kernel]\nkind = gaussian\n", "kernel kind"),
    ("[kernel]\nkind = mollifier\n", "rho"),
    ("[discretization]\ndt = 0\n", "dt"),
    ("[physics]\neps = 2\n", "eps"),
    ("[discretization]\nmilstein = maybe\n", "boolean"),
    ("not an ini", "section"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(text=text)


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")
    with pytest.raises(ConfigError):
        load_config()


def test_experiment_accessors():
    rc = load_config(text="[experiment]\nn = 3.5\nlst = 1,2\n")
    with pytest.raises(ConfigError):
        rc.exp_int("n")
    with pytest.raises(ConfigError):
        rc.exp_number("absent")
    assert rc.exp_list("lst") == [1.0, 2.0] and rc.exp_list("other", [3]) == [3]
    assert rc.exp_str("absent", "x") == "x"


def test_random_states_independent_by_index():
    rc = load_config(text="[experiment]\nu0 = random:1\nd = random:1\n")
    a, b = rc.initial_state(), rc.initial_state("d", index=1)
    assert abs(np.dot(a.xi, b.xi)) < 0.99
