"""Sectioned key=value run configuration.

    [physics]         a, eps, h            (h as "j,k:amp; j,k:amp")
    [discretization]  L, N, N_g, dt, scheme, calculus, milstein
    [kernel]          kind (constant | mollifier | off), alpha, rho
    [noise]           seed, burn_in
    [experiment]      free-form keys read by each subcommand

Unknown sections or keys in the fixed sections are errors; [experiment] is open.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SimConfig
from .kernel import make_constant_kernel, make_mollifier_kernel, make_zero_kernel
from .spectral import ModalField, SpectralBasis, build_basis, random_field, zeros
from . import noise as nz


class ConfigError(ValueError):
    pass


_KEYS = {
    "physics": {"a", "eps", "h"},
    "discretization": {"L", "N", "N_g", "dt", "scheme", "calculus", "milstein"},
    "kernel": {"kind", "alpha", "rho"},
    "noise": {"seed", "burn_in"},
}

DEFAULTS = {
    "physics": {"a": "2.0", "eps": "0.5", "h": ""},
    "discretization": {"L": "pi", "N": "8", "dt": "2^-10", "scheme": "exp-euler-rpde",
                       "calculus": "stratonovich", "milstein": "false"},
    "kernel": {"kind": "constant", "alpha": "1.0"},
    "noise": {"seed": "0", "burn_in": "20"},
}


def parse_number(text: str) -> float:
    """Floats plus the forms "pi", "2pi", "pi/4", "2^-10", "sqrt(2)" and products with "*"."""
    s = text.strip().lower().replace(" ", "")
    try:
        return float(s)
    except ValueError:
        pass
    if "*" in s:
        l, r = s.split("*", 1)
        return parse_number(l) * parse_number(r)
    if s.startswith("sqrt(") and s.endswith(")"):
        return float(np.sqrt(parse_number(s[5:-1])))
    if "/" in s:
        num, den = s.rsplit("/", 1)
        return parse_number(num) / parse_number(den)
    if "^" in s:
        base, exp = s.split("^", 1)
        return parse_number(base) ** parse_number(exp)
    if s.endswith("pi"):
        pre = s[:-2]
        return np.pi * (parse_number(pre) if pre else 1.0)
    raise ConfigError(f"cannot parse number {text!r}")


def parse_modes(text: str, basis: SpectralBasis) -> ModalField:
    """ "1,1:0.5; 2,1:-0.1" -> field with those coefficients; "" -> zero field."""
    xi = np.zeros(basis.n_modes)
    for item in filter(None, (p.strip() for p in text.split(";"))):
        try:
            jk, amp = item.split(":")
            j, k = (int(v) for v in jk.split(","))
            xi[basis.mode_index(j, k)] += parse_number(amp)
        except ValueError as e:
            raise ConfigError(f"bad mode entry {item!r}: {e}") from None
    return ModalField(basis, xi)


def parse_list(text: str, conv=parse_number) -> list:
    return [conv(v) for v in text.replace(";", ",").split(",") if v.strip()]


def parse_int_range(text: str) -> list[int]:
    """ "0-7" or "0,3,5" """
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return list(range(int(lo), int(hi) + 1))
    return parse_list(text, int)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    sim: SimConfig
    experiment: dict = field(default_factory=dict)
    text_hash: str = ""

    @property
    def basis(self) -> SpectralBasis:
        return self.sim.basis

    def exp_number(self, key: str, default=None) -> float:
        if key not in self.experiment:
            if default is None:
                raise ConfigError(f"[experiment] needs {key!r}")
            return default
        return parse_number(self.experiment[key])

    def exp_int(self, key: str, default=None) -> int:
        v = self.exp_number(key, default)
        if int(v) != v:
            raise ConfigError(f"[experiment] {key} must be an integer")
        return int(v)

    def exp_list(self, key: str, default=None) -> list[float]:
        if key not in self.experiment:
            if default is None:
                raise ConfigError(f"[experiment] needs {key!r}")
            return list(default)
        return parse_list(self.experiment[key])

    def exp_str(self, key: str, default: str | None = None) -> str:
        if key not in self.experiment:
            if default is None:
                raise ConfigError(f"[experiment] needs {key!r}")
            return default
        return self.experiment[key].strip()

    def initial_state(self, key: str = "u0", default: str = "1,1:1", index: int = 0) -> ModalField:
        """Mode list, or "random:<H-norm>" drawn from the config seed (purpose 3 stream).

        Distinct `index` values give independent random fields for the same seed.
        """
        text = self.exp_str(key, default)
        if text.startswith("random"):
            norm = parse_number(text.split(":", 1)[1]) if ":" in text else 1.0
            return random_field(self.basis, nz.stream(self.sim.seed, index, purpose=3), norm=norm)
        return parse_modes(text, self.basis)


def load_config(path=None, text: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_dict(DEFAULTS)
    if text is None:
        if path is None:
            raise ConfigError("no configuration given")
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    for sec in cp.sections():
        if sec == "experiment":
            continue
        if sec not in _KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        extra = set(cp[sec]) - _KEYS[sec]
        if extra:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")
    try:
        sim = _build_sim(cp)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None
    exp = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    return RunConfig(sim, exp, hashlib.sha256(text.encode()).hexdigest())


def _build_sim(cp) -> SimConfig:
    d = cp["discretization"]
    basis = build_basis(parse_number(d["L"]), int(parse_number(d["N"])))
    N_g = int(parse_number(d["N_g"])) if "N_g" in d else 2 * basis.N
    k = cp["kernel"]
    kind = k["kind"].strip()
    if kind == "constant":
        kernel = make_constant_kernel(parse_number(k["alpha"]))
    elif kind == "off":
        kernel = make_zero_kernel()
    elif kind == "mollifier":
        if "rho" not in k:
            raise ConfigError("mollifier kernel needs rho")
        kernel = make_mollifier_kernel(parse_number(k["rho"]), basis.L, N_g)
    else:
        raise ConfigError(f"unknown kernel kind {kind!r}")
    p = cp["physics"]
    h = parse_modes(p["h"], basis) if p["h"].strip() else zeros(basis)
    n = cp["noise"]
    return SimConfig(a=parse_number(p["a"]), eps=parse_number(p["eps"]), h=h, basis=basis,
                     kernel=kernel, dt=parse_number(d["dt"]), scheme=d["scheme"].strip(),
                     N_g=N_g, seed=int(parse_number(n["seed"])), burn_in=parse_number(n["burn_in"]),
                     calculus=d["calculus"].strip(), milstein=_bool(d["milstein"]))
