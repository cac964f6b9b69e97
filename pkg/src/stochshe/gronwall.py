"""Brute-force verifier for the stochastic Gronwall lemma on finite, discrete instances.

An instance holds M equally likely sample paths of nonnegative processes X, Y, Z, R
on a common time grid. Expectations are exact path averages, time integrals are
trapezoidal on the grid, and "stopping times" range over deterministic grid times.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid


@dataclass(frozen=True, eq=False)
class DiscreteInstance:
    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    R: np.ndarray
    kappa: float

    def __post_init__(self):
        t = np.asarray(self.t, float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0) or t[0] != 0:
            raise ValueError("grid must be increasing and start at 0")
        for name in "XYZR":
            arr = np.atleast_2d(np.asarray(getattr(self, name), float))
            if arr.shape[1] != t.size:
                raise ValueError(f"{name} must have shape (M, {t.size})")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "t", t)
        if np.any(self.integral_R() > self.kappa * (1 + 1e-12)):
            raise ValueError("∫R exceeds kappa on some path")

    @property
    def M(self) -> int:
        return self.X.shape[0]

    @property
    def T(self) -> float:
        return float(self.t[-1])

    def integral_R(self) -> np.ndarray:
        return trapezoid(self.R, self.t, axis=1)

    def to_json(self) -> str:
        return json.dumps({"t": self.t.tolist(), "kappa": self.kappa,
                           **{k: getattr(self, k).tolist() for k in "XYZR"}})

    @classmethod
    def from_json(cls, text: str) -> DiscreteInstance:
        d = json.loads(text)
        return cls(**{k: np.asarray(d[k]) for k in ("t", "X", "Y", "Z", "R")}, kappa=d["kappa"])


class _Sums:
    """Path-averaged cumulative integrals and running suprema for O(1) pair queries."""

    def __init__(self, inst: DiscreteInstance):
        t = inst.t
        cum = lambda f: cumulative_trapezoid(f, t, axis=1, initial=0.0)  # noqa: E731
        self.inst = inst
        self.Y = cum(inst.Y)
        self.RXZ = cum(inst.R * inst.X + inst.Z)
        self.Zc = cum(inst.Z)

    def lhs(self, i: int, j: int) -> float:
        X = self.inst.X
        return float(np.mean(X[:, i:j + 1].max(axis=1) + self.Y[:, j] - self.Y[:, i]))

    def rhs(self, i: int, j: int) -> float:
        return float(np.mean(self.inst.X[:, i] + self.RXZ[:, j] - self.RXZ[:, i]))


def _tol(x: float) -> float:
    return 1e-12 * max(1.0, abs(x))


def window_pairs(t: np.ndarray, window: float):
    """Grid index pairs i < j with t_j - t_i <= window (the gap may equal the window)."""
    if not window > 0:
        raise ValueError("window must be positive")
    for i in range(t.size - 1):
        for j in range(i + 1, t.size):
            if t[j] - t[i] > window * (1 + 1e-12):
                break
            yield i, j


@dataclass(frozen=True)
class HypothesisResult:
    holds: bool
    worst_pair: tuple[float, float] | None
    worst_excess: float


def check_hypothesis(inst: DiscreteInstance, window: float, C: float) -> HypothesisResult:
    """E(sup_{[τ',τ'']}X + ∫Y) <= C E(X(τ') + ∫(RX + Z)) for all grid pairs within the window.

    worst_pair is the pair with the largest excess lhs − C·rhs (reported even when
    the hypothesis holds, then with nonpositive excess).
    """
    s = _Sums(inst)
    worst, excess = None, -np.inf
    holds = True
    for i, j in window_pairs(inst.t, window):
        lhs, rhs = s.lhs(i, j), C * s.rhs(i, j)
        e = lhs - rhs
        if e > excess:
            worst, excess = (float(inst.t[i]), float(inst.t[j])), e
        if e > _tol(rhs):
            holds = False
    return HypothesisResult(holds, worst, float(excess))


def n_cells(window: float, T: float) -> int:
    """Cells of length at most `window` needed to cover [0, T]."""
    if not window > 0:
        raise ValueError("window must be positive")
    return max(1, math.ceil(T / window - 1e-12))


def induction_constant(window: float, C_window: float, T: float) -> float:
    """(1 + C_window)^{number of window cells covering [0, T]}."""
    return (1.0 + C_window) ** n_cells(window, T)


def grid_partition(t: np.ndarray, window: float) -> list[int]:
    """Greedy grid partition 0 = k_0 < ... < k_n = last index with cells no longer than window."""
    idx = [0]
    while idx[-1] < t.size - 1:
        i = idx[-1]
        j = i + 1
        if t[j] - t[i] > window * (1 + 1e-12):
            raise ValueError("grid step exceeds the window")
        while j + 1 < t.size and t[j + 1] - t[i] <= window * (1 + 1e-12):
            j += 1
        idx.append(j)
    return idx


@dataclass(frozen=True)
class ConclusionResult:
    holds: bool
    achieved_ratio: float


def _ratio_check(lhs: float, rhs: float, C: float) -> ConclusionResult:
    if rhs == 0:
        return ConclusionResult(lhs <= 0, 0.0 if lhs <= 0 else np.inf)
    return ConclusionResult(lhs <= C * rhs + _tol(C * rhs), lhs / rhs)


def verify_conclusion(inst: DiscreteInstance, C: float) -> ConclusionResult:
    """E(sup_{[0,T]}X + ∫₀ᵀY) <= C·E(X(0) + ∫₀ᵀZ); achieved_ratio is lhs/rhs."""
    lhs = float(np.mean(inst.X.max(axis=1) + trapezoid(inst.Y, inst.t, axis=1)))
    rhs = float(np.mean(inst.X[:, 0] + trapezoid(inst.Z, inst.t, axis=1)))
    return _ratio_check(lhs, rhs, C)


def verify_induction_bound(inst: DiscreteInstance, window: float, C_window: float) -> ConclusionResult:
    """The chained estimate from the induction over window cells, pair (0, T):

    E(sup X + ∫Y) <= (1 + C)^{n} E(X(0) + ∫(RX + Z)), n = cells of the grid partition.
    Unlike verify_conclusion it keeps the RX term, which the finite check cannot
    absorb without the stopping-time localization.
    """
    s = _Sums(inst)
    n = len(grid_partition(inst.t, window)) - 1
    last = inst.t.size - 1
    return _ratio_check(s.lhs(0, last), s.rhs(0, last), (1.0 + C_window) ** n)


def random_instance(rng: np.random.Generator, n_intervals: int = 8, M: int = 4, T: float = 1.0,
                    kappa: float = 1.0, mean: float = 1.0, sd: float = 0.5) -> DiscreteInstance:
    """Arrays from Gaussians clipped at 0; R rescaled per path so that ∫R <= kappa."""
    t = np.linspace(0.0, T, n_intervals + 1)
    draw = lambda: np.clip(rng.normal(mean, sd, (M, t.size)), 0.0, None)  # noqa: E731
    X, Y, Z, R = draw(), draw(), draw(), draw()
    ir = trapezoid(R, t, axis=1)
    scale = np.where(ir > kappa, kappa / np.where(ir > 0, ir, 1.0), 1.0)
    R = R * scale[:, None]
    return DiscreteInstance(t, X, Y, Z, R, kappa)


@dataclass(frozen=True)
class SuiteResult:
    n_passing: int
    n_drawn: int
    violations: list[int]
    worst_ratio: float
    constant: float


def run_suite(seed: int = 0, n_instances: int = 1000, C0: float = 2.0, window_frac: float = 0.25,
              max_draws: int = 1_000_000, **instance_kw) -> SuiteResult:
    """Draw instances until n_instances satisfy the windowed hypothesis; check the conclusion on each.

    violations lists the draw indices whose conclusion fails with the induction constant.
    """
    rng = np.random.default_rng(seed)
    T = instance_kw.get("T", 1.0)
    window = window_frac * T
    C = induction_constant(window, C0, T)
    passing = drawn = 0
    violations, worst = [], 0.0
    while passing < n_instances:
        if drawn >= max_draws:
            raise RuntimeError(f"only {passing} of {drawn} draws satisfied the hypothesis")
        inst = random_instance(rng, **instance_kw)
        drawn += 1
        if not check_hypothesis(inst, window, C0).holds:
            continue
        passing += 1
        res = verify_conclusion(inst, C)
        worst = max(worst, res.achieved_ratio)
        if not res.holds:
            violations.append(drawn - 1)
    return SuiteResult(passing, drawn, violations, worst, C)
