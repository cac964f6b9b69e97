"""Invariant-measure diagnostics: occupation measures, moments, coupling and stopping times.

Expectations are Monte Carlo averages over independent noise paths drawn from the
counter-based streams of `noise`; path i of seed s is the same in every routine, so
results for nested ensembles (M = 32 inside M = 64) share their first paths.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .dynamics import BlowUpError, SimConfig, Trajectory, ensemble_noise, integrate_arrays
from .spectral import ModalField, SpectralBasis


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniformly weighted sample of states, shape (n_samples, n_modes)."""
    basis: SpectralBasis
    samples: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, float))
        if s.shape[0] == 0:
            raise ValueError("empirical measure needs at least one sample")
        if s.shape[1] != self.basis.n_modes:
            raise ValueError("samples must share the measure's basis")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self), 1.0 / len(self))

    @classmethod
    def from_fields(cls, fields: list[ModalField], **provenance) -> EmpiricalMeasure:
        return cls(fields[0].basis, np.array([f.xi for f in fields]), dict(provenance))


def moment(nu: EmpiricalMeasure, p: float) -> float:
    """∫‖u‖^{2p} ν(du)."""
    if p < 1:
        raise ValueError(f"moment order p must be >= 1, got {p}")
    sq = np.sum(nu.samples**2, axis=1)
    return float(np.dot(nu.weights, sq**p))


def _n_steps(cfg: SimConfig, T: float) -> int:
    n = int(round(T / cfg.dt))
    if n < 1 or abs(n * cfg.dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"horizon T={T} is not a positive multiple of dt={cfg.dt}")
    return n


def run_ensemble(cfg: SimConfig, u0, T: float, M: int, stride: int = 1, seed: int | None = None,
                 path_offset: int = 0, on_blowup: str = "drop") -> Trajectory:
    """M independent paths of [0, T] from a common (or per-path) initial state."""
    n = _n_steps(cfg, T)
    u0 = np.asarray(u0.xi if isinstance(u0, ModalField) else u0, float)
    _, dw, z = ensemble_noise(cfg, 0.0, n * cfg.dt, range(path_offset, path_offset + M), seed)
    if u0.ndim == 1:
        u0 = np.broadcast_to(u0, (M, u0.size)).copy()
    return integrate_arrays(cfg, u0, dw, z, t0=0.0, stride=stride, on_blowup=on_blowup)


def krylov_bogoliubov(cfg: SimConfig, u0: ModalField, T: float, stride: int, M_paths: int,
                      seed: int | None = None) -> EmpiricalMeasure:
    """Pooled occupation measure of M_paths trajectories, sampled every `stride` steps on (0, T].

    Blown-up paths are dropped and listed in provenance["dropped"]; if every path
    blows up a BlowUpError is raised.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    n = _n_steps(cfg, T)
    if stride < 1 or n % stride:
        raise ValueError(f"stride {stride} must divide the step count {n}")
    tr = run_ensemble(cfg, u0, T, M_paths, stride=stride, seed=seed)
    keep = ~tr.failed
    if not keep.any():
        raise BlowUpError(T, norm=np.inf)
    samples = tr.states[1:, keep, :].reshape(-1, cfg.basis.n_modes)
    seed = cfg.seed if seed is None else seed
    prov = {"T": T, "stride": stride, "seed": seed, "paths": list(range(M_paths)),
            "dropped": np.flatnonzero(~keep).tolist(), "u0": np.asarray(u0.xi).tolist()}
    return EmpiricalMeasure(cfg.basis, samples, prov)


@dataclass(frozen=True)
class FellerReport:
    e_sup_sq_diff: float
    ratio: float
    per_path: np.ndarray = field(repr=False)


def feller_probe(cfg: SimConfig, u10: ModalField, u20: ModalField, T: float, M_paths: int,
                 seed: int | None = None, kappa: float | None = None) -> FellerReport:
    """Synchronous coupling: E sup_{[0,T]}‖u₁ − u₂‖² with identical noise per path.

    With `kappa` the supremum is taken up to the coupled stopping time
    τ¹_κ(u10) ∧ τ¹_κ(u20) instead of T. Equal initial states give a zero
    difference; their ratio is reported as 0 (and as inf should the runs ever differ).
    """
    d0 = float(np.sum((u10.xi - u20.xi) ** 2))
    n = _n_steps(cfg, T)
    _, dw, z = ensemble_noise(cfg, 0.0, n * cfg.dt, range(M_paths), seed)
    runs = []
    for u in (u10, u20):
        u0 = np.broadcast_to(u.xi, (M_paths, u.xi.size)).copy()
        runs.append(integrate_arrays(cfg, u0, dw, z, stride=1, on_blowup="raise"))
    diff = np.sum((runs[0].states - runs[1].states) ** 2, axis=-1)  # (n + 1, M)
    if kappa is not None:
        spec = HittingTimeSpec("integral", 1.0, kappa)
        tau = np.minimum(hitting_time(runs[0], spec), hitting_time(runs[1], spec))
        mask = runs[0].step_times[:, None] <= tau[None, :]
        diff = np.where(mask, diff, 0.0)
    sup = diff.max(axis=0)
    e = float(np.mean(sup))
    ratio = e / d0 if d0 > 0 else (0.0 if e == 0 else np.inf)
    return FellerReport(e_sup_sq_diff=e, ratio=ratio, per_path=sup)


@dataclass(frozen=True)
class HittingTimeSpec:
    """kind "integral": τ^p_κ = inf{t: ∫₀ᵗ‖u‖^{2p} > κ}; "regularization": τ̂_κ = inf{t: t‖Δu‖² > κ}.

    kappa_aux is the κ of the auxiliary τ²_κ entering the regularization bound shape.
    """
    kind: str
    p: float
    kappa: float
    kappa_aux: float = 1.0

    def __post_init__(self):
        if self.kind not in ("integral", "regularization"):
            raise ValueError(f"unknown hitting-time kind {self.kind!r}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not (self.kappa > 0 and self.kappa_aux > 0):
            raise ValueError("thresholds must be positive")


def _first_exceedance(times: np.ndarray, values: np.ndarray, level: float) -> np.ndarray:
    """First time per column with value > level (NaN, i.e. blow-up, counts); inf otherwise."""
    hit = ~(values <= level)
    first = np.argmax(hit, axis=0)
    return np.where(hit.any(axis=0), times[first], np.inf)


def hitting_time(traj: Trajectory, spec: HittingTimeSpec) -> np.ndarray:
    """Per-member first grid time of the event, np.inf when it never occurs in the horizon.

    Grid evaluation is right-continuous first exceedance, so the bias is at most one
    step. A member that blew up counts as hit at its failure time.
    """
    t = traj.step_times
    if spec.kind == "integral":
        g = traj.h_norms ** (2 * spec.p)
        cum = cumulative_trapezoid(g, t, axis=0, initial=0.0)
        return _first_exceedance(t, cum, spec.kappa)
    reg = (t - t[0])[:, None] * traj.v_norms**2
    return _first_exceedance(t, reg, spec.kappa)


def bound_shape(spec: HittingTimeSpec, t: float, e_u0: dict, h_norm: float) -> float:
    """Right-hand side shape of the Markov-inequality bounds with unit constants.

    e_u0 maps a power q to E‖u0‖^q. Integral kind: κ⁻¹ t [E‖u0‖^{2p} + (‖h‖^{2p}+1) t].
    Regularization kind: κ̂⁻¹[E‖u0‖² + (‖h‖²+1)t + ‖h‖²t²] + κ⁻¹ t [E‖u0‖⁴ + (‖h‖⁴+1) t].
    """
    if spec.kind == "integral":
        q = 2 * spec.p
        return t / spec.kappa * (e_u0[q] + (h_norm**q + 1) * t)
    first = (e_u0[2] + (h_norm**2 + 1) * t + h_norm**2 * t**2) / spec.kappa
    second = t / spec.kappa_aux * (e_u0[4] + (h_norm**4 + 1) * t)
    return first + second


@dataclass(frozen=True)
class HittingReport:
    prob: float
    shape: float
    taus: np.ndarray = field(repr=False)


def hitting_prob(cfg: SimConfig, spec: HittingTimeSpec, t: float, M_paths: int, u0: ModalField,
                 seed: int | None = None, path_offset: int = 0) -> HittingReport:
    """Empirical P(τ < t) over M_paths paths, next to the unit-constant bound shape."""
    if M_paths < 32:
        raise ValueError(f"need at least 32 paths, got {M_paths}")
    tr = run_ensemble(cfg, u0, t, M_paths, stride=_n_steps(cfg, t), seed=seed,
                      path_offset=path_offset)
    return hitting_report(tr, spec, t, u0, cfg.h)


def hitting_report(tr: Trajectory, spec: HittingTimeSpec, t: float, u0: ModalField,
                   h: ModalField) -> HittingReport:
    taus = hitting_time(tr, spec)
    n0 = float(np.linalg.norm(u0.xi))
    e_u0 = {q: n0**q for q in (2, 4, 2 * spec.p)}
    shape = bound_shape(spec, t, e_u0, float(np.linalg.norm(h.xi)))
    return HittingReport(prob=float(np.mean(taus < t)), shape=shape, taus=taus)


def fit_bound_constant(reports: list[HittingReport]) -> float:
    """Smallest C with C · shape >= empirical probability on every report."""
    ratios = [r.prob / r.shape for r in reports if r.shape > 0]
    C = float(max(ratios, default=0.0))
    # prob/shape·shape can round below prob; step up to the first float that covers
    while any(C * r.shape < r.prob for r in reports if r.shape > 0):
        C = float(np.nextafter(C, np.inf))
    return C


@dataclass(frozen=True)
class ErgodicityReport:
    time_avg_a: float
    time_avg_b: float
    ensemble_avg: float

    @property
    def spread(self) -> float:
        """|a − b| relative to their mean."""
        mean = 0.5 * (self.time_avg_a + self.time_avg_b)
        return abs(self.time_avg_a - self.time_avg_b) / mean if mean else 0.0


def _time_average(tr: Trajectory, phi) -> float:
    """(1/T)∫ E φ(u(t)) dt, the expectation taken over the surviving ensemble members."""
    keep = ~tr.failed
    if phi is sq_norm:
        # every-step norms are stored anyway; no need for strided states
        t, vals = tr.step_times, tr.h_norms[:, keep] ** 2
    else:
        t, vals = tr.times, phi(tr.states[:, keep, :])
    return float(trapezoid(vals.mean(axis=1), t) / (t[-1] - t[0]))


def sq_norm(states: np.ndarray) -> np.ndarray:
    return np.sum(states**2, axis=-1)


def ergodicity_probe(cfg: SimConfig, u0_a: ModalField, u0_b: ModalField, T: float,
                     seeds: tuple[int, int, int] | None = None, M_paths: int = 8,
                     stride: int | None = None, phi=sq_norm) -> ErgodicityReport:
    """Time averages (1/T)∫P_tφ dt from two initial states, and φ integrated against ν_T.

    P_tφ(u) = E φ(u(t)) is estimated over M_paths paths per initial state. seeds are
    the noise seeds of the a-run, the b-run and the ν_T run (default: cfg.seed + 0, 1,
    2, so all three use independent noise). ν_T is the Krylov–Bogoliubov measure from
    u0_a sampled every `stride` steps (default: about once per unit time).
    """
    sa, sb, sn = (cfg.seed, cfg.seed + 1, cfg.seed + 2) if seeds is None else seeds
    n = _n_steps(cfg, T)
    if stride is None:
        stride = max(1, int(round(1.0 / cfg.dt)))
        while n % stride:
            stride -= 1
    tra = run_ensemble(cfg, u0_a, T, M_paths, stride=stride, seed=sa)
    trb = run_ensemble(cfg, u0_b, T, M_paths, stride=stride, seed=sb)
    nu = krylov_bogoliubov(cfg, u0_a, T, stride, M_paths, seed=sn)
    ens = float(np.dot(nu.weights, phi(nu.samples)))
    return ErgodicityReport(_time_average(tra, phi), _time_average(trb, phi), ens)


@dataclass(frozen=True)
class MomentBoundRow:
    p: float
    h_norm: float
    lhs: float
    rhs_shape: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_shape


def moment_bound_row(cfg: SimConfig, u0: ModalField, p: float, t: float, M: int,
                     seed: int | None = None) -> MomentBoundRow:
    """E(sup_{[0,t]}‖u‖^{2p} + ∫₀ᵗ‖u‖^{2p−2}‖Δu‖²) against E‖u0‖^{2p} + (‖h‖^{2p}+1)t."""
    tr = run_ensemble(cfg, u0, t, M, stride=_n_steps(cfg, t), seed=seed, on_blowup="raise")
    hn, vn = tr.h_norms, tr.v_norms
    sup = np.max(hn ** (2 * p), axis=0)
    integral = trapezoid(hn ** (2 * p - 2) * vn**2, tr.step_times, axis=0)
    hh = float(np.linalg.norm(cfg.h.xi))
    rhs = float(np.sum(u0.xi**2)) ** p + (hh ** (2 * p) + 1) * t
    return MomentBoundRow(p=p, h_norm=hh, lhs=float(np.mean(sup + integral)), rhs_shape=rhs)


def moment_bound_constant(rows: list[MomentBoundRow]) -> float:
    return float(max(r.ratio for r in rows))
