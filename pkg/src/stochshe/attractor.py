"""Pullback dynamics: absorbing radii, empirical random attractors and their ε → 0 behaviour.

A random attractor A_ε(ω) is represented by the endpoint cloud Φ_ε(t, θ_{-t}ω, B) of a
finite initial ensemble B, integrated from time -t to 0 along one fixed ω. The
cloud counts as converged when doubling t moves it by less than 10% of its diameter.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import noise as nz
from .dynamics import SimConfig, integrate_arrays, noise_window
from .spectral import ModalField, SpectralBasis


# the radius functionals integrate back until the integrand is below TAIL_TOL; 40 time
# units of OU history cover that for every ε in [0, 1] with a wide margin
RADIUS_LOOKBACK = 40.0


def path_span(cfg: SimConfig, t_pullback: float) -> float:
    """History needed before t = 0: doubled pullback, radius lookback and OU burn-in."""
    return max(2 * t_pullback, RADIUS_LOOKBACK) + cfg.burn_in


@dataclass(frozen=True)
class RadiiReport:
    rho1: float
    rho2: float
    rho3: float
    functionals: nz.TemperedFunctionals

    @property
    def rho1_sq(self) -> float:
        return self.rho1**2

    @property
    def rho2_sq(self) -> float:
        return self.rho2**2


def absorbing_radii(ou: nz.OUPath, eps: float, h_norm2: float, t_ref: float = 0.0) -> RadiiReport:
    """ρ₁² = 1 + M(1+‖h‖²),  ρ₂² = m₁²[1 + M(1+‖h‖²)]²,  ρ₃ = m⁵[1 + M(1+‖h‖²)]²."""
    tf = nz.tempered_functionals(ou, eps, t_ref)
    core = 1.0 + tf.Meps * (1.0 + h_norm2)
    return RadiiReport(rho1=float(np.sqrt(core)), rho2=float(tf.m1eps * core),
                       rho3=float(tf.meps**5 * core**2), functionals=tf)


@dataclass(frozen=True, eq=False)
class PointCloud:
    basis: SpectralBasis
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, float))
        if pts.shape[0] == 0:
            raise ValueError("point cloud must be nonempty")
        if pts.shape[1] != self.basis.n_modes:
            raise ValueError("points must share the cloud's basis")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def from_fields(cls, fields: list[ModalField], **meta) -> PointCloud:
        return cls(fields[0].basis, np.array([f.xi for f in fields]), dict(meta))


def _weights(basis: SpectralBasis, norm: str, mu: float) -> np.ndarray:
    if norm == "H":
        return np.ones(basis.n_modes)
    if norm == "V":
        return np.sqrt(basis.lam)
    if norm == "D":
        return basis.lam**mu
    raise ValueError(f"unknown norm {norm!r}; use 'H', 'V' or 'D'")


def pairwise_distances(B: PointCloud, A: PointCloud, norm: str = "V", mu: float = 0.75) -> np.ndarray:
    if B.basis is not A.basis and (B.basis.N != A.basis.N or B.basis.L != A.basis.L):
        raise ValueError("clouds live in different bases")
    w = _weights(B.basis, norm, mu)
    diff = (B.points[:, None, :] - A.points[None, :, :]) * w
    return np.sqrt(np.sum(diff * diff, axis=-1))


def hausdorff_semidist(B: PointCloud, A: PointCloud, norm: str = "V", mu: float = 0.75) -> float:
    """dist(B, A) = sup_{b in B} min_{a in A} ‖b - a‖."""
    return float(np.max(np.min(pairwise_distances(B, A, norm, mu), axis=1)))


def hausdorff(B: PointCloud, A: PointCloud, norm: str = "V") -> float:
    return max(hausdorff_semidist(B, A, norm), hausdorff_semidist(A, B, norm))


def diameter(C: PointCloud, norm: str = "V") -> float:
    return float(np.max(pairwise_distances(C, C, norm)))


def pullback_endpoint(cfg: SimConfig, path: nz.NoisePath, u0: ModalField, t: float,
                      ou: nz.OUPath | None = None) -> ModalField:
    """Φ_ε(t, θ_{-t}ω, u0): integrate along ω from time -t to 0."""
    if t < 0:
        raise ValueError("pullback time must be nonnegative")
    if t == 0:
        return u0
    dw, z = noise_window(cfg, path, -t, 0.0, ou)
    tr = integrate_arrays(cfg, u0.xi[None, :], dw[None, :], None if z is None else z[None, :],
                          t0=-t, stride=dw.size)
    return ModalField(cfg.basis, tr.final()[0])


def sample_v_ball(basis: SpectralBasis, radius: float, M: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from {‖Δu‖ <= radius} in the truncated space."""
    d = basis.n_modes
    g = rng.standard_normal((M, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(M) ** (1.0 / d)
    return (g * r[:, None]) / np.sqrt(basis.lam)


def _pullback_cloud(cfg, path, ou, u0s, t):
    M = u0s.shape[0]
    dw, z = noise_window(cfg, path, -t, 0.0, ou)
    tr = integrate_arrays(cfg, u0s, np.broadcast_to(dw, (M, dw.size)),
                          None if z is None else np.broadcast_to(z, (M, z.size)),
                          t0=-t, stride=dw.size)
    return tr.final()


def estimate_attractor(cfg: SimConfig, path: nz.NoisePath, M: int, t_pullback: float,
                       radius_source: str | float = "rho2", ou: nz.OUPath | None = None,
                       sample_seed: int | None = None, check_doubling: bool = True,
                       doubling_tol: float = 0.1, abs_tol: float = 1e-8) -> PointCloud:
    """Endpoint cloud of M initial states drawn from the V-ball of the absorbing radius.

    meta["doubling"] records the Hausdorff shift between the clouds at t_pullback and
    2 t_pullback, the cloud diameter and whether the shift is under doubling_tol of it.
    Clouds that collapse to a point (singleton attractors) have no diameter to speak
    of; for them the shift is compared with abs_tol · (1 + largest V-norm in the
    cloud). Non-convergence is reported, not raised.
    """
    if M < 1:
        raise ValueError("ensemble size must be at least 1")
    if ou is None and (cfg.scheme == "exp-euler-rpde" or radius_source == "rho2"):
        ou = nz.ou_from_path(path, cfg.burn_in)
    if radius_source == "rho2":
        radius = absorbing_radii(ou, cfg.eps, cfg.h_norm2).rho2
    else:
        radius = float(radius_source)
    seed = cfg.seed if sample_seed is None else sample_seed
    rng = nz.stream(seed, path.path_index, purpose=2)
    u0s = sample_v_ball(cfg.basis, radius, M, rng)
    pts = _pullback_cloud(cfg, path, ou, u0s, t_pullback)
    meta = {"eps": cfg.eps, "seed": path.seed, "path_index": path.path_index,
            "t_pullback": t_pullback, "radius": radius}
    cloud = PointCloud(cfg.basis, pts, meta)
    if check_doubling:
        pts2 = _pullback_cloud(cfg, path, ou, u0s, 2 * t_pullback)
        cloud2 = PointCloud(cfg.basis, pts2)
        shift = hausdorff(cloud, cloud2)
        diam = diameter(cloud2)
        scale = 1.0 + float(np.max(np.sqrt(np.sum(cfg.basis.lam * pts2**2, axis=1))))
        meta["doubling"] = {"shift": shift, "diameter": diam,
                            "converged": bool(shift <= doubling_tol * diam or shift <= abs_tol * scale)}
    return cloud


@dataclass
class USCResult:
    rows: list[dict]
    medians: dict[float, float]
    attractor0: PointCloud


def deterministic_attractor(cfg_base: SimConfig, M: int, t_pullback: float) -> PointCloud:
    """Global attractor of the ε = 0 problem, from a long (2 t_pullback) run."""
    cfg0 = cfg_base.with_(eps=0.0)
    t_long = 2 * t_pullback
    path = nz.sample_wiener(cfg0.seed, -path_span(cfg0, t_long), 0.0, cfg0.dt)
    return estimate_attractor(cfg0, path, M, t_long, check_doubling=False)


def usc_experiment(cfg_base: SimConfig, eps_grid, seeds, t_pullback: float, M: int = 8,
                   norm: str = "V", map_fn=map) -> USCResult:
    """dist_V(Â_ε(ω), Â_0) for every (ε, seed); medians over seeds per ε.

    Every ε reuses the same ω per seed. The ε = 0 entry is Â_0 itself.
    """
    A0 = deterministic_attractor(cfg_base, M, t_pullback)
    t_span = path_span(cfg_base, t_pullback)

    def one(task):
        eps, seed = task
        if eps == 0:
            cloud = A0
        else:
            cfg = cfg_base.with_(eps=float(eps), seed=int(seed))
            path = nz.sample_wiener(int(seed), -t_span, 0.0, cfg.dt)
            cloud = estimate_attractor(cfg, path, M, t_pullback, check_doubling=False)
        return {"eps": float(eps), "seed": int(seed), "t_pullback": float(t_pullback),
                "dist_V": hausdorff_semidist(cloud, A0, norm)}

    tasks = [(e, s) for e in eps_grid for s in seeds]
    rows = list(map_fn(one, tasks))
    medians = {float(e): float(np.median([r["dist_V"] for r in rows if r["eps"] == float(e)]))
               for e in eps_grid}
    return USCResult(rows=rows, medians=medians, attractor0=A0)
