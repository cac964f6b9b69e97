"""Two-sided Wiener paths, the stationary Ornstein-Uhlenbeck process and tempered functionals.

Paths live on a uniform grid t_n = t_min + n dt that contains t = 0, where ω(0) = 0.
Every path is generated from its own counter-based stream keyed by (seed, path_index),
so ensembles can be drawn in any order, or in parallel, and stay reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson
from scipy.signal import lfilter

TAIL_TOL = 1e-12

_STREAM_INCREMENTS = 0
_STREAM_OU_INIT = 1


def stream(seed: int, path_index: int = 0, purpose: int = _STREAM_INCREMENTS) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(path_index), int(purpose)])
    return np.random.Generator(np.random.Philox(ss))


def _grid_offset(t_min: float, dt: float) -> int:
    n0 = -t_min / dt
    i0 = int(round(n0))
    if abs(n0 - i0) > 1e-9 * max(1.0, abs(n0)):
        raise ValueError(f"grid t_min={t_min}, dt={dt} does not contain t=0")
    return i0


@dataclass(frozen=True, eq=False)
class NoisePath:
    t_min: float
    t_max: float
    dt: float
    w: np.ndarray
    seed: int
    path_index: int = 0

    @property
    def i0(self) -> int:
        return _grid_offset(self.t_min, self.dt)

    @property
    def times(self) -> np.ndarray:
        return self.t_min + self.dt * np.arange(self.w.size)

    def index(self, t: float) -> int:
        n = (t - self.t_min) / self.dt
        i = int(round(n))
        if abs(n - i) > 1e-7 or not 0 <= i < self.w.size:
            raise ValueError(f"time {t} is not a grid point of [{self.t_min}, {self.t_max}] step {self.dt}")
        return i

    def increments(self, t0: float, t1: float) -> np.ndarray:
        return np.diff(self.w[self.index(t0): self.index(t1) + 1])


def sample_wiener(seed: int, t_min: float, t_max: float, dt: float, path_index: int = 0) -> NoisePath:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_min <= 0 <= t_max:
        raise ValueError(f"grid [{t_min}, {t_max}] must contain t=0")
    i0 = _grid_offset(t_min, dt)
    n = int(round((t_max - t_min) / dt))
    dw = stream(seed, path_index).standard_normal(n) * np.sqrt(dt)
    w = np.empty(n + 1)
    w[0] = 0.0
    np.cumsum(dw, out=w[1:])
    w -= w[i0]
    w[i0] = 0.0
    return NoisePath(t_min=t_min, t_max=t_min + n * dt, dt=dt, w=w, seed=seed, path_index=path_index)


def coarsen(path: NoisePath, factor: int) -> NoisePath:
    """The same ω sampled on every `factor`-th grid point (t = 0 stays a grid point)."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    if path.i0 % factor or (path.w.size - 1) % factor:
        raise ValueError(f"grid of {path.w.size - 1} steps with t=0 at step {path.i0} "
                         f"is not divisible by {factor}")
    w = path.w[::factor].copy()
    return NoisePath(t_min=path.t_min, t_max=path.t_max, dt=path.dt * factor, w=w,
                     seed=path.seed, path_index=path.path_index)


def shift(path: NoisePath, s: float) -> NoisePath:
    """θ_s ω(·) = ω(· + s) - ω(s), on the grid shifted by -s."""
    i_s = path.index(s)
    w = path.w - path.w[i_s]
    w[i_s] = 0.0
    return NoisePath(t_min=path.t_min - s, t_max=path.t_max - s, dt=path.dt, w=w,
                     seed=path.seed, path_index=path.path_index)


@dataclass(frozen=True, eq=False)
class OUPath:
    t_min: float
    dt: float
    z: np.ndarray
    burn_in: float = 0.0

    @property
    def t_max(self) -> float:
        return self.t_min + self.dt * (self.z.size - 1)

    @property
    def times(self) -> np.ndarray:
        return self.t_min + self.dt * np.arange(self.z.size)

    def index(self, t: float) -> int:
        n = (t - self.t_min) / self.dt
        i = int(round(n))
        if abs(n - i) > 1e-7 or not 0 <= i < self.z.size:
            raise ValueError(f"time {t} outside OU window [{self.t_min}, {self.t_max}]")
        return i

    def at(self, t: float) -> float:
        return float(self.z[self.index(t)])

    def window(self, t0: float, t1: float) -> np.ndarray:
        return self.z[self.index(t0): self.index(t1) + 1]


def ou_from_path(path: NoisePath, burn_in: float = 20.0, z_init: float | None = None) -> OUPath:
    """Stationary OU z(θ_t ω) driven by `path`, reported on [t_min + burn_in, t_max].

    z starts from the stationary law N(0, 1/2) at the first grid time and follows
    the exponential-Euler update z_{n+1} = e^{-dt} z_n + ΔW_n; the memory of the
    start decays like e^{-burn_in}.
    """
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    nb = int(round(burn_in / path.dt))
    if nb >= path.w.size:
        raise ValueError(f"path extent {path.t_max - path.t_min} too short for burn-in {burn_in}")
    if z_init is None:
        z_init = stream(path.seed, path.path_index, _STREAM_OU_INIT).standard_normal() * np.sqrt(0.5)
    z = ou_recursion(np.diff(path.w), path.dt, z_init)
    return OUPath(t_min=path.t_min + nb * path.dt, dt=path.dt, z=z[nb:], burn_in=nb * path.dt)


def ou_recursion(dw: np.ndarray, dt: float, z0) -> np.ndarray:
    """z_{n+1} = e^{-dt} z_n + dw_n along the last axis."""
    dw = np.asarray(dw, float)
    decay = np.exp(-dt)
    z0 = np.asarray(z0, float)
    x = np.concatenate([z0[..., None], dw], axis=-1)
    return lfilter([1.0], [1.0, -decay], x, axis=-1)


@dataclass(frozen=True)
class TemperedFunctionals:
    m1eps: float
    meps: float
    Meps: float


def tempered_functionals(ou: OUPath, eps: float, t_ref: float = 0.0) -> TemperedFunctionals:
    """m_{1ε}, m_ε and M_ε of the path, evaluated at the reference time t_ref (default 0).

    M_ε = ∫_{-∞}^0 exp(2s + 2ε|∫_s^0 z| + 2ε|z(s)|) ds, integrated with Simpson's
    rule over the stored window. The window is accepted once the integrand stays
    below TAIL_TOL over its oldest unit of time.
    """
    if not 0 <= eps <= 1:
        raise ValueError(f"noise intensity must lie in [0, 1], got {eps}")
    i_ref = ou.index(t_ref)
    for back in (1.0, 2.0):
        if t_ref - back < ou.t_min - 1e-9:
            raise ValueError(f"OU window must cover [{t_ref - back}, {t_ref}]")
    z = ou.z[: i_ref + 1]
    n1 = int(round(1.0 / ou.dt))
    n2 = int(round(2.0 / ou.dt))
    m1 = np.exp(2 * eps * np.max(np.abs(z[-n1 - 1:])))
    m = np.exp(2 * np.max(np.abs(z[-n2 - 1:])))

    s = ou.dt * (np.arange(z.size) - (z.size - 1))
    zr = z[::-1]
    # ∫_s^0 z, accumulated backwards from s = 0
    int_back = cumulative_trapezoid(zr, dx=ou.dt, initial=0.0)[::-1]
    expo = 2 * s + 2 * eps * np.abs(int_back) + 2 * eps * np.abs(z)
    integrand = np.exp(expo)
    head = integrand[: n1 + 1]
    if np.max(head) >= TAIL_TOL:
        raise ValueError(
            f"OU window [{ou.t_min}, {t_ref}] too short: tail integrand {np.max(head):.3e} "
            f"exceeds {TAIL_TOL:g}")
    M = simpson(integrand, dx=ou.dt)
    return TemperedFunctionals(m1eps=float(m1), meps=float(m), Meps=float(M))


def write_csv(path_obj: NoisePath, ou: OUPath, fname) -> None:
    """Export (t, ω, z) on the OU window, with seed and grid in a header comment."""
    i_start = path_obj.index(ou.t_min)
    w = path_obj.w[i_start: i_start + ou.z.size]
    t = ou.times
    with open(fname, "w", newline="") as fh:
        fh.write(f"# seed={path_obj.seed} path_index={path_obj.path_index} "
                 f"t_min={ou.t_min!r} t_max={ou.t_max!r} dt={ou.dt!r} burn_in={ou.burn_in!r}\n")
        fh.write("t,omega,z\n")
        for row in zip(t, w, ou.z):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
