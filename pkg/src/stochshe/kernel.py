"""Nonlocal kernels G and the bounded-domain convolution G*u².

    [G*u²](x) = ∫_U G(|x - y|) u²(y) dy

The integral runs over U only, so fields are zero-extended and the convolution is
linear (not periodic): both operands are padded to 2N_g per axis before the FFT.
Grid quadrature uses the midpoint grid of `spectral` with weight (L/N_g)².
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft, integrate


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A radial kernel plus the constants of the (Gp)/(Gn) assumptions.

    kind is one of "constant", "mollifier", "off" (G ≡ 0, linear test mode) or
    "sampled" (explicit offset table tied to one grid geometry).
    """
    kind: str
    alpha: float
    beta: float
    delta: float = 0.0
    rho: float | None = None
    c: float | None = None
    L: float | None = None
    N_g: int | None = None
    table: np.ndarray | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def radial(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, float)
        if self.kind == "constant":
            return np.full_like(r, self.alpha)
        if self.kind == "off":
            return np.zeros_like(r)
        if self.kind == "mollifier":
            return mollifier_profile(r, self.rho, self.c)
        raise ValueError(f"kernel kind {self.kind!r} has no radial profile")

    def grid_samples(self, L: float, N_g: int) -> np.ndarray:
        """Kernel on the offset lattice (p, q) h, |p|, |q| < N_g; shape (2N_g - 1, 2N_g - 1)."""
        self._check_geometry(L, N_g)
        if self.kind == "sampled":
            return self.table
        key = ("samples", float(L), int(N_g))
        if key not in self._cache:
            h = L / N_g
            off = np.arange(-(N_g - 1), N_g) * h
            r = np.hypot(off[:, None], off[None, :])
            self._cache[key] = self.radial(r)
        return self._cache[key]

    def _check_geometry(self, L: float, N_g: int) -> None:
        if self.L is not None and (abs(self.L - L) > 1e-12 * self.L or self.N_g != N_g):
            raise ValueError(
                f"kernel built for L={self.L}, N_g={self.N_g}; field has L={L}, N_g={N_g}")

    def _spectrum(self, L: float, N_g: int) -> np.ndarray:
        key = ("rfft", float(L), int(N_g))
        if key not in self._cache:
            P = 2 * N_g
            tab = self.grid_samples(L, N_g)
            circ = np.zeros((P, P))
            idx = np.arange(-(N_g - 1), N_g) % P
            circ[np.ix_(idx, idx)] = tab
            self._cache[key] = fft.rfft2(circ)
        return self._cache[key]


def make_constant_kernel(alpha: float) -> KernelSpec:
    if not alpha > 0:
        raise ValueError(f"constant kernel needs alpha > 0, got {alpha}")
    return KernelSpec(kind="constant", alpha=float(alpha), beta=float(alpha))


def make_zero_kernel() -> KernelSpec:
    """G ≡ 0: switches the nonlocal term off (linear test mode, outside (Gp)/(Gn))."""
    return KernelSpec(kind="off", alpha=0.0, beta=0.0)


def make_sampled_kernel(table: np.ndarray, L: float, N_g: int, alpha: float = 0.0) -> KernelSpec:
    table = np.asarray(table, float)
    if table.shape != (2 * N_g - 1, 2 * N_g - 1):
        raise ValueError(f"offset table must have shape {(2 * N_g - 1,) * 2}, got {table.shape}")
    return KernelSpec(kind="sampled", alpha=alpha, beta=float(np.max(np.abs(table))),
                      L=float(L), N_g=int(N_g), table=table)


def delta_kernel(L: float, N_g: int) -> KernelSpec:
    """Discrete identity: mass 1 in the zero-offset cell."""
    tab = np.zeros((2 * N_g - 1, 2 * N_g - 1))
    tab[N_g - 1, N_g - 1] = 1.0 / (L / N_g) ** 2
    return make_sampled_kernel(tab, L, N_g)


def _bump(r):
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    inside = r < 1
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def mollifier_constant() -> float:
    """c = 1 / (2π ∫_0^1 exp(-1/(1-r²)) r dr), so that J integrates to one over the unit disc."""
    val, err = integrate.quad(lambda r: np.exp(-1.0 / (1.0 - r * r)) * r, 0.0, 1.0,
                              epsabs=1e-15, epsrel=1e-13, limit=200)
    if not np.isfinite(val) or err > 1e-10 * val:
        raise RuntimeError(f"mollifier normalization quadrature did not converge (err={err:g})")
    return 1.0 / (2 * np.pi * val)


def mollifier_profile(r: np.ndarray, rho: float, c: float) -> np.ndarray:
    """J_ϱ(r) = ϱ^{-2} c exp(-1/(1 - (r/ϱ)²)) on r < ϱ, zero outside."""
    return c / rho**2 * _bump(np.asarray(r, float) / rho)


def make_mollifier_kernel(rho: float, L: float, N_g: int,
                          probes: list[np.ndarray] | None = None) -> KernelSpec:
    if not 0 < rho < L / 2:
        raise ValueError(f"mollifier radius must lie in (0, L/2) = (0, {L / 2}), got {rho}")
    c = mollifier_constant()
    beta = c / rho**2
    k = KernelSpec(kind="mollifier", alpha=1.0, beta=beta, rho=float(rho), c=c,
                   L=float(L), N_g=int(N_g))
    if probes is None:
        probes = [bump_probe(L, N_g, (L / 2, L / 2), L / 4)]
    _, margin = verify_Gn(k, probes, eps_tol=np.inf)
    object.__setattr__(k, "delta", max(0.0, -margin))
    return k


def convolve(values: np.ndarray, kernel: KernelSpec, L: float) -> np.ndarray:
    """G*g for grid samples g of shape (..., N_g, N_g)."""
    values = np.asarray(values, float)
    N_g = values.shape[-1]
    if values.shape[-2] != N_g:
        raise ValueError(f"expected square grid, got shape {values.shape}")
    kernel._check_geometry(L, N_g)
    w = (L / N_g) ** 2
    if kernel.kind == "off":
        return np.zeros_like(values)
    if kernel.kind == "constant":
        mass = w * np.sum(values, axis=(-2, -1))
        return np.broadcast_to((kernel.alpha * mass)[..., None, None], values.shape).copy()
    P = 2 * N_g
    spec = fft.rfft2(values, s=(P, P)) * kernel._spectrum(L, N_g)
    return w * fft.irfft2(spec, s=(P, P))[..., :N_g, :N_g]


def convolve_direct(values: np.ndarray, kernel: KernelSpec, L: float) -> np.ndarray:
    """O(N_g⁴) double sum; reference implementation for tests."""
    N_g = values.shape[-1]
    tab = kernel.grid_samples(L, N_g)
    w = (L / N_g) ** 2
    out = np.zeros_like(values, dtype=float)
    for m in range(N_g):
        for n in range(N_g):
            acc = 0.0
            for mp in range(N_g):
                for nq in range(N_g):
                    acc += tab[m - mp + N_g - 1, n - nq + N_g - 1] * values[mp, nq]
            out[m, n] = w * acc
    return out


def bump_probe(L: float, N_g: int, center, width: float) -> np.ndarray:
    """Smooth compactly supported probe with peak value 1."""
    x = (np.arange(N_g) + 0.5) * L / N_g
    r = np.hypot(x[:, None] - center[0], x[None, :] - center[1])
    return np.e * _bump(r / width)


def verify_Gn(kernel: KernelSpec, probes: list[np.ndarray], eps_tol: float,
              L: float | None = None) -> tuple[bool, float]:
    """Check G*ψ >= αψ - eps_tol pointwise on every probe.

    Returns (passed, worst margin), the margin being min over probes and grid of
    G*ψ - αψ (0 for ψ ≡ 0; negative values are violations of size |margin|).
    """
    L = kernel.L if L is None else L
    if L is None:
        raise ValueError("domain side L required for kernels without fixed geometry")
    worst = np.inf
    for psi in probes:
        psi = np.asarray(psi, float)
        if np.any(psi < 0):
            raise ValueError("probes must be nonnegative")
        margin = float(np.min(convolve(psi, kernel, L) - kernel.alpha * psi))
        worst = min(worst, margin)
    if not probes:
        worst = 0.0
    return bool(worst >= -eps_tol), worst
