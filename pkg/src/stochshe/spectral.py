"""Eigenbasis calculus for the biharmonic operator A = Δ² on the square (0, L)².

The basis is the hinged (Navier) sine basis

    w_jk(x, y) = (2/L) sin(jπx/L) sin(kπy/L),   λ_jk = ((jπ/L)² + (kπ/L)²)²,

which satisfies u = Δu = 0 on the boundary. A clamped plate (u = ∂u/∂n = 0) has
no closed-form eigenbasis on the square; the hinged basis keeps A positive,
self-adjoint and with compact inverse, which is all the abstract framework needs.

Coefficient vectors are stored in canonical order: ascending λ, ties broken by
lexicographic (j, k). Array-level helpers accept any leading batch dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    L: float
    N: int
    j: np.ndarray
    k: np.ndarray
    lam: np.ndarray
    lambda0: float
    sqrt_lam: np.ndarray = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_modes(self) -> int:
        return self.N * self.N

    @property
    def lambda1(self) -> float:
        return float(self.lam[0])

    @property
    def modes(self) -> list[tuple[int, int]]:
        return list(zip(self.j.tolist(), self.k.tolist()))

    def mode_index(self, j: int, k: int) -> int:
        hit = np.flatnonzero((self.j == j) & (self.k == k))
        if hit.size == 0:
            raise ValueError(f"mode ({j}, {k}) not in basis with N={self.N}")
        return int(hit[0])

    def sine_matrix(self, N_g: int) -> np.ndarray:
        """S[m, j-1] = sin(jπ x_m / L) on the midpoint grid x_m = (m + 1/2) L / N_g."""
        key = ("sine", N_g)
        if key not in self._cache:
            m = np.arange(N_g) + 0.5
            jj = np.arange(1, self.N + 1)
            self._cache[key] = np.sin(np.pi * np.outer(m, jj) / N_g)
        return self._cache[key]

    def to_square(self, xi: np.ndarray) -> np.ndarray:
        """Scatter canonical-order coefficients into (..., N, N) indexed [j-1, k-1]."""
        xi = np.asarray(xi)
        out = np.zeros(xi.shape[:-1] + (self.N, self.N))
        out[..., self.j - 1, self.k - 1] = xi
        return out

    def from_square(self, sq: np.ndarray) -> np.ndarray:
        return np.asarray(sq)[..., self.j - 1, self.k - 1]


def build_basis(L: float, N: int) -> SpectralBasis:
    if not L > 0:
        raise ValueError(f"domain side L must be positive, got {L}")
    if int(N) != N or N < 1:
        raise ValueError(f"modes per axis N must be a positive integer, got {N}")
    N = int(N)
    jj, kk = np.meshgrid(np.arange(1, N + 1), np.arange(1, N + 1), indexing="ij")
    jj, kk = jj.ravel(), kk.ravel()
    order = np.lexsort((kk, jj, jj**2 + kk**2))
    j, k = jj[order], kk[order]
    # integer j²+k² first, so degenerate modes get bitwise-equal eigenvalues
    lam = (np.pi / L) ** 4 * (j**2 + k**2).astype(float) ** 2
    for arr in (j, k, lam):
        arr.setflags(write=False)
    sqrt_lam = np.sqrt(lam)
    sqrt_lam.setflags(write=False)
    return SpectralBasis(L=float(L), N=N, j=j, k=k, lam=lam, lambda0=float(lam[0]) / 2,
                         sqrt_lam=sqrt_lam)


@dataclass(frozen=True, eq=False)
class ModalField:
    basis: SpectralBasis
    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape[-1:] != (self.basis.n_modes,):
            raise ValueError(f"expected {self.basis.n_modes} coefficients, got shape {xi.shape}")
        if not np.all(np.isfinite(xi)):
            raise ValueError("modal coefficients must be finite")
        object.__setattr__(self, "xi", xi)

    def __add__(self, other: ModalField) -> ModalField:
        return ModalField(self.basis, self.xi + other.xi)

    def __sub__(self, other: ModalField) -> ModalField:
        return ModalField(self.basis, self.xi - other.xi)

    def __mul__(self, s: float) -> ModalField:
        return ModalField(self.basis, self.xi * s)

    __rmul__ = __mul__


def zeros(basis: SpectralBasis) -> ModalField:
    return ModalField(basis, np.zeros(basis.n_modes))


def single_mode(basis: SpectralBasis, j: int, k: int, amp: float = 1.0) -> ModalField:
    xi = np.zeros(basis.n_modes)
    xi[basis.mode_index(j, k)] = amp
    return ModalField(basis, xi)


@dataclass(frozen=True, eq=False)
class GridField:
    basis: SpectralBasis
    values: np.ndarray

    @property
    def N_g(self) -> int:
        return self.values.shape[-1]


def apply_fractional_power(f: ModalField, mu: float) -> ModalField:
    return ModalField(f.basis, f.basis.lam**mu * f.xi)


def semigroup_apply(f: ModalField, t: float) -> ModalField:
    """e^{-At} f, exact in the truncation."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    return ModalField(f.basis, np.exp(-f.basis.lam * t) * f.xi)


def h_norm(basis: SpectralBasis, xi: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.square(xi), axis=-1))


def v_norm(basis: SpectralBasis, xi: np.ndarray) -> np.ndarray:
    """‖Δu‖ = ‖A^{1/2} u‖."""
    return np.sqrt(np.sum(np.square(basis.sqrt_lam * xi), axis=-1))


def d_norm(basis: SpectralBasis, xi: np.ndarray, mu: float) -> np.ndarray:
    return np.sqrt(np.sum(np.square(basis.lam**mu * xi), axis=-1))


def norms(f: ModalField, mu: float = 0.75) -> tuple[float, float, float]:
    """(‖f‖, ‖Δf‖, ‖A^μ f‖)."""
    b = f.basis
    return float(h_norm(b, f.xi)), float(v_norm(b, f.xi)), float(d_norm(b, f.xi, mu))


def grid_points(L: float, N_g: int) -> np.ndarray:
    return (np.arange(N_g) + 0.5) * L / N_g


_DENSE_LIMIT = 2_000_000


def _dense_synthesis(basis: SpectralBasis, N_g: int) -> np.ndarray | None:
    """T[i, m*N_g + n] = w_i(x_m, y_n), or None when too large to store."""
    if basis.n_modes * N_g * N_g > _DENSE_LIMIT:
        return None
    key = ("dense", N_g)
    if key not in basis._cache:
        S = basis.sine_matrix(N_g)
        T = (2.0 / basis.L) * S[:, basis.j - 1].T[:, :, None] * S[:, basis.k - 1].T[:, None, :]
        basis._cache[key] = np.ascontiguousarray(T.reshape(basis.n_modes, N_g * N_g))
    return basis._cache[key]


def synthesize(basis: SpectralBasis, xi: np.ndarray, N_g: int) -> np.ndarray:
    """Modal coefficients (..., n_modes) -> grid samples (..., N_g, N_g)."""
    if N_g < basis.N:
        raise ValueError(f"grid resolution N_g={N_g} below modes per axis N={basis.N}")
    xi = np.asarray(xi, float)
    T = _dense_synthesis(basis, N_g)
    if T is not None:
        return (xi @ T).reshape(xi.shape[:-1] + (N_g, N_g))
    S = basis.sine_matrix(N_g)
    return (2.0 / basis.L) * (S @ basis.to_square(xi) @ S.T)


def analyze(basis: SpectralBasis, values: np.ndarray) -> np.ndarray:
    """Grid samples (..., N_g, N_g) -> modal coefficients, midpoint quadrature.

    Exact for band-limited input when N_g > N.
    """
    values = np.asarray(values, float)
    N_g = values.shape[-1]
    if N_g < basis.N:
        raise ValueError(f"grid resolution N_g={N_g} below modes per axis N={basis.N}")
    w = (basis.L / N_g) ** 2
    T = _dense_synthesis(basis, N_g)
    if T is not None:
        return w * (values.reshape(values.shape[:-2] + (N_g * N_g,)) @ T.T)
    S = basis.sine_matrix(N_g)
    return basis.from_square((2.0 / basis.L) * w * (S.T @ values @ S))


def modal_to_grid(f: ModalField, N_g: int | None = None) -> GridField:
    N_g = 2 * f.basis.N if N_g is None else N_g
    return GridField(f.basis, synthesize(f.basis, f.xi, N_g))


def grid_to_modal(g: GridField) -> ModalField:
    return ModalField(g.basis, analyze(g.basis, g.values))


def evaluate(f: ModalField, x, y) -> np.ndarray:
    """Pointwise evaluation of the truncated series at arbitrary (x, y)."""
    b = f.basis
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    sx = np.sin(np.pi * np.multiply.outer(x, b.j) / b.L)
    sy = np.sin(np.pi * np.multiply.outer(y, b.k) / b.L)
    return (2.0 / b.L) * np.sum(sx * sy * f.xi, axis=-1)


def random_field(basis: SpectralBasis, rng: np.random.Generator, decay: float = 0.5,
                 norm: float | None = None) -> ModalField:
    """Gaussian coefficients with spectrum ∝ λ^{-decay}; optionally rescaled to H-norm `norm`."""
    xi = rng.standard_normal(basis.n_modes) * (basis.lam / basis.lambda1) ** (-decay)
    if norm is not None:
        xi *= norm / np.linalg.norm(xi)
    return ModalField(basis, xi)
