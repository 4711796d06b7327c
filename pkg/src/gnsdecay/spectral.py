"""
Periodic-box spectral toolbox.

Fields are stored as Fourier-series coefficients on a full (complex) FFT grid,

    u(x) = sum_k  u_hat(k) exp(i k.x),     k = (2 pi / L) j,

so ``u_hat = fftn(u) / n**dim``.  With this normalisation the L2 norm over the
box is ``L**dim * sum |u_hat|**2``.

Nyquist planes (index ``-n/2`` along any axis) are kept at zero in every
field.  They have no conjugate partner with the opposite wavenumber, so
derivatives and the Leray projector would otherwise break the reality of
the physical field.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft

FFT_WORKERS = -1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n`` points per axis on ``[0, L)**dim``.

    ``dim=2`` is accepted for cheap experiments; the damped equations of
    interest live in three dimensions.
    """

    n: int
    box_length: float = 2 * np.pi
    dim: int = 3

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 4 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 4, got {self.n!r}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(1, self.dim + 1))

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return self.box_length**self.dim

    @cached_property
    def indices(self) -> np.ndarray:
        """Integer mode indices in FFT order ``[0..n/2-1, -n/2..-1]``."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def k(self) -> np.ndarray:
        """Per-axis wavenumber table ``(2 pi / L) j``."""
        return (2 * np.pi / self.box_length) * self.indices.astype(float)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Wavenumber mesh of shape ``(dim, n, ..., n)``."""
        return np.stack(np.meshgrid(*([self.k] * self.dim), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.kvec**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on modes that do not lie on a Nyquist plane."""
        j = np.stack(np.meshgrid(*([self.indices] * self.dim), indexing="ij"))
        return np.all(j != -self.n // 2, axis=0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule (every ``|j| <= n/3``)."""
        j = np.stack(np.meshgrid(*([self.indices] * self.dim), indexing="ij"))
        return np.all(3 * np.abs(j) <= self.n, axis=0)

    def coordinates(self) -> np.ndarray:
        """Physical grid points, shape ``(dim, n, ..., n)``."""
        x = self.dx * np.arange(self.n)
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def symbol(self, alpha: float) -> np.ndarray:
        """Fourier symbol ``|k|**(2 alpha)`` of the fractional Laplacian."""
        return self.kmag ** (2.0 * alpha)


def forward(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Fourier-series coefficients of real data over the trailing ``dim`` axes."""
    n, d = grid.n, grid.dim
    axes = tuple(range(values.ndim - d, values.ndim))
    half = sfft.rfftn(values, axes=axes, workers=FFT_WORKERS) / n**d
    full = np.empty(values.shape, dtype=complex)
    h = n // 2 + 1
    full[..., :h] = half
    # Remaining columns from conjugate symmetry c(-j) = conj(c(j)).
    mirror = np.conj(half[..., 1 : n // 2])
    other = axes[:-1]
    mirror = np.roll(np.flip(mirror, axis=other), 1, axis=other)
    full[..., h:] = mirror[..., ::-1]
    return full


def inverse(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Real field from conjugate-symmetric coefficients over the trailing ``dim`` axes."""
    n, d = grid.n, grid.dim
    axes = tuple(range(coeffs.ndim - d, coeffs.ndim))
    half = np.ascontiguousarray(coeffs[..., : n // 2 + 1])
    return sfft.irfftn(half, s=(n,) * d, axes=axes, workers=FFT_WORKERS) * n**d


def wavenumbers(grid: GridSpec) -> np.ndarray:
    """Per-axis wavenumber table in FFT ordering."""
    return grid.k.copy()


@dataclass(frozen=True)
class PhysicalParams:
    """Dissipation order ``alpha``, damping exponent ``beta``, damping coefficient ``nu``.

    ``alpha`` in (0, 5/4] is the range covered by the decay theorem.  Values
    up to 2 are accepted but flagged through :attr:`outside_theorem_range`.
    """

    alpha: float = 1.0
    beta: float = 3.0
    nu: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        if not self.beta >= 1:
            raise ValueError(f"beta must be >= 1, got {self.beta!r}")
        if not self.nu >= 0:
            raise ValueError(f"nu must be >= 0, got {self.nu!r}")
        if self.outside_theorem_range:
            warnings.warn(
                f"alpha={self.alpha} lies outside (0, 5/4]; theoretical exponents do not apply",
                stacklevel=2,
            )

    @property
    def outside_theorem_range(self) -> bool:
        return self.alpha > 1.25


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """A ``dim``-component vector field held as Fourier coefficients.

    ``coeffs`` has shape ``(dim, n, ..., n)`` and is read-only; every
    operation returns a new field.
    """

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        expected = (self.grid.dim,) + self.grid.shape
        if c.shape != expected:
            raise ValueError(f"coefficient array has shape {c.shape}, expected {expected}")
        c[:, ~self.grid.nyquist_mask] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralVectorField:
        return cls(grid, np.zeros((grid.dim,) + grid.shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> SpectralVectorField:
        return cls(grid, forward(grid, np.asarray(values, dtype=float)))

    def to_physical(self) -> np.ndarray:
        return inverse(self.grid, self.coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> SpectralVectorField:
        return SpectralVectorField(self.grid, coeffs)

    def _check_grid(self, other: SpectralVectorField):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other: SpectralVectorField) -> SpectralVectorField:
        self._check_grid(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralVectorField) -> SpectralVectorField:
        self._check_grid(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> SpectralVectorField:
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> SpectralVectorField:
        return self.with_coeffs(-self.coeffs)

    def divergence_spectrum(self) -> np.ndarray:
        """``k . u_hat(k)`` on every mode (the divergence up to a factor ``i``)."""
        return np.sum(self.grid.kvec * self.coeffs, axis=0)

    def max_divergence_ratio(self) -> float:
        """``max_k |k . u_hat| / max_k |u_hat|`` (0 for the zero field)."""
        scale = np.max(np.abs(self.coeffs))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(self.divergence_spectrum())) / scale)

    def is_conjugate_symmetric(self, rtol: float = 1e-12) -> bool:
        c = self.coeffs
        flipped = np.conj(np.roll(np.flip(c, axis=self.grid.axes), 1, axis=self.grid.axes))
        scale = max(np.max(np.abs(c)), np.finfo(float).tiny)
        return bool(np.max(np.abs(c - flipped)) <= rtol * scale)

    def gradient(self) -> np.ndarray:
        """Physical-space velocity gradient ``G[j, i] = d u_i / d x_j``."""
        grid = self.grid
        return inverse(grid, 1j * grid.kvec[:, None] * self.coeffs[None, :])


def fractional_laplacian(field: SpectralVectorField, alpha: float, sign: int = 1) -> SpectralVectorField:
    """Apply ``(-Delta)**alpha`` (``sign=+1``) or its inverse on mean-free data (``sign=-1``)."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    grid = field.grid
    kmag = grid.kmag
    nonzero = kmag > 0
    factor = np.zeros_like(kmag)
    factor[nonzero] = kmag[nonzero] ** (2.0 * alpha * sign)
    if sign == -1:
        zero_mode = field.coeffs[(slice(None),) + (0,) * grid.dim]
        if np.any(zero_mode != 0):
            raise ValueError("inverse fractional Laplacian needs a mean-free field (nonzero k=0 mode)")
    return field.with_coeffs(field.coeffs * factor)


def leray_project(field: SpectralVectorField) -> SpectralVectorField:
    """Project onto divergence-free fields: ``u_hat - k (k.u_hat) / |k|^2``."""
    grid = field.grid
    k2 = grid.k2.copy()
    k2[(0,) * grid.dim] = 1.0
    kdotu = field.divergence_spectrum()
    return field.with_coeffs(field.coeffs - grid.kvec * (kdotu / k2))


def dealias(field: SpectralVectorField) -> SpectralVectorField:
    """Zero every mode with some ``|j| > n/3`` (2/3 rule)."""
    return field.with_coeffs(field.coeffs * field.grid.dealias_mask)


class Norms(NamedTuple):
    l2: float
    h_alpha_seminorm: float
    l_beta_plus_1: float


def l2_sq(field: SpectralVectorField) -> float:
    """Squared L2 norm by Parseval."""
    return float(field.grid.volume * np.sum(np.abs(field.coeffs.ravel()) ** 2))


def h_alpha_sq(field: SpectralVectorField, alpha: float) -> float:
    """Squared seminorm ``||Lambda^alpha u||^2 = L^d sum |k|^(2 alpha) |u_hat|^2``."""
    weights = field.grid.symbol(alpha)
    power = np.sum(np.abs(field.coeffs) ** 2, axis=0)
    return float(field.grid.volume * np.sum((weights * power).ravel()))


def lp_pow(field: SpectralVectorField, p: float, physical: np.ndarray | None = None) -> float:
    """``sum_x |u(x)|^p dx^d``, with ``|u|`` the Euclidean magnitude."""
    u = field.to_physical() if physical is None else physical
    mag = np.sqrt(np.sum(u**2, axis=0))
    return float(field.grid.cell_volume * np.sum((mag**p).ravel()))


def norms(field: SpectralVectorField, params: PhysicalParams) -> Norms:
    """L2 norm, ``||Lambda^alpha u||`` and ``||u||_{L^(beta+1)}``."""
    p = params.beta + 1.0
    return Norms(
        l2=np.sqrt(l2_sq(field)),
        h_alpha_seminorm=np.sqrt(h_alpha_sq(field, params.alpha)),
        l_beta_plus_1=lp_pow(field, p) ** (1.0 / p),
    )
