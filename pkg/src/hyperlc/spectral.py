"""Periodic 3D Fourier substrate.

The physical domain is the cube [-pi*L, pi*L)^3 with L = ``box_length``,
sampled on ``n`` points per axis.  Wave numbers are integer multiples of
1/L stored in standard FFT ordering.  The origin x = 0 sits on grid
index 0, so ``Grid3.x`` uses the same wrapped ordering as the wave numbers.

Normalization convention (used everywhere in the package)::

    forward:  c_k = (1/n^3) sum_x f(x) exp(-i k.x)
    inverse:  f(x) = sum_k c_k exp(i k.x)

so the k = 0 coefficient of a field is its mean value, and the L^2 norm
over the box is ``sqrt(V * sum |c_k|^2)`` with V = (2 pi L)^3.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

THREADS_ENV = "HYPERLC_THREADS"


def fft_workers() -> int:
    """Thread count for transforms, read from ``HYPERLC_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid on a cube of side ``2*pi*box_length``."""

    points_per_axis: int
    box_length: float = 1.0
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        n = self.points_per_axis
        if int(n) != n or n < 8 or n % 2:
            raise ValueError(f"points_per_axis must be an even integer >= 8, got {n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def side(self) -> float:
        return 2 * np.pi * self.box_length

    @property
    def spacing(self) -> float:
        return self.side / self.n

    @property
    def volume(self) -> float:
        return self.side**3

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer mode numbers m in FFT ordering, k = m / box_length."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)

    @cached_property
    def k1d(self) -> np.ndarray:
        return self.mode_index / self.box_length

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable wave-vector components (shapes (n,1,1), (1,n,1), (1,1,n))."""
        k = self.k1d
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2, k3 = self.k
        return k1**2 + k2**2 + k3**2

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable physical coordinates in [-pi L, pi L), origin at index 0."""
        x = self.spacing * self.mode_index.astype(float)
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    @cached_property
    def radius(self) -> np.ndarray:
        x1, x2, x3 = self.x
        return np.sqrt(x1**2 + x2**2 + x3**2)

    @cached_property
    def nyquist_axis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis boolean masks, True on the Nyquist plane of that axis."""
        nyq = np.abs(self.mode_index) == self.n // 2
        return (nyq[:, None, None], nyq[None, :, None], nyq[None, None, :])

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True for retained modes: |m_i| < dealias_fraction * n/2 on every axis."""
        keep = np.abs(self.mode_index) < self.dealias_fraction * self.n / 2
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    @property
    def cutoff_mode(self) -> int:
        """Largest retained integer mode number per axis."""
        return int(np.max(np.abs(self.mode_index[np.abs(self.mode_index) < self.dealias_fraction * self.n / 2])))

    @property
    def kmax(self) -> float:
        """Largest resolved |xi| on the grid (corner of the retained cube)."""
        return float(np.sqrt(3.0) * self.cutoff_mode / self.box_length)

    def zeros(self, *lead: int) -> np.ndarray:
        return np.zeros(lead + self.shape, dtype=complex)


# -- raw array transforms ---------------------------------------------------


def fft3(a: np.ndarray) -> np.ndarray:
    """Forward transform over the last three axes (carries 1/n^3)."""
    return sfft.fftn(a, axes=(-3, -2, -1), norm="forward", workers=fft_workers())


def ifft3(c: np.ndarray) -> np.ndarray:
    """Inverse transform over the last three axes (no scaling)."""
    return sfft.ifftn(c, axes=(-3, -2, -1), norm="forward", workers=fft_workers())


def ifft3_real(c: np.ndarray) -> np.ndarray:
    return ifft3(c).real


def reflect(c: np.ndarray) -> np.ndarray:
    """Return the array indexed at -k: ``out[k] = c[-k]`` over the last three axes."""
    out = np.flip(c, axis=(-3, -2, -1))
    return np.roll(out, 1, axis=(-3, -2, -1))


def hermitian_part(c: np.ndarray) -> np.ndarray:
    """Coefficients of the real part of the field with coefficients ``c``."""
    return 0.5 * (c + np.conj(reflect(c)))


# -- field types -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex Fourier coefficients of a scalar field on ``grid``."""

    grid: Grid3
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}")

    def physical(self) -> np.ndarray:
        return ifft3(self.coeffs)

    def real_physical(self) -> np.ndarray:
        return ifft3_real(self.coeffs)

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        scale = max(np.max(np.abs(c)), 1e-300)
        return bool(np.max(np.abs(c - np.conj(reflect(c)))) <= tol * scale)

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField3:
    """Three spectral components sharing one grid, stored as a (3, n, n, n) array."""

    grid: Grid3
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (3,) + self.grid.shape:
            raise ValueError(f"vector coefficient shape {self.coeffs.shape} does not match grid")

    @classmethod
    def from_components(cls, components) -> "VectorField3":
        components = list(components)
        if len(components) != 3:
            raise ValueError("a VectorField3 needs exactly three components")
        grid = components[0].grid
        if any(c.grid != grid for c in components):
            raise ValueError("all components must share one grid")
        return cls(grid, np.stack([c.coeffs for c in components]))

    @property
    def components(self) -> tuple[SpectralField, SpectralField, SpectralField]:
        return tuple(SpectralField(self.grid, self.coeffs[i]) for i in range(3))

    def physical(self) -> np.ndarray:
        return ifft3(self.coeffs)

    def real_physical(self) -> np.ndarray:
        return ifft3_real(self.coeffs)

    def __add__(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return VectorField3(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return VectorField3(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return VectorField3(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


# -- operations --------------------------------------------------------------


def transform_forward(physical: np.ndarray, grid: Grid3) -> SpectralField:
    physical = np.asarray(physical)
    if physical.shape != grid.shape:
        raise ValueError(f"array shape {physical.shape} does not match grid {grid.shape}")
    return SpectralField(grid, fft3(physical.astype(complex)))


def transform_inverse(f: SpectralField) -> np.ndarray:
    return f.physical()


def derivative_symbol(grid: Grid3, axis: int, order: int = 1) -> np.ndarray:
    """Multiplier (i k_axis)^order with the Nyquist plane zeroed for odd orders."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    if order < 1 or int(order) != order:
        raise ValueError(f"order must be a positive integer, got {order}")
    k = grid.k[axis - 1]
    sym = (1j * k) ** order
    if order % 2:
        sym = np.where(grid.nyquist_axis[axis - 1], 0.0, sym)
    return sym


def differentiate(f: SpectralField, axis: int, order: int = 1) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * derivative_symbol(f.grid, axis, order))


def gradient_coeffs(c: np.ndarray, grid: Grid3) -> np.ndarray:
    """Spectral gradient of scalar coefficients ``c`` -> shape (3,) + c.shape."""
    return np.stack([c * derivative_symbol(grid, a) for a in (1, 2, 3)], axis=-4)


def divergence_coeffs(c: np.ndarray, grid: Grid3) -> np.ndarray:
    """Spectral divergence over axis -4 of ``c`` (length 3)."""
    return sum(c[..., a, :, :, :] * derivative_symbol(grid, a + 1) for a in range(3))


def dealias(c: np.ndarray, grid: Grid3) -> np.ndarray:
    return np.where(grid.dealias_mask, c, 0.0)


def dealias_product(fs) -> SpectralField:
    """Pointwise product of 2-4 fields, inputs and result truncated to the 2/3 cube.

    Quadratic products of truncated inputs are alias-free for the default
    dealias fraction; cubic and quartic products retain a small aliasing error.
    """
    fs = list(fs)
    if not 2 <= len(fs) <= 4:
        raise ValueError(f"dealias_product takes 2-4 factors, got {len(fs)}")
    grid = fs[0].grid
    if any(f.grid != grid for f in fs):
        raise ValueError("factors live on different grids")
    prod = np.ones(grid.shape, dtype=complex)
    for f in fs:
        prod = prod * ifft3(dealias(f.coeffs, grid))
    return SpectralField(grid, dealias(fft3(prod), grid))


def sobolev_weight(grid: Grid3, order: float) -> np.ndarray:
    return (1.0 + grid.ksq) ** order


def sobolev_norm(f, order: float = 0.0) -> float:
    """H^order norm  (V * sum (1+|k|^2)^order |c_k|^2)^(1/2); order 0 is the L^2 norm."""
    if order < 0:
        raise ValueError("Sobolev order must be nonnegative")
    grid = f.grid
    w = sobolev_weight(grid, order)
    c = f.coeffs
    total = np.sum(w * np.abs(c) ** 2) if c.ndim == 3 else np.sum(w[None] * np.abs(c) ** 2)
    return float(np.sqrt(grid.volume * total))


def l2_norm(f) -> float:
    return sobolev_norm(f, 0.0)


def sup_norm(f) -> float:
    """Max of |field| over the collocation points."""
    return float(np.max(np.abs(f.physical())))
