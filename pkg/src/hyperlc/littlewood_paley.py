"""Smooth dyadic frequency projections P_k and space-frequency pieces Q_jk."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Grid3, SpectralField, fft3, ifft3, l2_norm, sup_norm


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def mollifier(r) -> np.ndarray:
    """Even bump, 1 on [-1, 1], 0 outside [-2, 2], smooth in between."""
    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - _smooth_step(r - 1.0)


def shell_symbol(r, k: int) -> np.ndarray:
    """phi_k(r) = phi(r / 2^k) - phi(r / 2^(k-1))."""
    return mollifier(r / 2.0**k) - mollifier(r / 2.0 ** (k - 1))


def resolved_shells(grid: Grid3) -> range:
    """Shells whose sum reproduces every nonzero grid mode exactly.

    The lowest shell is truncated by the box (|xi| >= 1/L); the returned range
    is reported with every shell diagnostic.
    """
    kmin = 1.0 / grid.box_length
    kmax_grid = math.sqrt(3.0) * (grid.n // 2) / grid.box_length
    lo = math.floor(math.log2(kmin))
    hi = math.ceil(math.log2(kmax_grid))
    return range(lo, hi + 1)


@dataclass(frozen=True)
class DyadicProjector:
    """Fourier multiplier phi_k(|xi|) on the shell |xi| ~ 2^k."""

    k: int

    def multiplier(self, grid: Grid3) -> np.ndarray:
        return shell_symbol(grid.kmag, self.k)

    def __call__(self, f: SpectralField) -> SpectralField:
        return SpectralField(f.grid, self.multiplier(f.grid) * f.coeffs)


def lp_project(f: SpectralField, k: int) -> SpectralField:
    return DyadicProjector(k)(f)


def lp_project_leq(f: SpectralField, k: int) -> SpectralField:
    """P_{<=k}; the mean mode is kept (phi(0) = 1)."""
    return SpectralField(f.grid, mollifier(f.grid.kmag / 2.0**k) * f.coeffs)


def lp_project_gt(f: SpectralField, k: int) -> SpectralField:
    """P_{>k} = 1 - P_{<=k}, supported on |xi| > 2^k."""
    return SpectralField(f.grid, (1.0 - mollifier(f.grid.kmag / 2.0**k)) * f.coeffs)


def lp_decompose(f: SpectralField) -> dict[int, SpectralField]:
    return {k: lp_project(f, k) for k in resolved_shells(f.grid)}


def bernstein_ratio(f: SpectralField, k: int) -> float:
    """||P_k f||_inf / (2^(3k/2) ||P_k f||_2): the Bernstein constant seen by f."""
    pk = lp_project(f, k)
    l2 = l2_norm(pk)
    if l2 == 0:
        return 0.0
    return sup_norm(pk) / (2.0 ** (1.5 * k) * l2)


# -- physical-space localization -----------------------------------------


def in_index_set(k: int, j: int) -> bool:
    return j >= 0 and k + j >= 0


def spatial_cutoff(grid: Grid3, j: int, k: int) -> np.ndarray:
    """The three-case physical cutoff attached to (k, j), centered at the origin."""
    if not in_index_set(k, j):
        raise ValueError(f"(k, j) = ({k}, {j}) lies outside the index set k + j >= 0, j >= 0")
    r = grid.radius
    if k + j == 0 and k <= 0:
        return mollifier(r / 2.0 ** (-k))
    if j == 0 and k >= 0:
        return mollifier(r)
    return shell_symbol(r, j)


def q_indices(grid: Grid3, k: int, full: bool = True) -> range:
    """Admissible j for shell k.

    ``full=True`` extends j until the cutoffs cover the whole box (needed for
    exact reconstruction); otherwise j stops at 2^j <= box half-side.
    """
    j0 = max(-k, 0)
    if full:
        jmax = math.ceil(math.log2(math.sqrt(3.0) * grid.side / 2)) + 1
    else:
        jmax = math.floor(math.log2(grid.side / 2))
    return range(j0, max(j0, jmax) + 1)


def q_project(f: SpectralField, j: int, k: int) -> SpectralField:
    """Q_jk f = cutoff_j^(k)(x) * P_k f(x)."""
    cut = spatial_cutoff(f.grid, j, k)
    pk = ifft3(lp_project(f, k).coeffs)
    return SpectralField(f.grid, fft3(cut * pk))
