"""Fourier multipliers of the diagonalized liquid-crystal flow.

Symbols act on wave vectors ``xi`` of shape (..., 3).  The matrix symbols
follow the convention ``d/dx_j -> i xi_j`` and ``|grad| -> |xi|``, so the
diagonalizer U(xi) is real, symmetric and orthogonal, and the viscous
operator in the diagonal frame is the nonnegative vector ``L(xi)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .spectral import Grid3, SpectralField, VectorField3, ifft3


class InadmissibleCoefficients(ValueError):
    """Leslie triple violating nu4 > 0, nu1 > -2(nu4+nu5), nu5 > -nu4."""


@dataclass(frozen=True)
class Coefficients:
    """Leslie coefficients (nu1, nu4, nu5) with nu2 = nu3 = 0 and nu5 = nu6."""

    nu1: float
    nu4: float
    nu5: float

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise InadmissibleCoefficients(
                "inadmissible Leslie coefficients: " + "; ".join(errors)
                + " (required: ν4>0, ν1>-2(ν4+ν5), ν5>-ν4)"
            )

    def violations(self) -> list[str]:
        out = []
        if not self.nu4 > 0:
            out.append(f"ν4>0 violated (nu4={self.nu4!r})")
        if not self.nu1 > -2 * (self.nu4 + self.nu5):
            out.append(f"ν1>-2(ν4+ν5) violated (nu1={self.nu1!r}, -2(nu4+nu5)={-2 * (self.nu4 + self.nu5)!r})")
        if not self.nu5 > -self.nu4:
            out.append(f"ν5>-ν4 violated (nu5={self.nu5!r}, -nu4={-self.nu4!r})")
        return out

    def coercivity(self) -> tuple[float, float]:
        """Lower-bound constants (c12, c3): L_1,L_2 >= c12|xi|^2 and L_3 >= c3|xi|^2."""
        s = self.nu4 + self.nu5
        c12 = 0.5 * s * min(1.0, 1.0 + self.nu1 / (2.0 * s))
        c3 = min(0.5 * s, 0.5 * self.nu4)
        return c12, c3

    def decay_constant(self) -> float:
        return min(self.coercivity())

    def as_dict(self) -> dict:
        return {"nu1": self.nu1, "nu4": self.nu4, "nu5": self.nu5}

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 2.0) -> "Coefficients":
        """Draw a random admissible triple."""
        nu4 = rng.uniform(0.05, scale)
        nu5 = rng.uniform(-nu4, scale) * 0.999 + 1e-3 * nu4
        nu1 = rng.uniform(-2 * (nu4 + nu5), 2 * scale) * 0.999 + 1e-3 * (nu4 + nu5)
        return cls(float(nu1), float(nu4), float(nu5))


@dataclass(frozen=True)
class FourierSymbol:
    """Scalar- or 3x3-matrix-valued function of the wave vector.

    ``singular_set_rule`` documents the value used on measure-zero sets where
    the defining formula is singular (xi = 0, or the xi_1 axis for U).
    """

    name: str
    kind: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    singular_set_rule: str

    def __call__(self, xi) -> np.ndarray:
        return self.evaluator(np.asarray(xi, dtype=float))


# -- pointwise symbols ------------------------------------------------------


def _split(xi):
    xi = np.asarray(xi, dtype=float)
    return xi[..., 0], xi[..., 1], xi[..., 2]


def leray_symbol(xi) -> np.ndarray:
    """I - xi xi^T / |xi|^2, identity at xi = 0."""
    xi = np.asarray(xi, dtype=float)
    s = np.sum(xi * xi, axis=-1)
    safe = np.where(s > 0, s, 1.0)
    out = np.eye(3) - xi[..., :, None] * xi[..., None, :] / safe[..., None, None]
    return np.where((s > 0)[..., None, None], out, np.eye(3))


def u_diagonalizer(xi) -> np.ndarray:
    """U(xi) = [[1,0,0],[0,x2/r,x3/r],[0,x3/r,-x2/r]], r = sqrt(x2^2+x3^2); identity on r = 0."""
    _, x2, x3 = _split(xi)
    r = np.hypot(x2, x3)
    on = r > 0
    safe = np.where(on, r, 1.0)
    a = np.where(on, x2 / safe, 1.0)
    b = np.where(on, x3 / safe, 0.0)
    out = np.zeros(np.shape(x2) + (3, 3))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = a
    out[..., 1, 2] = b
    out[..., 2, 1] = b
    out[..., 2, 2] = np.where(on, -a, 1.0)
    return out


def operator_L_symbol(c: Coefficients, xi) -> np.ndarray:
    """Diagonal of L(xi); zero at xi = 0."""
    x1, x2, x3 = _split(xi)
    s = x1**2 + x2**2 + x3**2
    safe = np.where(s > 0, s, 1.0)
    perp = x2**2 + x3**2
    l12 = 0.5 * (c.nu4 + c.nu5) * s + c.nu1 * x1**2 * perp / safe
    l3 = 0.5 * c.nu4 * s + 0.5 * c.nu5 * x1**2
    l12 = np.where(s > 0, l12, 0.0)
    return np.stack([l12, l12, l3], axis=-1)


def operator_Lbar_symbol(c: Coefficients, xi) -> np.ndarray:
    """Symbol of the Leray-projected viscous operator, reduced with xi.u = 0."""
    x1, x2, x3 = _split(xi)
    s = x1**2 + x2**2 + x3**2
    safe = np.where(s > 0, s, 1.0)
    base = 0.5 * (c.nu4 + c.nu5) * s
    q = c.nu1 * x1**2 / safe
    out = np.zeros(np.shape(x1) + (3, 3))
    out[..., 0, 0] = base + q * (x2**2 + x3**2)
    out[..., 1, 1] = base - 0.5 * c.nu5 * x3**2 + q * x2**2
    out[..., 2, 2] = base - 0.5 * c.nu5 * x2**2 + q * x3**2
    off = (0.5 * c.nu5 + q) * x2 * x3
    out[..., 1, 2] = off
    out[..., 2, 1] = off
    return out


def operator_Ltilde_symbol(c: Coefficients, xi) -> np.ndarray:
    """Symbol of the unprojected linear operator (before using div u = 0)."""
    x1, x2, x3 = _split(xi)
    s = x1**2 + x2**2 + x3**2
    out = np.zeros(np.shape(x1) + (3, 3))
    for i in range(3):
        out[..., i, i] = 0.5 * c.nu4 * s
    out[..., 0, 0] += 0.5 * c.nu5 * s + (c.nu1 + c.nu5) * x1**2
    out[..., 1, 1] += 0.5 * c.nu5 * x1**2
    out[..., 1, 0] += 0.5 * c.nu5 * x1 * x2
    out[..., 2, 2] += 0.5 * c.nu5 * x1**2
    out[..., 2, 0] += 0.5 * c.nu5 * x1 * x3
    return out


def symbol_P() -> FourierSymbol:
    return FourierSymbol("P", "matrix3", leray_symbol, "identity at xi = 0 (mean mode passes)")


def symbol_U() -> FourierSymbol:
    return FourierSymbol("U", "matrix3", u_diagonalizer, "identity on xi_2 = xi_3 = 0")


def symbol_L(c: Coefficients) -> FourierSymbol:
    return FourierSymbol("L", "matrix3", lambda xi: operator_L_symbol(c, xi)[..., :, None] * np.eye(3),
                         "zero at xi = 0")


def symbol_L_half(c: Coefficients) -> FourierSymbol:
    return FourierSymbol("L^1/2", "matrix3",
                         lambda xi: np.sqrt(operator_L_symbol(c, xi))[..., :, None] * np.eye(3),
                         "zero at xi = 0")


def symbol_Lbar(c: Coefficients) -> FourierSymbol:
    return FourierSymbol("Lbar", "matrix3", lambda xi: operator_Lbar_symbol(c, xi), "zero at xi = 0")


def symbol_halfwave(t: float) -> FourierSymbol:
    return FourierSymbol("exp(it|grad|)", "scalar",
                         lambda xi: np.exp(1j * t * np.linalg.norm(xi, axis=-1)), "one at xi = 0")


# -- grid application --------------------------------------------------------


@lru_cache(maxsize=16)
def _U_entries(grid: Grid3):
    _, k2, k3 = grid.k
    r = np.sqrt(k2**2 + k3**2)
    on = r > 0
    safe = np.where(on, r, 1.0)
    a = np.where(on, k2 / safe, 1.0)
    b = np.where(on, k3 / safe, 0.0)
    d = np.where(on, -a, 1.0)
    # U is odd in (xi_2, xi_3); the Nyquist planes have no sign partner
    nyq = grid.nyquist_axis[1] | grid.nyquist_axis[2]
    a, b, d = (np.where(nyq, 0.0, e) for e in (a, b, d))
    return a, b, d


def apply_U(c: np.ndarray, grid: Grid3) -> np.ndarray:
    """Apply U to (3, n, n, n) coefficients; U is an involution."""
    a, b, d = _U_entries(grid)
    out = np.empty_like(c)
    out[0] = c[0]
    out[1] = a * c[1] + b * c[2]
    out[2] = b * c[1] + d * c[2]
    return out


def leray_coeffs(c: np.ndarray, grid: Grid3) -> np.ndarray:
    k1, k2, k3 = grid.k
    s = grid.ksq
    safe = np.where(s > 0, s, 1.0)
    kdotc = (k1 * c[0] + k2 * c[1] + k3 * c[2]) / safe
    out = np.empty_like(c)
    out[0] = c[0] - k1 * kdotc
    out[1] = c[1] - k2 * kdotc
    out[2] = c[2] - k3 * kdotc
    return out


def leray_project(u: VectorField3) -> VectorField3:
    return VectorField3(u.grid, leray_coeffs(u.coeffs, u.grid))


def divergence_sup(u: VectorField3) -> float:
    k1, k2, k3 = u.grid.k
    c = u.coeffs
    div = 1j * (k1 * c[0] + k2 * c[1] + k3 * c[2])
    return float(np.max(np.abs(ifft3(div))))


@lru_cache(maxsize=16)
def L_on_grid(c: Coefficients, grid: Grid3) -> np.ndarray:
    """Diagonal L symbol on the grid, shape (3, n, n, n)."""
    k1, k2, k3 = (np.broadcast_to(k, grid.shape) for k in grid.k)
    xi = np.stack([k1, k2, k3], axis=-1)
    return np.moveaxis(operator_L_symbol(c, xi), -1, 0).copy()


def L_apply(c: Coefficients, v: VectorField3) -> VectorField3:
    return VectorField3(v.grid, L_on_grid(c, v.grid) * v.coeffs)


def L_half_apply(c: Coefficients, v: VectorField3) -> VectorField3:
    """Entrywise square root of the diagonal symbol, applied in the v frame."""
    return VectorField3(v.grid, np.sqrt(L_on_grid(c, v.grid)) * v.coeffs)


def semigroup_apply(c: Coefficients, t: float, f: VectorField3, derivative_order: int = 0) -> VectorField3:
    """exp(-t L) |grad|^derivative_order, componentwise in the diagonal frame."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    if derivative_order not in (0, 1, 2, 3, 4):
        raise ValueError(f"derivative_order must be in 0..4, got {derivative_order}")
    grid = f.grid
    mult = np.exp(-t * L_on_grid(c, grid))
    if derivative_order:
        mult = mult * grid.kmag[None] ** derivative_order
    return VectorField3(grid, mult * f.coeffs)


def halfwave_apply(t: float, f: SpectralField) -> SpectralField:
    """exp(i t |grad|); unitary, mean mode unchanged."""
    return SpectralField(f.grid, np.exp(1j * t * f.grid.kmag) * f.coeffs)
