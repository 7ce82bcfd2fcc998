"""Nonlinear terms and the maps between the director, angle and diagonal forms.

Three equivalent descriptions of the flow are used:

* director form: velocity ``u`` and unit director ``d`` with ``dt_d``;
* angle form: ``d = (cos p1 cos p2, sin p1 cos p2, sin p2)`` with angles
  ``p1, p2`` near zero, so that ``d`` stays near ``e1``;
* diagonal form: ``v = U u`` for the velocity and the normalized wave
  ``Phi = dt p + i|grad| p`` for the angles.

Every velocity tendency is Leray-projected; pressure is never stored.
Nonlinear products are formed in physical space from inputs inside the
2/3 cube and truncated back to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .multipliers import Coefficients, L_on_grid, apply_U, leray_coeffs
from .spectral import (
    Grid3,
    SpectralField,
    VectorField3,
    dealias,
    divergence_coeffs,
    fft3,
    gradient_coeffs,
    hermitian_part,
    ifft3,
    reflect,
)

DEFAULT_MARGIN = 0.2
DEFAULT_QUADRATURE_NODES = 8


class ChartViolation(RuntimeError):
    """The director left the angle chart around e1."""


# -- state types -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AngleState:
    """Polar angles of the director and their time derivatives."""

    phi1: SpectralField
    phi2: SpectralField
    dphi1: SpectralField
    dphi2: SpectralField
    margin: float = DEFAULT_MARGIN

    @property
    def grid(self) -> Grid3:
        return self.phi1.grid

    @property
    def phi_coeffs(self) -> np.ndarray:
        return np.stack([self.phi1.coeffs, self.phi2.coeffs])

    @property
    def dphi_coeffs(self) -> np.ndarray:
        return np.stack([self.dphi1.coeffs, self.dphi2.coeffs])

    @classmethod
    def from_coeffs(cls, grid: Grid3, phi: np.ndarray, dphi: np.ndarray, margin: float = DEFAULT_MARGIN):
        return cls(SpectralField(grid, phi[0]), SpectralField(grid, phi[1]),
                   SpectralField(grid, dphi[0]), SpectralField(grid, dphi[1]), margin)


@dataclass(frozen=True, eq=False)
class DirectorState:
    d: VectorField3
    dt_d: VectorField3

    @property
    def grid(self) -> Grid3:
        return self.d.grid

    def unit_residual(self) -> float:
        d = self.d.real_physical()
        return float(np.max(np.abs(np.sqrt(np.sum(d * d, axis=0)) - 1.0)))

    def tangency_residual(self) -> float:
        return float(np.max(np.abs(np.sum(self.d.real_physical() * self.dt_d.real_physical(), axis=0))))


@dataclass(frozen=True, eq=False)
class FlowState:
    """Diagonalized velocity v = U u."""

    v: VectorField3

    @property
    def grid(self) -> Grid3:
        return self.v.grid

    @cached_property
    def u(self) -> VectorField3:
        return VectorField3(self.grid, apply_U(self.v.coeffs, self.grid))

    @classmethod
    def from_velocity(cls, u: VectorField3) -> "FlowState":
        return cls(VectorField3(u.grid, apply_U(u.coeffs, u.grid)))


@dataclass(frozen=True, eq=False)
class NormalizedWave:
    """Phi_j = dt phi_j + i|grad| phi_j; the xi = 0 coefficient holds mean(dt phi_j)."""

    Phi1: SpectralField
    Phi2: SpectralField

    @property
    def grid(self) -> Grid3:
        return self.Phi1.grid

    @property
    def coeffs(self) -> np.ndarray:
        return np.stack([self.Phi1.coeffs, self.Phi2.coeffs])

    @classmethod
    def from_coeffs(cls, grid: Grid3, c: np.ndarray) -> "NormalizedWave":
        return cls(SpectralField(grid, c[0]), SpectralField(grid, c[1]))


def wave_from_angles(phi: np.ndarray, dphi: np.ndarray, grid: Grid3) -> np.ndarray:
    return dphi + 1j * grid.kmag * phi


def angles_from_wave(Phi: np.ndarray, grid: Grid3, mean_phi=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Recover (phi, dt phi) coefficients; phi = (2i|grad|)^-1 (Phi - conj Phi) off xi = 0."""
    conj_ref = np.conj(reflect(Phi))
    dphi = 0.5 * (Phi + conj_ref)
    kmag = grid.kmag
    safe = np.where(kmag > 0, kmag, 1.0)
    phi = np.where(kmag > 0, (Phi - conj_ref) / (2j * safe), 0.0)
    phi[(slice(None), 0, 0, 0)] = np.asarray(mean_phi, dtype=float)
    return phi, dphi


def normalized_wave(a: AngleState) -> NormalizedWave:
    return NormalizedWave.from_coeffs(a.grid, wave_from_angles(a.phi_coeffs, a.dphi_coeffs, a.grid))


def angle_state_from_wave(w: NormalizedWave, mean_phi=(0.0, 0.0), margin: float = DEFAULT_MARGIN) -> AngleState:
    phi, dphi = angles_from_wave(w.coeffs, w.grid, mean_phi)
    return AngleState.from_coeffs(w.grid, phi, dphi, margin)


# -- pointwise geometry ------------------------------------------------------


def check_chart(phi2: np.ndarray, margin: float) -> None:
    bound = np.pi / 2 - margin
    worst = np.max(np.abs(phi2))
    if not worst < bound:
        idx = np.unravel_index(np.argmax(np.abs(phi2)), phi2.shape)
        raise ChartViolation(f"|phi2| = {worst:.6g} >= pi/2 - {margin} at grid index {tuple(int(i) for i in idx)}")


def director_from_angles(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    c1, s1, c2, s2 = np.cos(p1), np.sin(p1), np.cos(p2), np.sin(p2)
    return np.stack([c1 * c2, s1 * c2, s2])


def director_angle_jacobian(p1: np.ndarray, p2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(d/dp1 d, d/dp2 d) evaluated pointwise."""
    c1, s1, c2, s2 = np.cos(p1), np.sin(p1), np.cos(p2), np.sin(p2)
    zero = np.zeros_like(p1)
    return np.stack([-s1 * c2, c1 * c2, zero]), np.stack([-c1 * s2, -s1 * s2, c2])


def director_angle_hessian(p1, p2):
    """(d11, d12, d22) second angle-derivatives of d, closed form."""
    c1, s1, c2, s2 = np.cos(p1), np.sin(p1), np.cos(p2), np.sin(p2)
    zero = np.zeros_like(p1)
    d11 = np.stack([-c1 * c2, -s1 * c2, zero])
    d12 = np.stack([s1 * s2, -c1 * s2, zero])
    d22 = np.stack([-c1 * c2, -s1 * c2, -s2])
    return d11, d12, d22


def angles_to_director(a: AngleState) -> DirectorState:
    grid = a.grid
    p1, p2 = a.phi1.real_physical(), a.phi2.real_physical()
    check_chart(p2, a.margin)
    q1, q2 = a.dphi1.real_physical(), a.dphi2.real_physical()
    d = director_from_angles(p1, p2)
    j1, j2 = director_angle_jacobian(p1, p2)
    dtd = j1 * q1 + j2 * q2
    return DirectorState(VectorField3(grid, fft3(d)), VectorField3(grid, fft3(dtd)))


def director_to_angles(s: DirectorState, margin: float = DEFAULT_MARGIN) -> AngleState:
    """Invert the angle chart; requires d1 > 0 everywhere."""
    grid = s.grid
    d = s.d.real_physical()
    dtd = s.dt_d.real_physical()
    if np.min(d[0]) <= 0:
        idx = np.unravel_index(np.argmin(d[0]), d[0].shape)
        raise ChartViolation(f"d1 = {d[0][idx]:.6g} <= 0 at grid index {tuple(int(i) for i in idx)}")
    p1 = np.arctan2(d[1], d[0])
    p2 = np.arcsin(np.clip(d[2], -1.0, 1.0))
    rho2 = d[0] ** 2 + d[1] ** 2
    q1 = (d[0] * dtd[1] - d[1] * dtd[0]) / rho2
    q2 = dtd[2] / np.sqrt(rho2)
    phi = fft3(np.stack([p1, p2]))
    dphi = fft3(np.stack([q1, q2]))
    return AngleState.from_coeffs(grid, phi, dphi, margin)


# -- tensors -----------------------------------------------------------------


def velocity_gradient(u_hat: np.ndarray, grid: Grid3) -> np.ndarray:
    """G[i, j] = d_j u_i in physical space."""
    return ifft3(gradient_coeffs(u_hat, grid)).real


def strain_from_gradient(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Gt = np.swapaxes(G, 0, 1)
    return 0.5 * (G + Gt), 0.5 * (G - Gt)


def strain_tensors(u: VectorField3) -> tuple[np.ndarray, np.ndarray]:
    """Physical (A, B): A_ij = (d_j u_i + d_i u_j)/2, B_ij = (d_j u_i - d_i u_j)/2."""
    return strain_from_gradient(velocity_gradient(u.coeffs, u.grid))


def _matvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("ij...,j...->i...", A, x)


def sigma_physical(c: Coefficients, d: np.ndarray, A: np.ndarray) -> np.ndarray:
    """S[j, i] = sigma_ji = nu1 (d.Ad) d_i d_j + nu5 (d_j (Ad)_i + d_i (Ad)_j)."""
    Ad = _matvec(A, d)
    dAd = np.sum(d * Ad, axis=0)
    dd = d[:, None] * d[None, :]
    cross = d[:, None] * Ad[None, :]  # [j, i] = d_j (Ad)_i
    return c.nu1 * dAd * dd + c.nu5 * (cross + np.swapaxes(cross, 0, 1))


def stress_sigma(c: Coefficients, d: VectorField3, A: np.ndarray) -> np.ndarray:
    """Dealiased spectral coefficients of sigma_ji, shape (3, 3, n, n, n)."""
    grid = d.grid
    return dealias(fft3(sigma_physical(c, d.real_physical(), A)), grid)


def div_flux(F: np.ndarray, grid: Grid3) -> np.ndarray:
    """Coefficients of sum_j d_j F_ij from the physical flux F[i, j]."""
    return divergence_coeffs(dealias(fft3(F), grid), grid)


def div_sigma(c: Coefficients, d: VectorField3, A: np.ndarray) -> VectorField3:
    """(div sigma)_i = d_j sigma_ji."""
    S = sigma_physical(c, d.real_physical(), A)
    return VectorField3(d.grid, div_flux(np.swapaxes(S, 0, 1), d.grid))


def lagrange_gamma(s: DirectorState, u: VectorField3) -> SpectralField:
    """Gamma = -|dt d + u.grad d|^2 + |grad d|^2, dealiased."""
    grid = s.grid
    up = u.real_physical()
    Dg = ifft3(gradient_coeffs(s.d.coeffs, grid)).real  # [k, j] = d_j d_k
    w = s.dt_d.real_physical() + np.einsum("j...,kj...->k...", up, Dg)
    gamma = -np.sum(w * w, axis=0) + np.sum(Dg * Dg, axis=(0, 1))
    return SpectralField(grid, dealias(fft3(gamma), grid))


# -- director form -----------------------------------------------------------


def director_tendencies(c: Coefficients, u_hat: np.ndarray, d_hat: np.ndarray, dtd_hat: np.ndarray, grid: Grid3):
    """Raw-array director right-hand side -> (du_hat, d(dt d)_hat)."""
    up = ifft3(u_hat).real
    G = velocity_gradient(u_hat, grid)
    A, _ = strain_from_gradient(G)
    d = ifft3(d_hat).real
    Dg = ifft3(gradient_coeffs(d_hat, grid)).real  # [k, j] = d_j d_k
    dtd = ifft3(dtd_hat).real
    Dq = ifft3(gradient_coeffs(dtd_hat, grid)).real

    sigma = sigma_physical(c, d, A)
    elastic = np.einsum("kj...,kl...->jl...", Dg, Dg)  # [i, j] = d_i d . d_j d
    flux = -up[:, None] * up[None, :] - elastic + np.swapaxes(sigma, 0, 1)
    forcing = div_flux(flux, grid)
    du = leray_coeffs(forcing - 0.5 * c.nu4 * grid.ksq * u_hat, grid)
    du[:, 0, 0, 0] = 0.0
    dtu = ifft3(du).real

    w = dtd + np.einsum("j...,kj...->k...", up, Dg)
    gamma = -np.sum(w * w, axis=0) + np.sum(Dg * Dg, axis=(0, 1))
    Dw = ifft3(gradient_coeffs(dealias(fft3(w), grid), grid)).real
    nonlin = (
        gamma * d
        - np.einsum("j...,kj...->k...", up, Dw)
        - np.einsum("j...,kj...->k...", dtu, Dg)
        - np.einsum("j...,kj...->k...", up, Dq)
    )
    ddtd = -grid.ksq * d_hat + dealias(fft3(nonlin), grid)
    return du, ddtd


def rhs_director(c: Coefficients, s: DirectorState, f: FlowState) -> tuple[VectorField3, VectorField3]:
    """Velocity tendency and second-order director tendency d/dt(dt d)."""
    grid = s.grid
    du, ddtd = director_tendencies(c, f.u.coeffs, s.d.coeffs, s.dt_d.coeffs, grid)
    return VectorField3(grid, du), VectorField3(grid, ddtd)


# -- angle form: individual terms --------------------------------------------


def coupling_flux(c: Coefficients, p1: np.ndarray, p2: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Flux F[i, j] with (grad x (phi x grad u))_i = d_j F_ij, term by term from the displayed blocks."""
    F = np.zeros((3, 3) + p1.shape)
    # nu1 block
    F[0, 1] += c.nu1 * A[0, 0] * p1
    F[0, 2] += c.nu1 * A[0, 0] * p2
    F[0, 0] += 2 * c.nu1 * (p1 * A[0, 1] + p2 * A[0, 2])
    F[1, 0] += c.nu1 * A[0, 0] * p1
    F[2, 0] += c.nu1 * A[0, 0] * p2
    # nu5 block
    F[0, 1] += c.nu5 * p1 * A[0, 0]
    F[0, 2] += c.nu5 * p2 * A[0, 0]
    F[0, 0] += c.nu5 * (p1 * A[1, 0] + p2 * A[2, 0])
    F[0] += c.nu5 * (p1 * A[1] + p2 * A[2])
    F[1, 1] += c.nu5 * p1 * A[0, 1]
    F[1, 2] += c.nu5 * p2 * A[0, 1]
    F[1, 0] += c.nu5 * (p1 * A[1, 1] + p2 * A[2, 1])
    F[1] += c.nu5 * p1 * A[0]
    F[2, 1] += c.nu5 * p1 * A[0, 2]
    F[2, 2] += c.nu5 * p2 * A[0, 2]
    F[2, 0] += c.nu5 * (p1 * A[1, 2] + p2 * A[2, 2])
    F[2] += c.nu5 * p2 * A[0]
    return F


def quadrature_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes s and weights w with sum w f(s) ~ int_0^1 f(s) (1 - s) ds."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (x + 1.0)
    return s, 0.5 * w * (1.0 - s)


def err11_flux(c: Coefficients, p1: np.ndarray, p2: np.ndarray, A: np.ndarray,
               nodes: int = DEFAULT_QUADRATURE_NODES) -> np.ndarray:
    """R[i, j] with Err11_i = d_j R_ij: second-order Taylor remainders of the stress in the angles.

    Inside the s-integral the derivatives are with respect to the angle
    arguments of d, evaluated in closed form at (s p1, s p2).
    """
    R = np.zeros((3, 3) + p1.shape)
    upper = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    for s, wt in zip(*quadrature_rule(nodes)):
        c1, s1, c2, s2 = np.cos(s * p1), np.sin(s * p1), np.cos(s * p2), np.sin(s * p2)
        zero = np.zeros_like(p1)
        D = np.stack([c1 * c2, s1 * c2, s2])
        # first and second derivatives along the ray s -> (s p1, s p2)
        g1 = np.stack([-p1 * s1 * c2 - p2 * c1 * s2, p1 * c1 * c2 - p2 * s1 * s2, p2 * c2])
        g2 = np.stack([
            -(p1 * p1 + p2 * p2) * c1 * c2 + 2 * p1 * p2 * s1 * s2,
            -(p1 * p1 + p2 * p2) * s1 * c2 - 2 * p1 * p2 * c1 * s2,
            -p2 * p2 * s2 + zero,
        ])
        AD, AG1, AG2 = _matvec(A, D), _matvec(A, g1), _matvec(A, g2)
        a0 = np.sum(D * AD, axis=0)
        a1 = 2 * np.sum(g1 * AD, axis=0)
        a2 = 2 * np.sum(g2 * AD, axis=0) + 2 * np.sum(g1 * AG1, axis=0)
        for i, j in upper:
            nu1_part = (a2 * D[i] * D[j] + 2 * a1 * (g1[i] * D[j] + D[i] * g1[j])
                        + a0 * (g2[i] * D[j] + 2 * g1[i] * g1[j] + D[i] * g2[j]))
            # T[i, j] = (d_j (A d)_i)'' along the ray, symmetrized
            T = (AD[i] * g2[j] + 2 * AG1[i] * g1[j] + AG2[i] * D[j]
                 + AD[j] * g2[i] + 2 * AG1[j] * g1[i] + AG2[j] * D[i])
            R[i, j] += wt * (c.nu1 * nu1_part + c.nu5 * T)
    for i, j in upper[1:]:
        if i != j:
            R[j, i] = R[i, j]
    return R


def err12_flux(p1: np.ndarray, p2: np.ndarray, grad_p1: np.ndarray) -> np.ndarray:
    return np.sin(p2) ** 2 * grad_p1[:, None] * grad_p1[None, :]


def err2_physical(p2, dot1, dot2, grad_p1, grad_p2):
    """(2 tan p2 (p1' p2' - grad p1.grad p2), sin(2 p2)/2 (-p1'^2 + |grad p1|^2)), p' = material derivative."""
    e1 = 2 * np.tan(p2) * (dot1 * dot2 - np.sum(grad_p1 * grad_p2, axis=0))
    e2 = 0.5 * np.sin(2 * p2) * (-dot1 * dot1 + np.sum(grad_p1 * grad_p1, axis=0))
    return e1, e2


class AngleKinematics:
    """Physical-space quantities of an angle state and velocity, computed once."""

    def __init__(self, grid: Grid3, phi: np.ndarray, dphi: np.ndarray, u_hat: np.ndarray,
                 margin: float = DEFAULT_MARGIN):
        self.grid = grid
        self.phi_hat = phi
        self.dphi_hat = dphi
        self.u_hat = u_hat
        self.margin = margin

    @cached_property
    def p(self) -> np.ndarray:
        p = ifft3(self.phi_hat).real
        check_chart(p[1], self.margin)
        return p

    @cached_property
    def q(self) -> np.ndarray:
        return ifft3(self.dphi_hat).real

    @cached_property
    def grad_p(self) -> np.ndarray:
        return ifft3(gradient_coeffs(self.phi_hat, self.grid)).real  # [a, j]

    @cached_property
    def grad_q(self) -> np.ndarray:
        return ifft3(gradient_coeffs(self.dphi_hat, self.grid)).real

    @cached_property
    def u(self) -> np.ndarray:
        return ifft3(self.u_hat).real

    @cached_property
    def G(self) -> np.ndarray:
        return velocity_gradient(self.u_hat, self.grid)

    @cached_property
    def A(self) -> np.ndarray:
        return strain_from_gradient(self.G)[0]

    @cached_property
    def transport(self) -> np.ndarray:
        """u . grad phi_a."""
        return np.einsum("j...,aj...->a...", self.u, self.grad_p)

    @cached_property
    def material(self) -> np.ndarray:
        return self.q + self.transport


def _kinematics(a: AngleState, u: VectorField3 | None) -> AngleKinematics:
    grid = a.grid
    u_hat = grid.zeros(3) if u is None else u.coeffs
    return AngleKinematics(grid, a.phi_coeffs, a.dphi_coeffs, u_hat, a.margin)


def quadratic_coupling(c: Coefficients, a: AngleState, u: VectorField3) -> VectorField3:
    kin = _kinematics(a, u)
    F = coupling_flux(c, kin.p[0], kin.p[1], kin.A)
    return VectorField3(a.grid, div_flux(F, a.grid))


def err11(c: Coefficients, a: AngleState, A: np.ndarray, nodes: int = DEFAULT_QUADRATURE_NODES) -> VectorField3:
    kin = _kinematics(a, None)
    R = err11_flux(c, kin.p[0], kin.p[1], A, nodes)
    return VectorField3(a.grid, div_flux(R, a.grid))


def err12(a: AngleState) -> VectorField3:
    kin = _kinematics(a, None)
    return VectorField3(a.grid, div_flux(err12_flux(kin.p[0], kin.p[1], kin.grad_p[0]), a.grid))


def err2(a: AngleState, u: VectorField3 | None = None) -> tuple[SpectralField, SpectralField]:
    kin = _kinematics(a, u)
    e1, e2 = err2_physical(kin.p[1], kin.material[0], kin.material[1], kin.grad_p[0], kin.grad_p[1])
    grid = a.grid
    return SpectralField(grid, dealias(fft3(e1), grid)), SpectralField(grid, dealias(fft3(e2), grid))


# -- angle form: full right-hand side ----------------------------------------


@dataclass(frozen=True, eq=False)
class AngleTendency:
    """dv/dt (including -L v), the Phi-equation source, and du/dt."""

    dv: VectorField3
    wave_source: tuple[SpectralField, SpectralField]
    du: VectorField3


def velocity_forcing(c: Coefficients, kin: AngleKinematics, nodes: int = DEFAULT_QUADRATURE_NODES) -> np.ndarray:
    """Unprojected nonlinear velocity forcing (coefficients)."""
    grid = kin.grid
    p1, p2 = kin.p
    gp = kin.grad_p
    flux = -np.einsum("ai...,aj...->ij...", gp, gp)
    flux += coupling_flux(c, p1, p2, kin.A)
    flux += err11_flux(c, p1, p2, kin.A, nodes)
    flux += err12_flux(p1, p2, gp[0])
    adv = np.einsum("j...,ij...->i...", kin.u, kin.G)
    return div_flux(flux, grid) - dealias(fft3(adv), grid)


def wave_forcing(kin: AngleKinematics, dtu: np.ndarray) -> np.ndarray:
    """Coefficients of -dt u.grad phi - 2 u.grad dt phi - u.grad(u.grad phi) + Err2."""
    grid = kin.grid
    u, gp = kin.u, kin.grad_p
    w_hat = dealias(fft3(kin.transport), grid)
    grad_w = ifft3(gradient_coeffs(w_hat, grid)).real
    src = (
        -np.einsum("j...,aj...->a...", dtu, gp)
        - 2 * np.einsum("j...,aj...->a...", u, kin.grad_q)
        - np.einsum("j...,aj...->a...", u, grad_w)
    )
    e1, e2 = err2_physical(kin.p[1], kin.material[0], kin.material[1], gp[0], gp[1])
    src[0] += e1
    src[1] += e2
    return dealias(fft3(src), grid)


def angle_tendencies(c: Coefficients, grid: Grid3, v_hat: np.ndarray, phi: np.ndarray, dphi: np.ndarray,
                     margin: float = DEFAULT_MARGIN, nodes: int = DEFAULT_QUADRATURE_NODES):
    """Raw-array angle-form right-hand side.

    Returns ``(nv, dv, src, du)``: the nonlinear part U P N of the v tendency,
    the full v tendency, the Phi source, and du/dt.
    """
    u_hat = apply_U(v_hat, grid)
    kin = AngleKinematics(grid, phi, dphi, u_hat, margin)
    forcing = velocity_forcing(c, kin, nodes)
    proj = leray_coeffs(forcing, grid)
    proj[:, 0, 0, 0] = 0.0
    nv = apply_U(proj, grid)
    dv = nv - L_on_grid(c, grid) * v_hat
    du = apply_U(dv, grid)
    dtu = ifft3(du).real
    src = wave_forcing(kin, dtu)
    return nv, dv, src, du


def rhs_angle_system(c: Coefficients, a: AngleState, f: FlowState,
                     nodes: int = DEFAULT_QUADRATURE_NODES) -> AngleTendency:
    grid = a.grid
    _, dv, src, du = angle_tendencies(c, grid, f.v.coeffs, a.phi_coeffs, a.dphi_coeffs, a.margin, nodes)
    return AngleTendency(
        VectorField3(grid, dv),
        (SpectralField(grid, src[0]), SpectralField(grid, src[1])),
        VectorField3(grid, du),
    )


def angle_acceleration(a: AngleState, tendency: AngleTendency) -> np.ndarray:
    """dt^2 phi = Laplacian phi + source, as coefficients (2, n, n, n)."""
    grid = a.grid
    src = np.stack([s.coeffs for s in tendency.wave_source])
    return -grid.ksq * a.phi_coeffs + src


def pull_back_director_tendency(a: AngleState, ddtd: VectorField3) -> np.ndarray:
    """Angle accelerations implied by a director acceleration, by the chain rule."""
    p1, p2 = a.phi1.real_physical(), a.phi2.real_physical()
    q1, q2 = a.dphi1.real_physical(), a.dphi2.real_physical()
    j1, j2 = director_angle_jacobian(p1, p2)
    d11, d12, d22 = director_angle_hessian(p1, p2)
    curvature = d11 * q1 * q1 + 2 * d12 * q1 * q2 + d22 * q2 * q2
    rest = ddtd.real_physical() - curvature
    acc1 = np.sum(j1 * rest, axis=0) / np.cos(p2) ** 2
    acc2 = np.sum(j2 * rest, axis=0)
    return fft3(np.stack([acc1, acc2]))


def hermitian_clean(c: np.ndarray) -> np.ndarray:
    """Project coefficients onto real physical fields."""
    return hermitian_part(c)
