"""Operator invariant suite and the director/angle cross-check."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .multipliers import (
    Coefficients,
    apply_U,
    halfwave_apply,
    leray_coeffs,
    leray_symbol,
    operator_L_symbol,
    operator_Lbar_symbol,
    operator_Ltilde_symbol,
    semigroup_apply,
    u_diagonalizer,
)
from .physics import director_from_angles
from .spectral import Grid3, SpectralField, VectorField3, dealias, divergence_coeffs, fft3, ifft3, l2_norm
from .timestepper import (
    InitialDataSpec,
    SchemeConfig,
    director_state_from,
    generate_initial_data,
    run,
    run_director,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def as_dict(self) -> dict:
        return {"check": self.name, "value": self.value, "tolerance": self.tolerance,
                "verdict": "pass" if self.passed else "fail", "detail": self.detail}


def _mm(a, b):
    return np.einsum("...ij,...jk->...ik", a, b)


def _mv(a, x):
    return np.einsum("...ij,...j->...i", a, x)


def symbol_identity_checks(coeffs: list[Coefficients], xi: np.ndarray, rng: np.random.Generator,
                           tol: float = 1e-12) -> list[CheckResult]:
    """Pointwise identities of U, P and the viscous symbols over sampled wave vectors."""
    eye = np.eye(3)
    U = u_diagonalizer(xi)
    P = leray_symbol(xi)
    out = [
        CheckResult("U^2 = I", float(np.max(np.abs(_mm(U, U) - eye))), tol),
        CheckResult("U^T U = I", float(np.max(np.abs(_mm(np.swapaxes(U, -1, -2), U) - eye))), tol),
        CheckResult("P^2 = P", float(np.max(np.abs(_mm(P, P) - P))), tol),
        CheckResult("P xi = 0", float(np.max(np.abs(_mv(P, xi)))), tol, "gradient annihilation"),
    ]
    w = rng.standard_normal(xi.shape)
    u = _mv(P, w)  # divergence-free samples
    diag_err, lbar_err = 0.0, 0.0
    for c in coeffs:
        Lb = operator_Lbar_symbol(c, xi)
        L = operator_L_symbol(c, xi)
        lhs = _mv(U, _mv(Lb, _mv(U, u)))
        diag_err = max(diag_err, float(np.max(np.abs(lhs - L * u))))
        PLt = _mv(P, _mv(operator_Ltilde_symbol(c, xi), u))
        lbar_err = max(lbar_err, float(np.max(np.abs(_mv(Lb, u) - PLt))))
    out.append(CheckResult("U Lbar U = diag(L) on div-free", diag_err, tol, f"{len(coeffs)} coefficient triples"))
    out.append(CheckResult("Lbar = P Ltilde on div-free", lbar_err, tol))
    return out


def positivity_checks(coeffs: list[Coefficients], xi: np.ndarray, slack: float = 1e-12) -> list[CheckResult]:
    """L_1, L_2 >= c12 |xi|^2 and L_3 >= c3 |xi|^2, and the same bounds for the spectrum of P Lbar P."""
    s = np.sum(xi * xi, axis=-1)
    worst12, worst3, worst_eig = 0.0, 0.0, 0.0
    P = leray_symbol(xi)
    for c in coeffs:
        c12, c3 = c.coercivity()
        L = operator_L_symbol(c, xi)
        worst12 = max(worst12, float(np.max((c12 * s - np.minimum(L[..., 0], L[..., 1])) / s)))
        worst3 = max(worst3, float(np.max((c3 * s - L[..., 2]) / s)))
        # on the plane xi-perp the projected operator has eigenvalues {L_1, L_3}
        M = _mm(P, _mm(operator_Lbar_symbol(c, xi), P))
        ev = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))[..., 1:]
        worst_eig = max(worst_eig, float(np.max((min(c12, c3) * s - ev[..., 0]) / s)))
    return [
        CheckResult("L_1,L_2 >= c12|xi|^2", max(worst12, 0.0), slack, f"max violation / |xi|^2 = {worst12:.3e}"),
        CheckResult("L_3 >= c3|xi|^2", max(worst3, 0.0), slack, f"max violation / |xi|^2 = {worst3:.3e}"),
        CheckResult("spec(P Lbar P) >= min(c12,c3)|xi|^2", max(worst_eig, 0.0), slack),
    ]


def grid_checks(c: Coefficients, grid: Grid3, rng: np.random.Generator, tol: float = 1e-12) -> list[CheckResult]:
    """The same identities through the on-grid operators, on fields inside the dealias cube."""
    raw = dealias(fft3(rng.standard_normal((3,) + grid.shape)), grid)
    u = leray_coeffs(raw, grid)
    scale = np.max(np.abs(raw))
    div = np.max(np.abs(divergence_coeffs(u, grid))) / (scale * grid.kmax)
    back = np.max(np.abs(apply_U(apply_U(u, grid), grid) - u)) / scale
    f = SpectralField(grid, raw[0])
    unitary = abs(l2_norm(halfwave_apply(0.7, f)) - l2_norm(f)) / l2_norm(f)
    fv = VectorField3(grid, u)
    semi = semigroup_apply(c, 0.3, semigroup_apply(c, 0.2, fv)).coeffs - semigroup_apply(c, 0.5, fv).coeffs
    return [
        CheckResult("div P u = 0 on grid", float(div), tol),
        CheckResult("U U = I on grid", float(back), tol),
        CheckResult("halfwave unitary", float(unitary), tol),
        CheckResult("semigroup law", float(np.max(np.abs(semi)) / scale), tol),
    ]


def operator_suite(c: Coefficients | None = None, n_xi: int = 10_000, n_coeff: int = 100, seed: int = 0,
                   grid: Grid3 | None = None) -> list[CheckResult]:
    """Full invariant suite; ``c`` (if given) is checked alongside the random triples."""
    rng = np.random.default_rng(seed)
    coeffs = [Coefficients.random(rng) for _ in range(n_coeff)]
    if c is not None:
        coeffs.insert(0, c)
    xi = rng.standard_normal((n_xi, 3))
    out = symbol_identity_checks(coeffs, xi, rng) + positivity_checks(coeffs, xi)
    if grid is not None:
        out += grid_checks(coeffs[0], grid, rng)
    return out


# -- formulation cross-check ---------------------------------------------------


@dataclass(frozen=True)
class CrossCheckRow:
    angle_dt: float
    discrepancy: float
    order: float | None
    floor_free_order: float | None = None


def director_discrepancy(d_ref: np.ndarray, state) -> float:
    """||d_dir - d(phi)|| / ||d(phi) - e1|| over the collocation points."""
    a = state.angles()
    d = director_from_angles(a.phi1.real_physical(), a.phi2.real_physical())
    pert = d.copy()
    pert[0] -= 1.0
    return float(np.linalg.norm(d - d_ref) / np.linalg.norm(pert))


def cross_check(c: Coefficients, grid: Grid3, spec: InitialDataSpec, angle_dts, director_dt: float,
                t_end: float = 1.0, scheme: str = "ETD2") -> list[CrossCheckRow]:
    """Run both formulations from the same data and compare the director at t_end."""
    s0 = generate_initial_data(spec, grid)
    ref = run_director(director_state_from(s0), c, grid, director_dt, t_end)
    d_ref = ifft3(ref.d).real
    rows = []
    for dt in angle_dts:
        s1, _ = run(s0, SchemeConfig(dt=dt, t_end=t_end, scheme=scheme), c)
        e = director_discrepancy(d_ref, s1)
        order = floor_free = None
        if rows and e > 0:
            order = float(np.log(rows[-1].discrepancy / e) / np.log(rows[-1].angle_dt / dt))
        if len(rows) >= 2:
            floor_free = three_point_order([r.discrepancy for r in rows[-2:]] + [e], rows[-1].angle_dt / dt)
        rows.append(CrossCheckRow(dt, e, order, floor_free))
    return rows


def three_point_order(errors, ratio: float = 2.0) -> float | None:
    """Order p of e(h) = C h^p + f from three errors at h, h/ratio, h/ratio^2.

    The unknown floor f (reference error, spatial mismatch between the two
    formulations) cancels in successive differences.
    """
    e1, e2, e3 = errors
    if (e1 - e2) * (e2 - e3) <= 0:
        return None
    return float(np.log((e1 - e2) / (e2 - e3)) / np.log(ratio))
