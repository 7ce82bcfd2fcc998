"""Energy functionals, decay fits, profiles and constraint residuals.

All norms are box integrals computed by Parseval with the conventions of
:mod:`hyperlc.spectral`.  The high-order part of each functional sums over
every multi-index ``n`` with ``|n| = N``, which in Fourier space is the
complete homogeneous polynomial ``h_N(xi_1^2, xi_2^2, xi_3^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .littlewood_paley import lp_project_gt, mollifier, resolved_shells, shell_symbol
from .multipliers import Coefficients, L_on_grid, apply_U, halfwave_apply, semigroup_apply
from .physics import (
    AngleKinematics,
    angle_acceleration,
    angles_to_director,
    director_from_angles,
    rhs_angle_system,
)
from .spectral import (
    Grid3,
    SpectralField,
    VectorField3,
    derivative_symbol,
    fft3,
    ifft3,
    l2_norm,
    sobolev_norm,
)

DEFAULT_DIAG_ORDER = 4


# -- multi-index weights -----------------------------------------------------


@lru_cache(maxsize=32)
def multi_index_weight(grid: Grid3, order: int) -> np.ndarray:
    """Sum over |n| in {0, order} of prod xi_i^(2 n_i)."""
    if order < 0 or int(order) != order:
        raise ValueError(f"diagnostic order must be a nonnegative integer, got {order}")
    if order > 3 * grid.cutoff_mode:
        raise ValueError(f"diagnostic order {order} exceeds what a {grid.n}^3 grid resolves")
    a = [np.broadcast_to(k**2, grid.shape) for k in grid.k]
    # h_m(a1, a2, a3) by the recurrence h_m = sum over the last variable's power
    h12 = [np.ones(grid.shape)]
    for m in range(1, order + 1):
        h12.append(h12[-1] * a[1] + a[0] ** m)
    h = np.zeros(grid.shape)
    for m in range(order + 1):
        h = h + h12[m] * a[2] ** (order - m)
    if order == 0:
        return np.ones(grid.shape)
    return 1.0 + h


def _weighted_sq(c: np.ndarray, w: np.ndarray, grid: Grid3) -> float:
    return float(grid.volume * np.sum(w * np.abs(c) ** 2))


# -- energy functional E0 ----------------------------------------------------


def dissipation_rate(c: Coefficients, v: np.ndarray, grid: Grid3, order: int = DEFAULT_DIAG_ORDER) -> float:
    """Sum over |n| in {0, order} of ||d^n L^(1/2) v||^2."""
    return _weighted_sq(v, multi_index_weight(grid, order)[None] * L_on_grid(c, grid), grid)


def energy_parts(state, order: int = DEFAULT_DIAG_ORDER) -> tuple[float, float]:
    """(velocity part, wave part) of the instantaneous functional."""
    grid = state.grid
    w = multi_index_weight(grid, order)[None]
    return 0.5 * _weighted_sq(state.flow.v.coeffs, w, grid), 0.5 * _weighted_sq(state.wave.coeffs, w, grid)


def energy_E0(state, diag_order: int = DEFAULT_DIAG_ORDER, dissipation_integral: float = 0.0) -> float:
    """E0 = velocity part + accumulated dissipation + wave part.

    The time integral cannot be recovered from a single state, so the
    accumulated value (e.g. from :class:`EnergyTracker`) is passed in.
    """
    kv, kw = energy_parts(state, diag_order)
    return kv + dissipation_integral + kw


# -- report and tracker ------------------------------------------------------


@dataclass
class EnergyReport:
    diag_order: int = DEFAULT_DIAG_ORDER
    shells: list[int] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    E0: list[float] = field(default_factory=list)
    kinetic: list[float] = field(default_factory=list)
    dissipation_integral: list[float] = field(default_factory=list)
    wave_energy: list[float] = field(default_factory=list)
    sup_Phi: list[float] = field(default_factory=list)
    shell_sup_u: list[list[float]] = field(default_factory=list)
    shell_sup_Phi: list[list[float]] = field(default_factory=list)
    div_u: list[float] = field(default_factory=list)
    unit_d: list[float] = field(default_factory=list)
    mean_u: list[float] = field(default_factory=list)

    SCALAR_COLUMNS = ("time", "E0", "kinetic", "dissipation_integral", "wave_energy", "sup_Phi",
                      "div_u", "unit_d", "mean_u")

    def __len__(self) -> int:
        return len(self.times)

    def columns(self) -> list[str]:
        cols = list(self.SCALAR_COLUMNS)
        cols += [f"sup_u_shell_{k}" for k in self.shells]
        cols += [f"sup_Phi_shell_{k}" for k in self.shells]
        return cols

    def rows(self):
        for i, t in enumerate(self.times):
            yield [t, self.E0[i], self.kinetic[i], self.dissipation_integral[i], self.wave_energy[i],
                   self.sup_Phi[i], self.div_u[i], self.unit_d[i], self.mean_u[i],
                   *self.shell_sup_u[i], *self.shell_sup_Phi[i]]

    def summary(self) -> dict:
        if not self.times:
            return {"samples": 0, "diag_order": self.diag_order}
        e0 = np.asarray(self.E0)
        return {
            "samples": len(self.times),
            "diag_order": self.diag_order,
            "shell_range": [self.shells[0], self.shells[-1]] if self.shells else [],
            "t_final": self.times[-1],
            "E0_initial": self.E0[0],
            "E0_max_ratio": float(np.max(e0) / e0[0]) if e0[0] > 0 else 0.0,
            "dissipation_integral": self.dissipation_integral[-1],
            "max_div_u": max(self.div_u),
            "max_unit_d": max(self.unit_d),
            "max_mean_u": max(self.mean_u),
        }


def dissipation_increments(times, integral, t_from: float = 10.0, unit: float = 1.0) -> np.ndarray:
    """Growth of the dissipation integral over consecutive unit intervals starting at ``t_from``."""
    times = np.asarray(times, float)
    marks = np.arange(t_from, times[-1] + 1e-9 * unit, unit)
    if len(marks) < 2:
        return np.zeros(0)
    return np.diff(np.interp(marks, times, np.asarray(integral, float)))


def late_envelope(times, values, t_from: float = 10.0) -> np.ndarray:
    """Successive local maxima of a sampled series over ``t >= t_from``.

    Oscillating wave quantities have no monotone pointwise trend; their
    envelope (the sequence of peaks) is what decays.
    """
    times, values = np.asarray(times, float), np.asarray(values, float)
    y = values[times >= t_from]
    peaks = [y[i] for i in range(1, len(y) - 1) if y[i] >= y[i - 1] and y[i] >= y[i + 1]]
    return np.asarray(peaks)


def stability_checks(report: "EnergyReport", t_from: float = 10.0, growth: float = 1.2) -> dict:
    """Long-run small-data verdicts: bounded E0, converging dissipation, decaying wave envelope."""
    e0 = np.asarray(report.E0)
    ratio = float(np.max(e0) / e0[0]) if e0[0] > 0 else 0.0
    inc = dissipation_increments(report.times, report.dissipation_integral, t_from)
    peaks = late_envelope(report.times, report.sup_Phi, t_from)
    return {
        "E0_bounded": {"value": ratio, "limit": growth, "pass": ratio <= growth},
        "dissipation_increments_decreasing": {"value": len(inc), "limit": f"t>={t_from:g}",
                                              "pass": len(inc) >= 2 and bool(np.all(np.diff(inc) < 0))},
        "sup_Phi_envelope_nonincreasing": {"value": len(peaks), "limit": f"t>={t_from:g}",
                                           "pass": len(peaks) >= 2 and bool(np.all(np.diff(peaks) <= 0))},
    }


class EnergyTracker:
    """Accumulates the dissipation integral every step and samples the report at a cadence."""

    def __init__(self, c: Coefficients, grid: Grid3, diag_order: int = DEFAULT_DIAG_ORDER, cadence: int = 1,
                 shells: bool = True):
        self.c = c
        self.grid = grid
        self.diag_order = diag_order
        self.cadence = max(1, int(cadence))
        self.shell_range = list(resolved_shells(grid)) if shells else []
        self.report = EnergyReport(diag_order=diag_order, shells=self.shell_range)
        self.integral = 0.0
        self._last = None

    def _rate(self, state) -> float:
        return dissipation_rate(self.c, state.flow.v.coeffs, self.grid, self.diag_order)

    def start(self, state) -> None:
        self.integral = 0.0
        self._last = (state.t, self._rate(state))
        self.sample(state)

    def update(self, state, step_index: int) -> None:
        rate = self._rate(state)
        t0, r0 = self._last
        self.integral += 0.5 * (state.t - t0) * (r0 + rate)
        self._last = (state.t, rate)
        if step_index % self.cadence == 0:
            self.sample(state)

    def sample(self, state) -> None:
        r = self.report
        kv, kw = energy_parts(state, self.diag_order)
        r.times.append(state.t)
        r.kinetic.append(kv)
        r.wave_energy.append(kw)
        r.dissipation_integral.append(self.integral)
        r.E0.append(kv + self.integral + kw)
        r.sup_Phi.append(float(np.max(np.abs(ifft3(state.wave.coeffs)))))
        u_hat = state.velocity.coeffs
        Phi = state.wave.coeffs
        r.shell_sup_u.append([_shell_sup(u_hat, self.grid, k) for k in self.shell_range])
        r.shell_sup_Phi.append([_shell_sup(Phi, self.grid, k) for k in self.shell_range])
        div_u, unit_d, mean_u = constraint_residuals(state)
        r.div_u.append(div_u)
        r.unit_d.append(unit_d)
        r.mean_u.append(mean_u)


def _shell_sup(c: np.ndarray, grid: Grid3, k: int) -> float:
    """Max over points of the Euclidean norm of P_k applied to each component."""
    vals = ifft3(shell_symbol(grid.kmag, k) * c)
    return float(np.sqrt(np.max(np.sum(np.abs(vals) ** 2, axis=0))))


def shell_sup_norms(f, shells=None) -> dict[int, float]:
    grid = f.grid
    c = f.coeffs if f.coeffs.ndim == 4 else f.coeffs[None]
    shells = resolved_shells(grid) if shells is None else shells
    return {k: _shell_sup(c, grid, k) for k in shells}


# -- constraints -------------------------------------------------------------


def constraint_residuals(state) -> tuple[float, float, float]:
    """(sup |div u|, max ||d| - 1|, |mean u|)."""
    grid = state.grid
    u = state.velocity.coeffs
    div = sum(derivative_symbol(grid, a + 1) * u[a] for a in range(3))
    div_u = float(np.max(np.abs(ifft3(div))))
    a = state.angles()
    d = director_from_angles(a.phi1.real_physical(), a.phi2.real_physical())
    unit = float(np.max(np.abs(np.sqrt(np.sum(d * d, axis=0)) - 1.0)))
    mean_u = float(np.linalg.norm(u[:, 0, 0, 0]))
    return div_u, unit, mean_u


# -- windowed vector fields and E^a ------------------------------------------


def window(grid: Grid3, inner: float = 0.5, outer: float = 0.1) -> np.ndarray:
    """Smooth product window: 1 on the inner ``inner`` fraction of each axis, 0 on the outer ``outer``."""
    from .littlewood_paley import _smooth_step

    half = grid.side / 2
    a, b = inner * half, (1.0 - outer) * half
    w1 = [1.0 - _smooth_step((np.abs(x) - a) / (b - a)) for x in grid.x]
    return w1[0] * w1[1] * w1[2]


_A = np.array([
    [[0, 0, 0], [0, 0, 1], [0, -1, 0]],
    [[0, 0, -1], [0, 0, 0], [1, 0, 0]],
    [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],
], dtype=float)

VECTOR_FIELDS = ("dt", "d1", "d2", "d3", "O1", "O2", "O3")


def rotation_matrix_term(i: int) -> np.ndarray:
    """The constant matrix added to the rotation field on vectors about axis i (1-based)."""
    return _A[i - 1]


def _rotation(c: np.ndarray, grid: Grid3, i: int, W: np.ndarray) -> np.ndarray:
    """(x ^ grad)_i applied to scalar coefficients (any leading axes), x windowed."""
    j, k = (i + 1) % 3, (i + 2) % 3
    xj, xk = grid.x[j] * W, grid.x[k] * W
    dk = ifft3(c * derivative_symbol(grid, k + 1))
    dj = ifft3(c * derivative_symbol(grid, j + 1))
    return fft3(xj * dk - xk * dj)


def _check_word(word) -> tuple[str, ...]:
    word = tuple(word)
    if len(word) > 2:
        raise ValueError(f"vector-field words are limited to length 2, got {word}")
    for z in word:
        if z not in VECTOR_FIELDS:
            raise ValueError(f"unsupported vector field {z!r}; allowed: {VECTOR_FIELDS} (the scaling field is excluded)")
    if word.count("dt") > 1:
        raise ValueError("at most one time derivative per word")
    return word


def _apply_spatial(z: str, u: np.ndarray, phis: list[np.ndarray], grid: Grid3, W: np.ndarray):
    if z.startswith("d"):
        s = derivative_symbol(grid, int(z[1]))
        return u * s, [p * s for p in phis]
    i = int(z[1])
    ru = _rotation(u, grid, i - 1, W) + np.einsum("ab,b...->a...", _A[i - 1], u)
    return ru, [_rotation(p, grid, i - 1, W) for p in phis]


def apply_word(word, c: Coefficients, state, W: np.ndarray | None = None):
    """Return coefficients (u^(a), phi^(a), dt phi^(a)) for the word ``a``.

    The time derivative is taken from the right-hand side; spatial fields
    are applied right to left (they commute with dt).
    """
    word = _check_word(word)
    grid = state.grid
    if W is None:
        W = window(grid)
    a = state.angles()
    u = state.velocity.coeffs
    phi, dphi = a.phi_coeffs, a.dphi_coeffs
    if "dt" in word:
        tend = rhs_angle_system(c, a, state.flow)
        u, phi, dphi = tend.du.coeffs, dphi, angle_acceleration(a, tend)
    for z in reversed([z for z in word if z != "dt"]):
        u, (phi, dphi) = _apply_spatial(z, u, [phi, dphi], grid, W)
    return u, phi, dphi


@dataclass(frozen=True)
class EaValue:
    velocity: float
    wave: float
    dissipation_rate: float


def energy_Ea(state, word, c: Coefficients, diag_order: int = DEFAULT_DIAG_ORDER,
              dissipation_integral: float = 0.0) -> EaValue:
    """(E^a_v, E^a_phi) for the word ``a``; the dissipation integral is supplied by the caller.

    E^a_v = sum_{|n| in {0,N}} 1/2 ||d^n U u^(a)||^2 + integral;
    E^a_phi = sum_{|n| in {0,N}} 1/2 (||d^n dt phi^(a)||^2 + ||d^n grad phi^(a)||^2).
    The instantaneous dissipation rate is returned for accumulation.
    """
    grid = state.grid
    u, phi, dphi = apply_word(word, c, state)
    v = apply_U(u, grid)
    w = multi_index_weight(grid, diag_order)[None]
    Ev = 0.5 * _weighted_sq(v, w, grid) + dissipation_integral
    Ephi = 0.5 * (_weighted_sq(dphi, w, grid) + _weighted_sq(phi, w * grid.ksq, grid))
    rate = _weighted_sq(v, w * L_on_grid(c, grid), grid)
    return EaValue(Ev, Ephi, rate)


# -- profiles ----------------------------------------------------------------


def build_profile(state):
    """Psi = exp(-i t |grad|) Phi."""
    from .physics import NormalizedWave

    w = state.wave
    return NormalizedWave(halfwave_apply(-state.t, w.Phi1), halfwave_apply(-state.t, w.Phi2))


def _profile_coeffs(psi) -> np.ndarray:
    if hasattr(psi, "Phi1"):
        return psi.coeffs
    c = psi.coeffs
    return c if c.ndim == 4 else c[None]


def frequency_gradient(psi, W: np.ndarray | None = None) -> np.ndarray:
    """grad_xi Psi-hat, evaluated as the transform of -i x W psi; shape (3, m, n, n, n)."""
    c = _profile_coeffs(psi)
    grid = psi.grid
    if W is None:
        W = window(grid)
    f = ifft3(c)
    return np.stack([fft3(-1j * grid.x[j] * W * f) for j in range(3)])


def weighted_profile_norm(psi, sobolev_order: float = 0.0, W: np.ndarray | None = None) -> float:
    """H^s norm of F^-1(|xi| grad_xi Psi-hat), summed over components."""
    grid = psi.grid
    g = frequency_gradient(psi, W) * grid.kmag
    return _hs(g, grid, sobolev_order)


def radial_branch_norm(psi, sobolev_order: float = 0.0, W: np.ndarray | None = None) -> float:
    """H^s norm of F^-1((xi/|xi|)(xi . grad_xi Psi-hat)), the radial part of the identity."""
    grid = psi.grid
    g = frequency_gradient(psi, W)
    radial = sum(grid.k[j] * g[j] for j in range(3))
    safe = np.where(grid.kmag > 0, grid.kmag, 1.0)
    vec = np.stack([grid.k[j] / safe * radial for j in range(3)])
    return _hs(vec, grid, sobolev_order)


def angular_branch_norm(psi, sobolev_order: float = 0.0, W: np.ndarray | None = None) -> float:
    """H^s norm of F^-1(Omega(xi) Psi-hat) with Omega(xi) = xi ^ grad_xi."""
    grid = psi.grid
    g = frequency_gradient(psi, W)
    k = grid.k
    om = np.stack([k[(i + 1) % 3] * g[(i + 2) % 3] - k[(i + 2) % 3] * g[(i + 1) % 3] for i in range(3)])
    return _hs(om, grid, sobolev_order)


def profile_triangle_bound(psi, W: np.ndarray | None = None) -> float:
    """||x.grad psi|| + ||Omega psi|| + 3||psi|| at order 0, x windowed."""
    grid = psi.grid
    c = _profile_coeffs(psi)
    if W is None:
        W = window(grid)
    grads = [ifft3(c * derivative_symbol(grid, j + 1)) for j in range(3)]
    xgrad = sum(grid.x[j] * W * grads[j] for j in range(3))
    rot = np.stack([
        grid.x[(i + 1) % 3] * W * grads[(i + 2) % 3] - grid.x[(i + 2) % 3] * W * grads[(i + 1) % 3]
        for i in range(3)
    ])
    V = grid.volume / grid.n**3
    nrm = lambda f: math.sqrt(V * float(np.sum(np.abs(f) ** 2)))
    return nrm(xgrad) + nrm(rot) + 3 * nrm(ifft3(c))


def _hs(c: np.ndarray, grid: Grid3, order: float) -> float:
    w = (1.0 + grid.ksq) ** order
    return math.sqrt(grid.volume * float(np.sum(w * np.abs(c) ** 2)))


def profile_drift(psi_t, psi_0) -> float:
    """||Psi(t) - Psi(0)||_2 (both components)."""
    return _hs(_profile_coeffs(psi_t) - _profile_coeffs(psi_0), psi_t.grid, 0.0)


# -- decay fits --------------------------------------------------------------


REFERENCES = {
    "heat": (-1.5, "heat semigroup, L1 to Linf: t^(-3/2)"),
    "dispersive": (-1.0, "half-wave dispersive estimate, leading term t^(-1)"),
    "wave-profile": (-1.0, "Phi sup-norm decay t^(-1+delta), delta dropped"),
    "velocity-vf": (-0.75, "vector-field velocity decay t^(-3/4+delta), delta dropped"),
    "velocity-d2": (-1.25, "second-derivative velocity decay t^(-5/4+delta), delta dropped"),
}


@dataclass(frozen=True)
class DecayFit:
    quantity: str
    window: tuple[float, float]
    slope: float
    stderr: float
    reference: float
    source: str
    tolerance: float
    samples: int

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.reference) <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity, "t1": self.window[0], "t2": self.window[1], "slope": self.slope,
            "stderr": self.stderr, "reference": self.reference, "source": self.source,
            "tolerance": self.tolerance, "samples": self.samples, "verdict": "pass" if self.passed else "fail",
        }


def decay_fit(times, values, reference: float, source: str = "", quantity: str = "",
              window: tuple[float, float] | None = None, tolerance: float | None = None) -> DecayFit:
    """Least-squares slope of log(value) against log(t) on the window."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape:
        raise ValueError("times and values differ in length")
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, y = t[keep], y[keep]
    if t.size < 8:
        raise ValueError(f"decay fit needs at least 8 samples in the window, got {t.size}")
    if np.any(t <= 0):
        raise ValueError("decay fit window must lie in t > 0")
    if np.any(~(y > 0)):
        raise ValueError("nonpositive values in the fit window")
    res = stats.linregress(np.log(t), np.log(y))
    tol = 0.1 * abs(reference) if tolerance is None else tolerance
    return DecayFit(quantity, (float(t[0]), float(t[-1])), float(res.slope), float(res.stderr),
                    reference, source, tol, int(t.size))


# -- decay scenarios ---------------------------------------------------------


def gaussian_bump(grid: Grid3, width: float) -> np.ndarray:
    return np.exp(-grid.radius**2 / (2 * width**2))


def heat_decay_series(c: Coefficients, grid: Grid3, times, width: float = 0.5) -> np.ndarray:
    """sup |exp(-tL) f| for a Gaussian bump placed in every v component."""
    f = fft3(gaussian_bump(grid, width).astype(complex))
    fv = VectorField3(grid, np.stack([f, f, f]))
    out = []
    for t in times:
        g = semigroup_apply(c, float(t), fv).physical()
        out.append(float(np.sqrt(np.max(np.sum(np.abs(g) ** 2, axis=0)))))
    return np.asarray(out)


def heat_shell_bound(c: Coefficients, grid: Grid3, k: int, t: float, width: float = 0.5) -> tuple[float, float]:
    """(||exp(-tL) P_{>k} f||, exp(-c 4^k t) ||f||) for the bump data."""
    f = fft3(gaussian_bump(grid, width).astype(complex))
    fv = VectorField3(grid, np.stack([lp_project_gt(SpectralField(grid, f), k).coeffs] * 3))
    lhs = l2_norm(semigroup_apply(c, t, fv))
    rhs = math.exp(-c.decay_constant() * 4.0**k * t) * l2_norm(VectorField3(grid, np.stack([f, f, f])))
    return lhs, rhs


def shell_data(grid: Grid3, k: int = 0) -> SpectralField:
    """P_k applied to the unit-mass delta at the origin."""
    delta = np.full(grid.shape, 1.0 / grid.volume, dtype=complex)
    return SpectralField(grid, shell_symbol(grid.kmag, k) * delta)


def dispersive_decay_series(grid: Grid3, times, k: int = 0) -> np.ndarray:
    """sup |exp(i t |grad|) P_k delta|."""
    f = shell_data(grid, k)
    return np.asarray([float(np.max(np.abs(halfwave_apply(float(t), f).physical()))) for t in times])


def wrap_time(grid: Grid3) -> float:
    """First time a unit-speed front from the origin reaches the box boundary."""
    return grid.side / 2
