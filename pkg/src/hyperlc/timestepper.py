"""Exponential time integration of the diagonalized system.

The state is ``(v, Phi, mean_phi)``.  Its linear part is diagonal in
Fourier space: ``-L(xi)`` on v, ``i|xi|`` on Phi, and 0 on the mean angles.
The exponential schemes below apply that part exactly and treat the rest
explicitly, so only the advective terms limit the step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .multipliers import Coefficients, L_on_grid, apply_U, leray_coeffs
from .physics import (
    DEFAULT_MARGIN,
    DEFAULT_QUADRATURE_NODES,
    AngleState,
    ChartViolation,
    FlowState,
    NormalizedWave,
    angle_tendencies,
    angles_from_wave,
    director_from_angles,
    director_angle_jacobian,
    director_tendencies,
    wave_from_angles,
)
from .spectral import Grid3, SpectralField, VectorField3, dealias, fft3, hermitian_part, ifft3

log = logging.getLogger(__name__)

SCHEMES = ("ETD2", "ETD-midpoint")
PROFILES = ("random-band", "gaussian-bump")


class NumericalDivergence(RuntimeError):
    """A field became NaN or infinite."""


class RunFailure(RuntimeError):
    """Wraps a failure inside ``run`` together with the partial report."""

    def __init__(self, cause: Exception, report, state):
        super().__init__(str(cause))
        self.cause = cause
        self.report = report
        self.state = state


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class SchemeConfig:
    dt: float
    t_end: float
    scheme: str = "ETD2"
    cfl_safety: float = 1.0
    reprojection_period: int = 10
    nonlinear: bool = True
    quadrature_nodes: int = DEFAULT_QUADRATURE_NODES
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.reprojection_period < 1:
            raise ValueError("reprojection_period must be a positive integer")

    @classmethod
    def default_for(cls, grid: Grid3, t_end: float, **kw) -> "SchemeConfig":
        safety = kw.get("cfl_safety", 1.0)
        return cls(dt=0.5 * grid.spacing * safety, t_end=t_end, **kw)

    def check_cfl(self, grid: Grid3) -> None:
        if self.dt > self.cfl_safety * grid.spacing:
            raise ValueError(
                f"dt = {self.dt} exceeds cfl_safety * spacing = {self.cfl_safety * grid.spacing:.6g}"
            )


@dataclass(frozen=True)
class InitialDataSpec:
    epsilon0: float
    seed: int = 0
    band: tuple[float, float] = (1.0, 3.0)
    profile: str = "random-band"
    sobolev_order: float = 4.0

    def __post_init__(self):
        if self.epsilon0 < 0:
            raise ValueError("epsilon0 must be nonnegative")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        lo, hi = self.band
        if not 0 <= lo <= hi:
            raise ValueError(f"band must satisfy 0 <= kmin <= kmax, got {self.band}")


# -- state -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SimulationState:
    """Spectral state (v, Phi) plus the mean angles, at time t.

    ``Phi``'s xi = 0 coefficient is the mean angular velocity, so
    ``mean_dphi`` is read from it; ``mean_phi`` is carried separately.
    """

    t: float
    flow: FlowState
    wave: NormalizedWave
    mean_phi: tuple[float, float] = (0.0, 0.0)
    seed: int | None = None

    @property
    def grid(self) -> Grid3:
        return self.flow.grid

    @property
    def mean_dphi(self) -> tuple[float, float]:
        c = self.wave.coeffs[:, 0, 0, 0].real
        return (float(c[0]), float(c[1]))

    @property
    def velocity(self) -> VectorField3:
        return self.flow.u

    def angles(self, margin: float = DEFAULT_MARGIN) -> AngleState:
        phi, dphi = angles_from_wave(self.wave.coeffs, self.grid, self.mean_phi)
        return AngleState.from_coeffs(self.grid, phi, dphi, margin)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.flow.v.coeffs, self.wave.coeffs, np.asarray(self.mean_phi, dtype=float)

    @classmethod
    def from_arrays(cls, grid: Grid3, t: float, v: np.ndarray, Phi: np.ndarray, mean_phi,
                    seed: int | None = None) -> "SimulationState":
        for a in (v, Phi):
            a.setflags(write=False)
        return cls(t, FlowState(VectorField3(grid, v)), NormalizedWave.from_coeffs(grid, Phi),
                   (float(mean_phi[0]), float(mean_phi[1])), seed)

    @classmethod
    def from_fields(cls, u: VectorField3, a: AngleState, t: float = 0.0, seed: int | None = None):
        grid = u.grid
        v = apply_U(u.coeffs, grid)
        Phi = wave_from_angles(a.phi_coeffs, a.dphi_coeffs, grid)
        mean_phi = a.phi_coeffs[:, 0, 0, 0].real
        Phi = Phi.copy()
        return cls.from_arrays(grid, t, v, Phi, mean_phi, seed)

    @classmethod
    def equilibrium(cls, grid: Grid3, t: float = 0.0) -> "SimulationState":
        return cls.from_arrays(grid, t, grid.zeros(3), grid.zeros(2), (0.0, 0.0))


# -- initial data ------------------------------------------------------------


def _band_mask(grid: Grid3, band) -> np.ndarray:
    lo, hi = band
    mask = (grid.kmag >= lo) & (grid.kmag <= hi) & (grid.kmag > 0) & grid.dealias_mask
    if not mask.any():
        raise ValueError(f"band {tuple(band)} contains no resolved nonzero modes on this grid")
    return mask


def _unit(c: np.ndarray, grid: Grid3, order: float, weight: np.ndarray | None = None) -> np.ndarray:
    w = (1.0 + grid.ksq) ** order
    if weight is not None:
        w = w * weight
    norm = math.sqrt(grid.volume * float(np.sum(w * np.abs(c) ** 2)))
    return c / norm if norm > 0 else c


def generate_initial_data(spec: InitialDataSpec, grid: Grid3) -> SimulationState:
    """Band-limited small data with equal shares of epsilon0 in each norm.

    ||u0||_{H^N}, ||grad phi_j0||_{H^N} and ||phi_j1||_{H^N} (j = 1, 2) are
    each rescaled to epsilon0 / 5, so their sum is exactly epsilon0.
    """
    mask = _band_mask(grid, spec.band)
    rng = np.random.default_rng(spec.seed)
    N = spec.sobolev_order
    if spec.profile == "random-band":
        raw = [fft3(rng.standard_normal(grid.shape)) for _ in range(7)]
        u = np.stack(raw[:3])
        scalars = raw[3:]
    else:
        lo, hi = spec.band
        width = 2.0 / max(lo + hi, 1e-12)
        bump = np.exp(-grid.radius**2 / (2 * width**2))
        bump_hat = fft3(bump)
        axis = rng.standard_normal(3)
        pot = np.stack([a * bump_hat for a in axis])
        # curl of a bump-weighted constant vector is divergence-free
        k1, k2, k3 = grid.k
        u = 1j * np.stack([k2 * pot[2] - k3 * pot[1], k3 * pot[0] - k1 * pot[2], k1 * pot[1] - k2 * pot[0]])
        signs = rng.choice([-1.0, 1.0], size=4) * rng.uniform(0.5, 1.0, size=4)
        scalars = [s * bump_hat for s in signs]
    u = leray_coeffs(np.where(mask, u, 0.0), grid)
    u = hermitian_part(u)
    scalars = [hermitian_part(np.where(mask, s, 0.0)) for s in scalars]
    share = spec.epsilon0 / 5.0
    u = share * _unit(u, grid, N)
    phi0 = [share * _unit(s, grid, N, grid.ksq) for s in scalars[:2]]
    phi1 = [share * _unit(s, grid, N) for s in scalars[2:]]
    a = AngleState.from_coeffs(grid, np.stack(phi0), np.stack(phi1))
    return SimulationState.from_fields(VectorField3(grid, u), a, 0.0, spec.seed)


def initial_data_norms(state: SimulationState, order: float) -> dict[str, float]:
    from .spectral import sobolev_norm

    grid = state.grid
    a = state.angles()
    out = {"u": sobolev_norm(state.velocity, order)}
    for j, (p, q) in enumerate(zip((a.phi1, a.phi2), (a.dphi1, a.dphi2)), start=1):
        grad = VectorField3(grid, np.stack([p.coeffs * 1j * k for k in grid.k]))
        out[f"grad_phi{j}0"] = sobolev_norm(grad, order)
        out[f"phi{j}1"] = sobolev_norm(q, order)
    return out


# -- exponential integrator --------------------------------------------------


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """exp(z), (e^z - 1)/z and (e^z - 1 - z)/z^2, by Taylor series for |z| < 1e-2."""
    z = np.asarray(z, dtype=complex)
    E = np.exp(z)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 0.0, z)
    safe = np.where(small, 1.0, zs)
    with np.errstate(over="ignore", invalid="ignore"):
        p1 = (E - 1.0) / safe
        p2 = (E - 1.0 - zs) / safe**2
    t1 = np.zeros_like(z)
    t2 = np.zeros_like(z)
    term = np.ones_like(z)
    for m in range(12):
        # term = z^m / m!
        t1 = t1 + term / (m + 1)
        t2 = t2 + term / ((m + 1) * (m + 2))
        term = term * z / (m + 1)
    p1 = np.where(small, t1, p1)
    p2 = np.where(small, t2, p2)
    return E, p1, p2


class ExponentialStepper:
    """Single-step exponential Runge-Kutta schemes of order 2 for the (v, Phi, mean_phi) state."""

    def __init__(self, c: Coefficients, grid: Grid3, cfg: SchemeConfig):
        self.c = c
        self.grid = grid
        self.cfg = cfg
        h = cfg.dt
        self.lin = (-L_on_grid(c, grid), np.broadcast_to(1j * grid.kmag, (2,) + grid.shape))
        self.full = [phi_functions(h * L) for L in self.lin]
        self.half = [phi_functions(0.5 * h * L) for L in self.lin] if cfg.scheme == "ETD-midpoint" else None
        self.steps = 0

    def nonlinear(self, v, Phi, mean_phi):
        """Explicit parts: (N_v, N_Phi, d mean_phi / dt)."""
        dmean = Phi[:, 0, 0, 0].real.copy()
        if not self.cfg.nonlinear:
            return np.zeros_like(v), np.zeros_like(Phi), dmean
        phi, dphi = angles_from_wave(Phi, self.grid, mean_phi)
        nv, _, src, _ = angle_tendencies(self.c, self.grid, v, phi, dphi, self.cfg.margin, self.cfg.quadrature_nodes)
        return nv, src, dmean

    def advance(self, v, Phi, mean_phi):
        h = self.cfg.dt
        y = (v, Phi)
        N0 = self.nonlinear(v, Phi, mean_phi)
        if self.cfg.scheme == "ETD2":
            a = [E * yi + h * p1 * Ni for (E, p1, _), yi, Ni in zip(self.full, y, N0[:2])]
            a_mean = mean_phi + h * N0[2]
            Na = self.nonlinear(a[0], a[1], a_mean)
            new = [ai + h * p2 * (Nai - N0i) for (_, _, p2), ai, Nai, N0i in zip(self.full, a, Na[:2], N0[:2])]
            new_mean = mean_phi + 0.5 * h * (N0[2] + Na[2])
        else:
            a = [E * yi + 0.5 * h * p1 * Ni for (E, p1, _), yi, Ni in zip(self.half, y, N0[:2])]
            a_mean = mean_phi + 0.5 * h * N0[2]
            Na = self.nonlinear(a[0], a[1], a_mean)
            new = [E * yi + h * ((p1 - 2 * p2) * N0i + 2 * p2 * Nai)
                   for (E, p1, p2), yi, N0i, Nai in zip(self.full, y, N0[:2], Na[:2])]
            new_mean = mean_phi + h * Na[2]
        return new[0], new[1], new_mean


def reproject(v: np.ndarray, Phi: np.ndarray, grid: Grid3) -> tuple[np.ndarray, np.ndarray]:
    """Restore div u = 0, zero mean velocity, real fields and the dealias cube."""
    u = hermitian_part(leray_coeffs(apply_U(v, grid), grid))
    u[:, 0, 0, 0] = 0.0
    v = dealias(apply_U(u, grid), grid)
    phi, dphi = angles_from_wave(Phi, grid)
    mean_dphi = Phi[:, 0, 0, 0].real
    phi, dphi = hermitian_part(phi), hermitian_part(dphi)
    Phi = dealias(wave_from_angles(phi, dphi, grid), grid)
    Phi[:, 0, 0, 0] = mean_dphi
    return v, Phi


def _check_finite(arrays, t: float, steps: int):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalDivergence(f"non-finite field after step {steps} (t = {t:.6g})")


def step(state: SimulationState, cfg: SchemeConfig, c: Coefficients,
         stepper: ExponentialStepper | None = None) -> SimulationState:
    """Advance one step of size cfg.dt."""
    grid = state.grid
    if stepper is None:
        stepper = ExponentialStepper(c, grid, cfg)
    v, Phi, mean_phi = state.arrays()
    v, Phi, mean_phi = stepper.advance(v, Phi, mean_phi)
    stepper.steps += 1
    t = state.t + cfg.dt
    _check_finite((v, Phi, mean_phi), t, stepper.steps)
    v[:, 0, 0, 0] = 0.0
    if stepper.steps % cfg.reprojection_period == 0:
        v, Phi = reproject(v, Phi, grid)
    return SimulationState.from_arrays(grid, t, v, Phi, mean_phi, state.seed)


def n_steps(cfg: SchemeConfig, t0: float = 0.0) -> int:
    return int(round((cfg.t_end - t0) / cfg.dt))


def run(state0: SimulationState, cfg: SchemeConfig, c: Coefficients, observers=(), tracker=None,
        cadence: int = 1):
    """Step from state0.t to cfg.t_end.

    ``tracker`` (a diagnostics.EnergyTracker, created if None) is updated
    every step; ``observers`` are called with the read-only state every
    ``cadence`` steps.  Returns ``(final_state, report)``; on failure raises
    RunFailure carrying the partial report.
    """
    from .diagnostics import EnergyTracker

    if cfg.t_end < state0.t:
        raise ValueError("t_end precedes the initial time")
    grid = state0.grid
    if tracker is None:
        tracker = EnergyTracker(c, grid, cadence=cadence)
    stepper = ExponentialStepper(c, grid, cfg)
    steps = n_steps(cfg, state0.t)
    state = state0
    if steps == 0:
        return state, tracker.report
    tracker.start(state)
    for obs in observers:
        obs(state)
    try:
        _check_finite(state.arrays(), state.t, 0)
        for i in range(1, steps + 1):
            state = step(state, cfg, c, stepper)
            tracker.update(state, i)
            if i % cadence == 0:
                for obs in observers:
                    obs(state)
    except (NumericalDivergence, ChartViolation) as exc:
        log.error("run stopped at t=%.6g: %s", state.t, exc)
        raise RunFailure(exc, tracker.report, state) from exc
    return state, tracker.report


# -- director-form reference integrator -------------------------------------


@dataclass(frozen=True, eq=False)
class DirectorTrajectoryState:
    t: float
    u: np.ndarray
    d: np.ndarray
    dtd: np.ndarray


def director_state_from(state: SimulationState) -> DirectorTrajectoryState:
    grid = state.grid
    a = state.angles()
    p1, p2 = a.phi1.real_physical(), a.phi2.real_physical()
    q1, q2 = a.dphi1.real_physical(), a.dphi2.real_physical()
    j1, j2 = director_angle_jacobian(p1, p2)
    d = fft3(director_from_angles(p1, p2))
    dtd = fft3(j1 * q1 + j2 * q2)
    return DirectorTrajectoryState(state.t, state.velocity.coeffs.copy(), d, dtd)


class DirectorStepper:
    """Integrating-factor RK4 for (u, d, dt d).

    The isotropic viscosity nu4/2 Laplacian and the flat wave operator are
    propagated exactly; the anisotropic stress, the elastic forcing and all
    nonlinear terms are explicit.
    """

    def __init__(self, c: Coefficients, grid: Grid3):
        self.c = c
        self.grid = grid

    def propagate(self, y, tau: float):
        u, d, q = y
        grid = self.grid
        k = grid.kmag
        visc = np.exp(-0.5 * self.c.nu4 * grid.ksq * tau)
        ck, sk = np.cos(k * tau), np.sin(k * tau)
        safe = np.where(k > 0, k, 1.0)
        sinc = np.where(k > 0, sk / safe, tau)
        return (visc * u, ck * d + sinc * q, -k * sk * d + ck * q)

    def explicit(self, y):
        u, d, q = y
        du, dq = director_tendencies(self.c, u, d, q, self.grid)
        du = du + 0.5 * self.c.nu4 * self.grid.ksq * u  # remove the exactly-propagated part
        dq = dq + self.grid.ksq * d
        return (du, np.zeros_like(d), dq)

    def advance(self, y, h: float):
        P = self.propagate
        add = lambda a, b, s: tuple(ai + s * bi for ai, bi in zip(a, b))
        k1 = self.explicit(y)
        y2 = P(add(y, k1, h / 2), h / 2)
        k2 = self.explicit(y2)
        y3 = add(P(y, h / 2), k2, h / 2)
        k3 = self.explicit(y3)
        y4 = add(P(y, h), P(k3, h / 2), h)
        k4 = self.explicit(y4)
        Py, Pk1 = P(y, h), P(k1, h)
        Pk2, Pk3 = P(k2, h / 2), P(k3, h / 2)
        return tuple(a + h / 6 * (b + 2 * c2 + 2 * c3 + e) for a, b, c2, c3, e in zip(Py, Pk1, Pk2, Pk3, k4))


def run_director(s0: DirectorTrajectoryState, c: Coefficients, grid: Grid3, dt: float, t_end: float):
    stepper = DirectorStepper(c, grid)
    steps = int(round((t_end - s0.t) / dt))
    y = (s0.u, s0.d, s0.dtd)
    for i in range(steps):
        y = stepper.advance(y, dt)
        if not all(np.all(np.isfinite(a)) for a in y):
            raise NumericalDivergence(f"director integration diverged at step {i + 1}")
    return DirectorTrajectoryState(s0.t + steps * dt, *y)
