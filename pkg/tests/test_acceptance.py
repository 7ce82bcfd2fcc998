"""Acceptance suite: the nine end-to-end criteria at their stated tolerances.

Each test prints one ``criterion N ... PASS|FAIL`` line (repeated in the
terminal summary) and then asserts.  Runtime budgets are part of the
criteria and are checked on the wall clock of the machine running the suite.

    pytest tests/test_acceptance.py -v
"""

import time
from pathlib import Path

import numpy as np
import pytest

from hyperlc.cli import cross_check_order, decay_scenarios
from hyperlc.config import load_config
from hyperlc.diagnostics import EnergyTracker, build_profile, profile_drift, stability_checks
from hyperlc.littlewood_paley import bernstein_ratio, lp_decompose, lp_project, q_indices, q_project, resolved_shells
from hyperlc.multipliers import Coefficients, semigroup_apply
from hyperlc.spectral import Grid3, SpectralField, dealias, fft3, l2_norm
from hyperlc.timestepper import SCHEMES, InitialDataSpec, SchemeConfig, SimulationState, generate_initial_data, run
from hyperlc.verification import cross_check, positivity_checks, symbol_identity_checks

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
C = Coefficients(0.7, 1.0, 0.4)
RESULTS: list[str] = []
pytestmark = pytest.mark.slow


def report(number: int, title: str, checks: dict, elapsed: float, budget: float) -> bool:
    """Print and record one verdict line; ``checks`` maps a label to (value text, passed)."""
    checks = {**checks, "runtime": (f"{elapsed:.1f}s/<{budget:g}s", elapsed < budget)}
    ok = all(p for _, p in checks.values())
    detail = "; ".join(f"{k} {v}{'' if p else ' (fail)'}" for k, (v, p) in checks.items())
    line = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} [{detail}]"
    RESULTS.append(line)
    print(line)
    return ok


def sampled_problem(seed=0):
    rng = np.random.default_rng(seed)
    coeffs = [Coefficients.random(rng) for _ in range(100)]
    return coeffs, rng.standard_normal((10_000, 3)), rng


@pytest.fixture(scope="module")
def decay_results():
    t0 = time.perf_counter()
    fits, _, bounds = decay_scenarios(load_config(CONFIGS / "decay.toml"))
    return fits, bounds, time.perf_counter() - t0


def test_criterion_1_operator_identities():
    t0 = time.perf_counter()
    coeffs, xi, rng = sampled_problem(1)
    results = symbol_identity_checks(coeffs, xi, rng, tol=1e-12)
    elapsed = time.perf_counter() - t0
    assert report(1, "operator identities", {r.name: (f"{r.value:.2e}", r.passed) for r in results}, elapsed, 10)


def test_criterion_2_symbol_positivity():
    t0 = time.perf_counter()
    coeffs, xi, _ = sampled_problem(2)
    results = positivity_checks(coeffs, xi, slack=1e-12)
    elapsed = time.perf_counter() - t0
    assert report(2, "symbol positivity", {r.name: (f"{r.value:.2e}", r.passed) for r in results}, elapsed, 5)


def test_criterion_3_heat_decay(decay_results):
    fits, bounds, elapsed = decay_results
    heat = fits[0]
    worst = max(b["lhs"] / b["rhs"] for b in bounds)
    checks = {
        "slope": (f"{heat.slope:.3f} vs -1.5 +- 0.15 on t in [{heat.window[0]:g}, {heat.window[1]:g}]", heat.passed),
        "shell bound lhs/rhs": (f"max {worst:.3e}", all(b["pass"] for b in bounds)),
    }
    assert report(3, "heat decay", checks, elapsed, 300)


def test_criterion_4_dispersive_decay(decay_results):
    fits, _, elapsed = decay_results
    disp = fits[1]
    checks = {"slope": (f"{disp.slope:.3f} vs -1.0 +- 0.15 on t in [{disp.window[0]:g}, {disp.window[1]:.3g}]",
                        disp.passed)}
    assert report(4, "dispersive decay", checks, elapsed, 300)


def test_criterion_5_formulation_equivalence():
    cfg = load_config(CONFIGS / "cross_check.toml")
    x = cfg.cross_check
    t0 = time.perf_counter()
    rows = cross_check(cfg.coefficients, cfg.grid, cfg.initial, x.angle_dt, x.director_dt, x.t_end, cfg.scheme.scheme)
    elapsed = time.perf_counter() - t0
    order = cross_check_order(rows)
    worst = max(r.discrepancy for r in rows)
    raw = ", ".join(f"{r.order:.3f}" for r in rows if r.order is not None)
    checks = {
        "max discrepancy": (f"{worst:.2e} <= {x.tolerance:g}", worst <= x.tolerance),
        "order": (f"{order:.3f} (halving orders {raw})", order is not None and order >= x.min_order),
    }
    assert report(5, "formulation equivalence", checks, elapsed, 120)


def test_criterion_6_small_data_stability():
    cfg = load_config(CONFIGS / "small_data.toml")
    t0 = time.perf_counter()
    state0 = generate_initial_data(cfg.initial, cfg.grid)
    tracker = EnergyTracker(cfg.coefficients, cfg.grid, cfg.diag_order, cadence=cfg.cadence)
    _, rep = run(state0, cfg.scheme, cfg.coefficients, tracker=tracker)
    elapsed = time.perf_counter() - t0
    s = rep.summary()
    v = stability_checks(rep, t_from=10.0, growth=1.2)
    checks = {
        "t_final": (f"{s['t_final']:g}", s["t_final"] == pytest.approx(50.0)),
        "E0 max/E0(0)": (f"{v['E0_bounded']['value']:.6f}", v["E0_bounded"]["pass"]),
        "dissipation increments decreasing after t=10": (
            f"{v['dissipation_increments_decreasing']['value']} intervals",
            v["dissipation_increments_decreasing"]["pass"]),
        "div u": (f"{s['max_div_u']:.1e}", s["max_div_u"] <= 1e-10),
        "||d|-1|": (f"{s['max_unit_d']:.1e}", s["max_unit_d"] <= 5e-15),
        "sup Phi envelope nonincreasing": (f"{v['sup_Phi_envelope_nonincreasing']['value']} peaks",
                                           v["sup_Phi_envelope_nonincreasing"]["pass"]),
    }
    assert report(6, "small-data stability", checks, elapsed, 600)


def test_criterion_7_temporal_convergence():
    g = Grid3(16, 1.0)
    t0 = time.perf_counter()
    s0 = generate_initial_data(InitialDataSpec(1e-1, seed=6, band=(1, 2)), g)
    checks = {}
    for scheme in SCHEMES:
        finals = [run(s0, SchemeConfig(dt=h, t_end=1.0, scheme=scheme), C)[0] for h in (0.1, 0.05, 0.025)]
        for name, get in (("flow", lambda s: s.flow.v.coeffs), ("wave", lambda s: s.wave.coeffs)):
            a, b, c = (get(s) for s in finals)
            p = float(np.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c)))
            checks[f"{scheme} {name} order"] = (f"{p:.3f}", 1.8 <= p <= 2.2)
        lin = generate_initial_data(InitialDataSpec(1e-2, seed=4), g)
        cfg = SchemeConfig(dt=0.1, t_end=1.0, scheme=scheme, nonlinear=False, reprojection_period=1000)
        final, _ = run(lin, cfg, C)
        expect_v = semigroup_apply(C, 1.0, lin.flow.v).coeffs
        expect_w = np.exp(1j * g.kmag) * lin.wave.coeffs
        # relative to the largest coefficient, so the bound does not depend on the data amplitude
        err_v = float(np.max(np.abs(final.flow.v.coeffs - expect_v)) / np.max(np.abs(expect_v)))
        err_w = float(np.max(np.abs(final.wave.coeffs - expect_w)) / np.max(np.abs(expect_w)))
        checks[f"{scheme} linear exactness"] = (f"{max(err_v, err_w):.1e}", max(err_v, err_w) <= 1e-13)
    elapsed = time.perf_counter() - t0
    assert report(7, "temporal convergence", checks, elapsed, 120)


def test_criterion_8_littlewood_paley():
    g = Grid3(32, 1.0)
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    f = SpectralField(g, fft3(rng.standard_normal(g.shape)))
    total = sum(p.coeffs for p in lp_decompose(f).values())
    total[0, 0, 0] += f.coeffs[0, 0, 0]
    partition = float(np.max(np.abs(total - f.coeffs)))
    shells = list(resolved_shells(g))
    bern = 0.0
    for _ in range(100):
        h = SpectralField(g, dealias(fft3(rng.standard_normal(g.shape)), g))
        bern = max(bern, *(bernstein_ratio(h, k) for k in shells))
    h = SpectralField(g, dealias(fft3(rng.standard_normal(g.shape)), g))
    qerr = 0.0
    for k in shells:
        pieces = sum(q_project(h, j, k).coeffs for j in q_indices(g, k))
        qerr = max(qerr, float(np.max(np.abs(pieces - lp_project(h, k).coeffs))))
    elapsed = time.perf_counter() - t0
    checks = {
        "partition of unity": (f"{partition:.1e}", partition <= 1e-12),
        f"Bernstein constant over 100 fields, shells {shells[0]}..{shells[-1]}": (f"{bern:.3f}", bern <= 4.0),
        "Q_jk reconstruction": (f"{qerr:.1e}", qerr <= 1e-10),
    }
    assert report(8, "Littlewood-Paley machinery", checks, elapsed, 60)


def test_criterion_9_profile_stationarity():
    g = Grid3(16, 1.0)
    t0 = time.perf_counter()
    base = generate_initial_data(InitialDataSpec(1e-2, seed=4), g)
    free0 = SimulationState.from_arrays(g, 0.0, g.zeros(3), base.wave.coeffs.copy(), base.mean_phi)
    free1, _ = run(free0, SchemeConfig(dt=1e-3, t_end=1.0, nonlinear=False), C)
    free_rate = profile_drift(build_profile(free1), build_profile(free0)) / l2_norm(free0.wave.Phi1)
    drift = []
    for eps in (1e-3, 2e-3):
        s0 = generate_initial_data(InitialDataSpec(eps, seed=5), g)
        s1, _ = run(s0, SchemeConfig(dt=0.05, t_end=2.0), C)
        drift.append(profile_drift(build_profile(s1), build_profile(s0)) / 2.0)
    ratio = drift[1] / drift[0]
    elapsed = time.perf_counter() - t0
    checks = {
        "free-wave drift per unit time at dt=1e-3": (f"{free_rate:.1e}", free_rate <= 1e-6),
        "nonlinear drift ratio eps0 2e-3 vs 1e-3": (f"{ratio:.4f}", 3.5 <= ratio <= 4.5),
    }
    assert report(9, "profile stationarity", checks, elapsed, 300)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
