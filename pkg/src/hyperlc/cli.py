"""Command-line front end.

    hyperlc simulate|verify-operators|verify-decay|cross-check --config PATH [--out DIR] [--seed N]

Exit codes: 0 pass, 2 configuration error, 3 numerical divergence,
4 verification failure.  Artifacts written before a failure are kept.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import SCENARIOS, ConfigError, RunConfig, load_config
from .diagnostics import (
    REFERENCES,
    EnergyTracker,
    decay_fit,
    dispersive_decay_series,
    heat_decay_series,
    heat_shell_bound,
    stability_checks,
    wrap_time,
)
from .spectral import Grid3
from .timestepper import RunFailure, generate_initial_data, run

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("hyperlc")


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return path


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _table(rows, columns) -> str:
    cells = [[str(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(columns)]
    line = "  ".join(c.ljust(w) for c, w in zip(columns, widths))
    body = ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join([line, "-" * len(line), *body])


def _fmt(x) -> str:
    return f"{x:.4g}" if isinstance(x, float) else str(x)


# -- simulate ------------------------------------------------------------------


SIM_LIMITS = {"max_div_u": 1e-10, "max_unit_d": 5e-15}
STABILITY_FROM = 10.0  # long-run verdicts look at t >= this


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    from . import plotting, snapshot

    grid, c = cfg.grid, cfg.coefficients
    state0 = generate_initial_data(cfg.initial, grid)
    tracker = EnergyTracker(c, grid, diag_order=cfg.diag_order, cadence=cfg.cadence)
    observers = []
    cadence = cfg.snapshot_every or 1
    if cfg.snapshot_every:
        def keep(state):
            snapshot.save(out / f"snapshot_t{state.t:012.6f}.bin", state, c)
        observers.append(keep)
    status, failure = EXIT_OK, None
    try:
        final, report = run(state0, cfg.scheme, c, observers=observers, tracker=tracker, cadence=cadence)
    except RunFailure as exc:
        final, report, failure = exc.state, exc.report, exc
        status = EXIT_DIVERGENCE
    _write_csv(out / "series.csv", report.columns(), report.rows())
    snapshot.save(out / "final.bin", final, c)
    summary = {"scenario": "simulate", "config": cfg.as_sections(), **report.summary()}
    verdicts = {}
    if len(report):
        for key, limit in SIM_LIMITS.items():
            verdicts[key] = {"value": summary[key], "limit": limit, "pass": summary[key] <= limit}
        if report.times[-1] > STABILITY_FROM + 2:
            verdicts.update(stability_checks(report, STABILITY_FROM))
    summary["verdicts"] = verdicts
    if failure is not None:
        summary["failure"] = {"type": type(failure.cause).__name__, "message": str(failure.cause),
                              "t": final.t}
    _write_json(out / "summary.json", summary)
    if cfg.figures and len(report):
        plotting.plot_energy(report, out / "energy.png")
        plotting.plot_shell_sup(report, out / "shells.png")
    print(_table([{"quantity": k, "value": _fmt(v["value"]), "limit": _fmt(v["limit"]),
                   "verdict": "pass" if v["pass"] else "FAIL"} for k, v in verdicts.items()],
                 ["quantity", "value", "limit", "verdict"]))
    if failure is not None:
        print(f"run stopped: {failure.cause}", file=sys.stderr)
        return status
    return EXIT_OK if all(v["pass"] for v in verdicts.values()) else EXIT_VERIFY


# -- verify-operators --------------------------------------------------------


def cmd_verify_operators(cfg: RunConfig, out: Path) -> int:
    from .verification import operator_suite

    results = operator_suite(cfg.coefficients, seed=cfg.initial.seed, grid=cfg.grid)
    rows = [r.as_dict() for r in results]
    _write_csv(out / "operators.csv", ["check", "value", "tolerance", "verdict", "detail"],
               ([r["check"], r["value"], r["tolerance"], r["verdict"], r["detail"]] for r in rows))
    ok = all(r.passed for r in results)
    _write_json(out / "summary.json", {"scenario": "verify-operators", "passed": ok, "checks": rows})
    print(_table([{**r, "value": _fmt(r["value"]), "tolerance": _fmt(r["tolerance"])} for r in rows],
                 ["check", "value", "tolerance", "verdict"]))
    return EXIT_OK if ok else EXIT_VERIFY


# -- verify-decay --------------------------------------------------------------


def decay_scenarios(cfg: RunConfig):
    """Heat and dispersive decay fits plus the shell bound; returns (fits, series, bound rows)."""
    d = cfg.decay
    grid = Grid3(d.points_per_axis, d.box_length, cfg.grid.dealias_fraction)
    c = cfg.coefficients
    t_heat = np.linspace(*d.heat_window, d.samples)
    heat = heat_decay_series(c, grid, t_heat, d.heat_width)
    ref, src = REFERENCES["heat"]
    fits = [decay_fit(t_heat, heat, ref, src, "sup |exp(-tL) f|", d.heat_window, d.tolerance)]
    lo, hi = d.dispersive_window
    hi = min(hi, wrap_time(grid))
    t_disp = np.linspace(lo, hi, d.samples)
    disp = dispersive_decay_series(grid, t_disp)
    ref, src = REFERENCES["dispersive"]
    fits.append(decay_fit(t_disp, disp, ref, src, "sup |exp(it|grad|) P_0 f|", (lo, hi), d.tolerance))
    bounds = []
    for k in range(0, 3):
        for t in (0.5, 1.0, 2.0):
            lhs, rhs = heat_shell_bound(c, grid, k, t, d.heat_width)
            bounds.append({"k": k, "t": t, "lhs": lhs, "rhs": rhs, "pass": lhs <= rhs * (1 + 1e-10)})
    return fits, {"heat": (t_heat, heat), "dispersive": (t_disp, disp)}, bounds


def cmd_verify_decay(cfg: RunConfig, out: Path) -> int:
    from . import plotting

    fits, series, bounds = decay_scenarios(cfg)
    rows = [f.as_dict() for f in fits]
    cols = ["quantity", "t1", "t2", "slope", "stderr", "reference", "tolerance", "samples", "verdict", "source"]
    _write_csv(out / "decay.csv", cols, ([r[c] for c in cols] for r in rows))
    for name, (t, y) in series.items():
        _write_csv(out / f"{name}_series.csv", ["time", "sup_norm"], zip(t.tolist(), y.tolist()))
    _write_csv(out / "shell_bound.csv", ["k", "t", "lhs", "rhs", "verdict"],
               ([b["k"], b["t"], b["lhs"], b["rhs"], "pass" if b["pass"] else "fail"] for b in bounds))
    ok = all(f.passed for f in fits) and all(b["pass"] for b in bounds)
    _write_json(out / "summary.json", {"scenario": "verify-decay", "passed": ok, "fits": rows,
                                       "shell_bound": bounds, "grid": {"points_per_axis": cfg.decay.points_per_axis,
                                                                        "box_length": cfg.decay.box_length}})
    if cfg.figures:
        for (name, (t, y)), fit in zip(series.items(), fits):
            plotting.plot_decay(t, y, fit, out / f"{name}_decay.png", title=fit.quantity)
    print(_table([{k: _fmt(v) for k, v in r.items()} for r in rows],
                 ["quantity", "slope", "stderr", "reference", "tolerance", "verdict"]))
    return EXIT_OK if ok else EXIT_VERIFY


# -- cross-check ---------------------------------------------------------------


def cross_check_order(rows) -> float | None:
    """The floor-corrected order of the finest triple, or the raw order when only two rows exist."""
    if rows and rows[-1].floor_free_order is not None:
        return rows[-1].floor_free_order
    return rows[-1].order if rows else None


def cmd_cross_check(cfg: RunConfig, out: Path) -> int:
    from . import plotting
    from .verification import cross_check

    x = cfg.cross_check
    rows = cross_check(cfg.coefficients, cfg.grid, cfg.initial, x.angle_dt, x.director_dt, x.t_end,
                       cfg.scheme.scheme)
    table = [{"angle_dt": r.angle_dt, "discrepancy": r.discrepancy, "order": r.order,
              "floor_free_order": r.floor_free_order,
              "verdict": "pass" if r.discrepancy <= x.tolerance else "fail"} for r in rows]
    measured = cross_check_order(rows)
    order_ok = measured is not None and measured >= x.min_order
    cols = ["angle_dt", "discrepancy", "order", "floor_free_order", "verdict"]
    _write_csv(out / "cross_check.csv", cols, ([("" if r[c] is None else r[c]) for c in cols] for r in table))
    ok = order_ok and all(r["verdict"] == "pass" for r in table)
    _write_json(out / "summary.json", {"scenario": "cross-check", "passed": ok, "tolerance": x.tolerance,
                                       "director_dt": x.director_dt, "rows": table,
                                       "order": {"value": measured, "minimum": x.min_order,
                                                 "pass": order_ok}})
    if cfg.figures:
        plotting.plot_cross_check(rows, out / "cross_check.png")
    print(_table([{k: _fmt(v) for k, v in r.items()} for r in table], cols))
    print(f"convergence order {_fmt(measured)} (minimum {x.min_order}): {'pass' if order_ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "simulate": cmd_simulate,
    "verify-operators": cmd_verify_operators,
    "verify-decay": cmd_verify_decay,
    "cross-check": cmd_cross_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperlc", description="Small-data liquid-crystal flow solver and verifier.")
    p.add_argument("command", choices=SCENARIOS)
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    p.add_argument("--seed", type=int, default=None, help="initial-data seed (overrides initial_data.seed)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out is not None:
        cfg = cfg.with_output(args.out)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")
    return COMMANDS[args.command](cfg, out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
