"""Report figures, rendered off-screen to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_energy(report, path) -> Path:
    """E0 and its parts against time."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    t = np.asarray(report.times)
    for name in ("E0", "kinetic", "dissipation_integral", "wave_energy"):
        y = np.asarray(getattr(report, name))
        if np.any(y > 0):
            ax.semilogy(t, np.where(y > 0, y, np.nan), label=name)
    ax.set_xlabel("t")
    ax.set_ylabel(f"energy (diagnostic order {report.diag_order})")
    ax.legend(loc="best", fontsize="small")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_shell_sup(report, path) -> Path:
    """Sup-norm of each dyadic shell of u and Phi against time."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    t = np.asarray(report.times)
    for ax, data, title in ((axes[0], report.shell_sup_u, "u"), (axes[1], report.shell_sup_Phi, "Phi")):
        arr = np.asarray(data)
        for i, k in enumerate(report.shells):
            col = arr[:, i] if arr.size else []
            if len(col) and np.any(col > 0):
                ax.semilogy(t, np.where(col > 0, col, np.nan), label=f"k={k}")
        ax.set_title(f"sup |P_k {title}|")
        ax.set_xlabel("t")
        ax.grid(True, which="both", alpha=0.3)
    axes[1].legend(loc="best", fontsize="x-small", ncol=2)
    return _save(fig, path)


def plot_decay(times, values, fit, path, title: str = "") -> Path:
    """Log-log series with the fitted and reference slopes over the fit window."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    ax.loglog(t, y, "o", ms=3, label="measured")
    t1, t2 = fit.window
    tw = np.geomspace(t1, t2, 20)
    inside = (t >= t1) & (t <= t2)
    anchor_t = np.exp(np.mean(np.log(t[inside])))
    anchor_y = np.exp(np.mean(np.log(y[inside])))
    ax.loglog(tw, anchor_y * (tw / anchor_t) ** fit.slope, "-", label=f"fit {fit.slope:.3f}")
    ax.loglog(tw, anchor_y * (tw / anchor_t) ** fit.reference, "--", label=f"reference {fit.reference:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("sup norm")
    ax.set_title(title or fit.quantity)
    ax.legend(loc="best", fontsize="small")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_cross_check(rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    dt = np.array([r.angle_dt for r in rows])
    e = np.array([r.discrepancy for r in rows])
    ax.loglog(dt, e, "o-", label="director vs angle")
    if len(dt) > 1:
        ax.loglog(dt, e[0] * (dt / dt[0]) ** 2, "--", label="slope 2")
    ax.set_xlabel("angle-form dt")
    ax.set_ylabel("relative discrepancy of d")
    ax.legend(loc="best", fontsize="small")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)
