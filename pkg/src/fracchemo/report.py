"""Figure rendering for run, sweep and estimator outputs.

Every report path of the CLI drops PNG figures next to the delimited
output so a run directory is self-describing; rendering uses the Agg
backend and never opens a window.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_run_figures",
    "render_field_figure",
    "render_sweep_figure",
    "render_sobolev_figure",
    "render_convergence_figure",
]

_DPI = 150


def _finite(xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        return [], []
    return zip(*pts)


def render_run_figures(rows, prefix):
    """Energy, residual and extremum traces for one trajectory.

    Returns the list of files written, ``<prefix>_energies.png``,
    ``<prefix>_residuals.png`` and ``<prefix>_extrema.png``.
    """
    t = [r.t for r in rows]
    written = []

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, series in (
        ("E0", [r.E0 for r in rows]),
        ("E_alpha/2", [r.Ehalf for r in rows]),
        ("E1", [r.E1 for r in rows]),
        ("E2", [r.E2 for r in rows]),
    ):
        xs, ys = _finite(t, series)
        if xs:
            ax.semilogy(xs, ys, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    path = f"{prefix}_energies.png"
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, series in (
        ("R_low", [r.R_low for r in rows]),
        ("R_1", [r.R_1 for r in rows]),
        ("R_2", [r.R_2 for r in rows]),
    ):
        xs, ys = _finite(t, [max(v, 1e-18) if math.isfinite(v) else v for v in series])
        if xs:
            ax.semilogy(xs, ys, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("relative balance residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    path = f"{prefix}_residuals.png"
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, series in (
        ("min u", [r.min_u for r in rows]),
        ("max u", [r.max_u for r in rows]),
        ("mean u", [r.mean_u for r in rows]),
        ("||div q||", [r.div_q_norm for r in rows]),
    ):
        xs, ys = _finite(t, series)
        if xs:
            ax.plot(xs, ys, label=label)
    ax.set_xlabel("t")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    path = f"{prefix}_extrema.png"
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    return written


def render_field_figure(state, path):
    """Terminal density profile: line plot in 1-D, image in 2-D."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if state.grid.d == 1:
        x = state.grid.nodes()
        ax.plot(x, state.u.values(), label="u")
        for i, qi in enumerate(state.q):
            ax.plot(x, qi.values(), label=f"q{i+1}", alpha=0.8)
        ax.set_xlabel("x")
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
    else:
        im = ax.imshow(
            state.u.values().T,
            origin="lower",
            extent=[-np.pi, np.pi, -np.pi, np.pi],
            cmap="viridis",
        )
        fig.colorbar(im, ax=ax, label="u")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    ax.set_title(f"t = {state.t:.4g}")
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def render_sweep_figure(table, path):
    """Peak H2-energy growth over the (alpha, amplitude) matrix."""
    alphas = sorted({row["alpha"] for row in table})
    amps = sorted({row["amplitude"] for row in table})
    growth = np.full((len(amps), len(alphas)), np.nan)
    blown = np.zeros_like(growth, dtype=bool)
    for row in table:
        i = amps.index(row["amplitude"])
        j = alphas.index(row["alpha"])
        g = row["E2_growth_max"]
        growth[i, j] = math.log10(g) if math.isfinite(g) and g > 0 else np.nan
        blown[i, j] = row["blown_up"]
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    im = ax.imshow(growth, origin="lower", aspect="auto", cmap="magma")
    for i in range(len(amps)):
        for j in range(len(alphas)):
            if blown[i, j]:
                ax.plot(j, i, "wx", markersize=10)
    ax.set_xticks(range(len(alphas)), [f"{a:g}" for a in alphas])
    ax.set_yticks(range(len(amps)), [f"{a:g}" for a in amps])
    ax.set_xlabel("alpha")
    ax.set_ylabel("amplitude")
    fig.colorbar(im, ax=ax, label="log10 max E2 growth (x = blow-up)")
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def render_sobolev_figure(est, path):
    """Profile of the ratio maximizer found by the ascent."""
    f = est.field()
    x = f.grid.nodes()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(x, f.values())
    ax.set_xlabel("x")
    ax.set_ylabel("g(x)")
    ax.set_title(f"ratio lower bound {est.ratio:.6f}")
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def render_convergence_figure(report, path):
    """log-log error-vs-step plot with the fitted slope."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(report.levels, report.errors, "o-", label="measured")
    if report.errors and report.errors[0] > 0:
        ref = [
            report.errors[0] * (lv / report.levels[0]) ** report.target_order
            for lv in report.levels
        ]
        ax.loglog(report.levels, ref, "k--", alpha=0.5, label=f"order {report.target_order:g}")
    ax.set_xlabel("dt")
    ax.set_ylabel("terminal L2 error")
    ax.set_title(f"fitted slope {report.slope:.2f}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path
