"""Figures for the command-line reports.

Only the CLI imports this module; the library itself never touches
matplotlib. Figures are drawn on the Agg canvas and written straight to file,
so no display or pyplot state is involved.
"""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .hydro import ce_grid


def _save(fig, path):
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, bbox_inches="tight")


def fatigue_scatter(report, path, title=None):
    """Predicted against measured maximum fatigue on log axes, with 1:1, x3 and x5 bands."""
    meas = np.array([c.measured for c in report.cases])
    pred = np.array([c.predicted for c in report.cases])
    lo = 10 ** np.floor(np.log10(min(meas.min(), pred.min())))
    hi = 10 ** np.ceil(np.log10(max(meas.max(), pred.max())))
    line = np.array([lo, hi])

    fig = Figure(figsize=(5.0, 5.0))
    ax = fig.add_subplot()
    ax.plot(line, line, "k-", lw=1, label="1:1")
    for k, style in ((3, "--"), (5, ":")):
        ax.plot(line, k * line, "k" + style, lw=0.8, label=f"factor {k}")
        ax.plot(line, line / k, "k" + style, lw=0.8)
    ax.scatter(meas, pred, s=18, c="tab:blue", zorder=3)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_xlabel("measured max fatigue [1/year]")
    ax.set_ylabel("predicted max fatigue [1/year]")
    f3 = report.fraction_within_factor.get(3)
    f5 = report.fraction_within_factor.get(5)
    ax.set_title(title or f"within x3: {f3:.0%}, within x5: {f5:.0%}")
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, path)


def ce_contour(params, path, n_fhat=121, n_ad=121):
    fhat = np.linspace(0.8 * params.fhat_min, 1.2 * params.fhat_max, n_fhat)
    ad = np.linspace(0.0, 1.2 * params.max_ad_zero, n_ad)
    grid = ce_grid(params, fhat, ad)
    lim = np.abs(grid).max()

    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot()
    mesh = ax.pcolormesh(fhat, ad, grid.T, cmap="RdBu_r", vmin=-lim, vmax=lim, shading="auto")
    ax.contour(fhat, ad, grid.T, levels=[0.0], colors="k", linewidths=1)
    fig.colorbar(mesh, ax=ax, label="Ce")
    ax.set_xlabel("non-dimensional frequency")
    ax.set_ylabel("A/D")
    _save(fig, path)


def cluster_scatter(points, labels, path, names=("n", "R31", "F")):
    """Pairwise projections of the feature points coloured by cluster."""
    x = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    pairs = [(0, 2), (0, 1), (2, 1)]
    fig = Figure(figsize=(12.0, 4.0))
    for i, (a, b) in enumerate(pairs):
        ax = fig.add_subplot(1, 3, i + 1)
        for lab in np.unique(labels):
            sel = labels == lab
            ax.scatter(x[sel, a], x[sel, b], s=14, label=f"cluster {lab}")
        ax.set_xlabel(names[a])
        ax.set_ylabel(names[b])
    fig.axes[0].legend(fontsize=8)
    _save(fig, path)


def time_frequency(tf, path):
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.add_subplot()
    ax.pcolormesh(tf.times, tf.frequencies, tf.power, shading="auto", cmap="viridis")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("frequency [Hz]")
    _save(fig, path)
