"""Figures for the hysteresis experiment: measured vs. target per axis."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

AXIS_TITLES = {"x": "pitch", "y1": "yaw, jaw 1", "y2": "yaw, jaw 2"}


def _series(stats, axis):
    from .evaluation import plot_rows

    rows = plot_rows(stats, axis)
    if not rows:
        return None
    cols = list(zip(*rows))
    return {k: np.array(v, dtype=float) for k, v in zip(("target", "expected", "cw", "cw_std", "ccw", "ccw_std"), cols[1:])}


def plot_axis(stats, axis: str, ax) -> bool:
    s = _series(stats, axis)
    if s is None:
        return False
    order = np.argsort(s["target"], kind="stable")
    ax.plot(s["target"][order], s["expected"][order], "k-", lw=1, label="linear model")
    jitter = 0.6 if axis != "x" else 0.0
    ax.errorbar(s["target"] - jitter, s["cw"], yerr=s["cw_std"], fmt="o", ms=3, capsize=2, label="CW")
    ax.errorbar(s["target"] + jitter, s["ccw"], yerr=s["ccw_std"], fmt="s", ms=3, capsize=2, label="CCW")
    ax.set_title(AXIS_TITLES.get(axis, axis))
    ax.set_xlabel("target [deg]")
    ax.set_ylabel("measured [deg]")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    return True


def render_evaluation_figures(stats, out_dir) -> list:
    """One PNG per axis plus a combined panel; returns the written paths."""
    out = Path(out_dir)
    written = []
    fig_all, axes = plt.subplots(1, 3, figsize=(13, 4))
    for a, ax_all in zip(("x", "y1", "y2"), axes):
        fig, ax = plt.subplots(figsize=(5, 4))
        if plot_axis(stats, a, ax):
            fig.tight_layout()
            p = out / f"fig_{a}.png"
            fig.savefig(p, dpi=110)
            written.append(p)
            plot_axis(stats, a, ax_all)
        plt.close(fig)
    fig_all.tight_layout()
    p = out / "fig_overview.png"
    fig_all.savefig(p, dpi=110)
    plt.close(fig_all)
    written.append(p)
    return written
