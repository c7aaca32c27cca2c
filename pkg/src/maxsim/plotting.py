"""Figures for trajectories and scaling runs, rendered to files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bench import linear_fit  # noqa: E402


def plot_trajectory(log, path, title: str | None = None) -> None:
    """Signed distance of every contact and the height of every body over time."""
    t = np.asarray(log.time)
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    phi = log.phi
    ax = axes[0]
    for k, c in enumerate(log.mechanism.contacts):
        ax.plot(t, phi[:, k], lw=1, label=c.id)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_ylabel("signed distance [m]")
    if 0 < len(log.mechanism.contacts) <= 8:
        ax.legend(fontsize=7, loc="upper right")
    ax = axes[1]
    z = log.positions()[:, :, 2]
    for i, b in enumerate(log.mechanism.bodies):
        ax.plot(t, z[:, i], lw=1, label=b.id)
    ax.set_ylabel("height [m]")
    ax.set_xlabel("time [s]")
    if len(log.mechanism.bodies) <= 8:
        ax.legend(fontsize=7, loc="upper right")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_scaling(records, path, kind: str = "") -> None:
    """Best wall time and operation count against the scenario parameter."""
    p = np.array([r.param for r in records], dtype=float)
    secs = np.array([r.best_seconds for r in records])
    ops = np.array([r.op_count for r in records], dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(p, 1e3 * secs, "o", ms=3, label="best time")
    if len(p) >= 2:
        a, b, r2 = linear_fit(p, secs)
        ax.plot(p, 1e3 * (a + b * p), "-", lw=1, label=f"linear fit (R²={r2:.4f})")
    ax.set_xlabel({"cylinder": "contact points", "chain": "links"}.get(kind, "parameter"))
    ax.set_ylabel("best time per run [ms]")
    ax2 = ax.twinx()
    ax2.plot(p, ops, "s", ms=2, color="tab:gray", label="operation count")
    ax2.set_ylabel("operation count")
    lines = ax.get_legend_handles_labels()
    lines2 = ax2.get_legend_handles_labels()
    ax.legend(lines[0] + lines2[0], lines[1] + lines2[1], fontsize=8, loc="upper left")
    if kind:
        ax.set_title(f"{kind} scaling")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
