"""Deterministic SVG figures of a simulation trace."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from carp.sim import WorldTrace, pair_distances  # noqa: E402

_RC = {"svg.hashsalt": "carp", "svg.fonttype": "none", "path.simplify": False}
_META = {"Date": None, "Creator": None}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_trajectories(trace: WorldTrace, path) -> None:
    """Agent paths with start (circle) and goal (cross) markers; 3-D traces get xy and xz views."""
    pos = trace.positions
    d = pos.shape[2]
    views = [(0, 1)] if d == 2 else [(0, 1), (0, 2)]
    labels = "xyz"
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(views), figsize=(5.0 * len(views), 5.0), squeeze=False)
        for ax, (u, v) in zip(axes[0], views):
            for i in range(pos.shape[1]):
                line, = ax.plot(pos[:, i, u], pos[:, i, v], lw=1.2)
                ax.plot(pos[0, i, u], pos[0, i, v], "o", color=line.get_color(), ms=4)
                goal = trace.config.agents[i].goal
                ax.plot(goal[u], goal[v], "x", color=line.get_color(), ms=5)
            ax.set_xlabel(f"{labels[u]} [m]")
            ax.set_ylabel(f"{labels[v]} [m]")
            ax.set_aspect("equal", adjustable="datalim")
            ax.grid(True, lw=0.3)
        fig.suptitle(f"{trace.config.name}: trajectories")
        _save(fig, path)


def plot_distances(trace: WorldTrace, path) -> None:
    """Pairwise center distances over time, the minimum envelope, and the threshold."""
    dist, _ = pair_distances(trace.positions)
    t = np.arange(dist.shape[0]) * trace.config.dt
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7.0, 4.0))
        if dist.size:
            ax.plot(t, dist, color="0.75", lw=0.6)
            ax.plot(t, dist.min(axis=1), color="C0", lw=1.5, label="minimum")
        ax.axhline(trace.config.threshold, color="C3", ls="--", lw=1.0, label="threshold")
        ax.set_xlabel("time [s]")
        ax.set_ylabel("distance [m]")
        ax.set_ylim(bottom=0.0)
        ax.grid(True, lw=0.3)
        ax.legend(loc="upper right")
        _save(fig, path)


def plot_scaling(rows, path) -> None:
    """Log-log median solve time versus obstacle count."""
    counts = np.array([r["obstacles"] for r in rows], dtype=float)
    med = np.array([r["median_ms"] for r in rows], dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        ax.loglog(counts, med, "o-")
        ax.set_xlabel("obstacles")
        ax.set_ylabel("median build + solve [ms]")
        ax.grid(True, which="both", lw=0.3)
        _save(fig, path)
