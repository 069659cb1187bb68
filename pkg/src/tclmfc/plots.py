"""Figures written next to the CSV artifacts (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamp or version string, so reruns give identical bytes
_PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.savefig(Path(path), dpi=110, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_consumption(path, target, nominal, fleet, mean_field, steps_per_hour):
    """Average consumption against the target and the nominal baseline."""
    hours = np.arange(1, len(target) + 1) / steps_per_hour
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(hours, nominal, color="0.6", label="nominal")
    ax.plot(hours, target, "k--", label="target", zorder=3)
    ax.plot(hours, fleet, color="C0", alpha=0.8, label="fleet")
    ax.plot(hours, mean_field, color="C1", label="mean field")
    ax.set_xlabel("hour")
    ax.set_ylabel("fraction ON")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, path)


def plot_policy(path, p_on, space, t_min, steps_per_hour):
    """Heatmaps of P(ON) over time and temperature, one panel per mode."""
    temps = space.temps
    keep = temps >= np.floor(t_min)
    hours = len(p_on) / steps_per_hour
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for mode, ax in enumerate(axes):
        block = p_on[:, mode * space.n_temps:(mode + 1) * space.n_temps][:, keep]
        image = ax.imshow(block.T, origin="lower", aspect="auto", vmin=0.0, vmax=1.0,
                          cmap="viridis",
                          extent=(0, hours, temps[keep][0] - 0.5, temps[keep][-1] + 0.5))
        ax.set_title("OFF" if mode == 0 else "ON")
        ax.set_xlabel("hour")
    axes[0].set_ylabel("temperature (C)")
    fig.colorbar(image, ax=axes, label="P(ON)")
    _save(fig, path)


def plot_history(path, objectives):
    """Objective per iteration on log-log axes."""
    objectives = np.asarray(objectives, dtype=float)
    iters = np.arange(1, len(objectives) + 1)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(iters, np.maximum(objectives, np.finfo(float).tiny), marker=".")
    ax.set_xlabel("iteration + 1")
    ax.set_ylabel("objective")
    fig.tight_layout()
    _save(fig, path)
