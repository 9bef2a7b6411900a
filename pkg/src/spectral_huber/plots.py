"""Figure rendering for the report paths; files only, no interactive UI."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def convergence_figure(log, path):
    """Cost and NRMSE curves of a single run."""
    iters = log.column("iteration")
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4))
    axes[0].plot(iters, log.column("cost"))
    axes[0].set_xlabel("iteration")
    axes[0].set_ylabel("cost")
    axes[0].set_yscale("log")
    nr = log.column("nrmse")
    if np.any(np.isfinite(nr)):
        axes[1].plot(iters, nr)
        axes[1].set_ylabel("NRMSE")
    else:
        axes[1].plot(iters, log.column("gradnorm"))
        axes[1].set_yscale("log")
        axes[1].set_ylabel("gradient norm")
    axes[1].set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def compare_figures(curves, dist_path, nrmse_path):
    """Distance-to-limit and NRMSE curves for several methods.

    ``curves`` maps a label to a dict with keys "iter", "dist", "nrmse".
    """
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for label, c in curves.items():
        mask = np.isfinite(c["dist"]) & (c["dist"] > 0)
        ax.semilogy(c["iter"][mask], c["dist"][mask], label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("normalized distance to limit")
    ax.legend()
    fig.tight_layout()
    fig.savefig(dist_path, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for label, c in curves.items():
        mask = np.isfinite(c["nrmse"])
        if not np.any(mask):
            continue
        ax.plot(c["iter"][mask], c["nrmse"][mask], label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("NRMSE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(nrmse_path, dpi=120)
    plt.close(fig)
