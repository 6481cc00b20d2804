"""Matplotlib figure rendering for the CLI report path.

All figures are written to files (Agg backend); scalar maps shade each seed
position by its value, matching the nearest-seed rendering of the viewer.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "figure_scalar_map",
    "figure_cluster_map",
    "figure_spectrum",
    "figure_curves",
]

_CATEGORICAL = (
    "#4477aa", "#ee6677", "#228833", "#ccbb44",
    "#66ccee", "#aa3377", "#bbbbbb", "#000000",
)


def figure_scalar_map(path, seeds, values, title="", cmap="viridis", point_size=None):
    """Scatter of seed positions colored by a per-point scalar."""
    seeds = np.asarray(seeds)
    if point_size is None:
        point_size = max(2.0, 4e4 / max(seeds.shape[0], 1))
    fig, ax = plt.subplots(figsize=(6, 5))
    sc = ax.scatter(seeds[:, 0], seeds[:, 1], c=values, s=point_size, cmap=cmap, marker="s")
    fig.colorbar(sc, ax=ax)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def figure_cluster_map(path, seeds, labels, title="", point_size=None):
    """Scatter of seed positions with a categorical palette per label."""
    seeds = np.asarray(seeds)
    labels = np.asarray(labels)
    if point_size is None:
        point_size = max(2.0, 4e4 / max(seeds.shape[0], 1))
    fig, ax = plt.subplots(figsize=(6, 5))
    for lab in np.unique(labels):
        mask = labels == lab
        ax.scatter(
            seeds[mask, 0],
            seeds[mask, 1],
            s=point_size,
            marker="s",
            color=_CATEGORICAL[int(lab) % len(_CATEGORICAL)],
            label=f"cluster {lab}",
        )
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="upper right", fontsize="small", markerscale=3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def figure_spectrum(path, eigenvalues, title="operator spectrum"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(len(eigenvalues)), eigenvalues, ".", markersize=3)
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def figure_curves(path, scales, curves, labels=None, title="HKS curves", log_values=True):
    """Log-log plot of signature curves (rows of ``curves``)."""
    curves = np.asarray(curves)
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, row in enumerate(curves):
        color = _CATEGORICAL[i % len(_CATEGORICAL)]
        lab = labels[i] if labels is not None else None
        ax.plot(scales, row, color=color, label=lab, linewidth=1.2)
    ax.set_xscale("log")
    ax.set_xlabel("scale")
    ax.set_ylabel("log10 HKS" if log_values else "HKS")
    if labels is not None:
        ax.legend(fontsize="small")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
