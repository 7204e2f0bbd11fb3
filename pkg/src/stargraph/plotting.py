"""Figure rendering for the CLI report paths.

Every plot is written to a file next to the delimited output; nothing is
interactive.  One-dimensional profiles go to SVG line plots, dense point
clouds to PNG.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _style(ax, xlabel, ylabel, title=None):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)


def plot_boundary(rows, path):
    """Lower/upper phase boundary curves from (eps, lower, upper, branch) rows."""
    eps = np.array([r[0] for r in rows])
    lower = np.array([r[1] for r in rows])
    upper = np.array([r[2] for r in rows])
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.plot(eps, lower, label="lower (ER curve)")
    ax.plot(eps, upper, label="upper (clique/anticlique)")
    ax.fill_between(eps, lower, upper, alpha=0.15)
    _style(ax, "edge density", "k-star density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_crossing(ks, eps0, path):
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.plot(ks, eps0, marker="o", ms=3)
    _style(ax, "star order k", "branch crossing point")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_step4(curves, path):
    """F(x, z(x)) against x for a handful of star orders."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for k, x, F in curves:
        ax.plot(x, F, label=f"k={k}")
    ax.axhline(0.0, color="k", lw=0.8)
    _style(ax, "x", "F(x, z(x))")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(rows, path):
    """Entropy and c1 cross-sections against sigma^2, one line per eps."""
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    by_eps = {}
    for r in rows:
        by_eps.setdefault(round(r.eps, 12), []).append(r)
    for eps, group in sorted(by_eps.items()):
        group = sorted(group, key=lambda r: r.sigma2)
        sig = [r.sigma2 for r in group]
        axes[0].plot(sig, [r.entropy for r in group], label=f"eps={eps:g}")
        axes[1].plot(sig, [r.c1 for r in group], label=f"eps={eps:g}")
    _style(axes[0], "sigma^2", "entropy")
    _style(axes[1], "sigma^2", "c1")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_scan(profile, tau2, path):
    """One-sided derivative profile around the scan center."""
    mid = np.array([p[0] for p in profile])
    der = np.array([p[1] for p in profile])
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.plot(mid, der, marker="o", ms=3)
    _style(ax, "edge density", "d entropy / d eps", title=f"tau2 = {tau2:g}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_taco(points, path, max_points=60_000):
    """Projections of the brute-force cloud: (t1, sigma2) and (t1, u)."""
    if points.shape[0] > max_points:
        stride = points.shape[0] // max_points + 1
        points = points[::stride]
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    axes[0].scatter(points[:, 0], points[:, 4], s=0.5, c=points[:, 5], cmap="viridis")
    _style(axes[0], "t1", "sigma^2")
    axes[1].scatter(points[:, 0], points[:, 3], s=0.5, c=points[:, 5], cmap="viridis")
    _style(axes[1], "t1", "u")
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return path


def plot_trend(rows, path):
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    alphas = [r["alpha"] for r in rows]
    pods = [r["podality"] for r in rows]
    ax.semilogx(alphas, pods, marker="o")
    ax.invert_xaxis()
    _style(ax, "alpha", "podality")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
