"""Figure rendering for the CLI report path.

Each renderer takes the already-computed report object and writes one PNG
next to the delimited output; nothing here feeds back into the numbers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "paths_figure",
    "kernel_figure",
    "area_figure",
    "malliavin_figure",
    "tail_figure",
    "spectral_figure",
    "density_figure",
]


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def paths_figure(batch, path, max_paths: int = 8) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2), sharey=True)
    shown = min(batch.count, max_paths)
    for c, ax in enumerate(axes):
        for i in range(shown):
            ax.plot(batch.times, batch.values[i, c], lw=0.8)
        ax.set_xlabel("t")
        ax.set_title(f"component {c + 1}")
    axes[0].set_ylabel("B(t)")
    fig.suptitle(f"fBm paths, H={batch.params.H}, level {batch.level} ({shown} of {batch.count})")
    return _save(fig, path)


def kernel_figure(kernel, grid_n: int, path) -> Path:
    T = kernel.params.T
    grid = np.linspace(0.0, T, grid_n)
    cells = kernel.rect_grid(grid, grid)
    fig, ax = plt.subplots(figsize=(4.4, 3.6))
    extent = (0, T, 0, T)
    im = ax.imshow(cells.T, origin="lower", extent=extent, cmap="RdBu_r",
                   vmin=-np.abs(cells).max(), vmax=np.abs(cells).max())
    fig.colorbar(im, ax=ax, label="rectangle mass")
    ax.set_xlabel("s")
    ax.set_ylabel("t")
    ax.set_title(f"covariance rectangle masses, H={kernel.params.H}")
    return _save(fig, path)


def area_figure(conv, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    ax.semilogy(conv.levels[:-1], conv.mean_sq_diff, "o-")
    ax.set_xlabel("dyadic level m")
    ax.set_ylabel("mean squared gap to finest area")
    ax.set_title(f"area refinement, fitted log2 slope {conv.slope:.2f}")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def malliavin_figure(report_batch, path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].hist(report_batch.phi, bins=60, color="tab:blue", alpha=0.8)
    axes[0].set_xlabel("phi")
    axes[0].set_ylabel("count")
    axes[0].set_title("determinant of the covariance matrix")
    axes[1].hist(report_batch.qnorm2, bins=60, color="tab:orange", alpha=0.8)
    axes[1].set_xlabel("qnorm2")
    axes[1].set_title("gradient Gram norm squared")
    return _save(fig, path)


def tail_figure(tail, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    ax.plot(np.log(tail.s_grid), tail.log_mean_exp, "o-")
    ax.set_xlabel("log s")
    ax.set_ylabel("log E[exp(-s phi)]")
    ax.set_title(f"small-ball decay, slope {tail.slope:.2f}")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def spectral_figure(reports, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.8, 3.4))
    for rep in reports:
        vals = np.maximum(rep.eigenvalues, 1e-300)
        ax.semilogy(np.arange(1, len(vals) + 1), vals, "o-", ms=3, label=f"n={rep.grid_n}")
    ax.set_xlabel("rank")
    ax.set_ylabel("eigenvalue")
    ax.set_title("restricted determinant form spectrum")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def density_figure(estimate, path) -> Path:
    mids = [len(ax_) // 2 for ax_ in estimate.axes]
    planes = [
        (estimate.values[:, :, mids[2]], 0, 1, "b1", "b2"),
        (estimate.values[:, mids[1], :], 0, 2, "b1", "a"),
        (estimate.values[mids[0], :, :], 1, 2, "b2", "a"),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    for ax, (plane, i, j, xl, yl) in zip(axes, planes):
        extent = (
            estimate.axes[i][0], estimate.axes[i][-1],
            estimate.axes[j][0], estimate.axes[j][-1],
        )
        im = ax.imshow(plane.T, origin="lower", extent=extent, aspect="auto", cmap="viridis")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
    fig.suptitle(f"joint density slices through the box center (N={estimate.n_samples})")
    return _save(fig, path)
