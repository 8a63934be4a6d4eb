"""Matplotlib renderings saved next to the delimited outputs: a loss
curve for training traces and per-view score heatmaps for evaluation
reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import SceneReport, aggregate


def save_loss_curve(trace, path) -> Path:
    """Per-iteration loss on a log scale, epoch boundaries marked."""
    path = Path(path)
    iters = [t[0] for t in trace]
    losses = [t[2] for t in trace]
    epochs = [t[1] for t in trace]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(iters, losses, lw=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("L1 loss")
    for i in range(1, len(trace)):
        if epochs[i] != epochs[i - 1]:
            ax.axvline(iters[i], color="0.85", lw=0.5, zorder=0)
    ax.set_title("training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_view_heatmaps(reports: list[SceneReport], path) -> Path:
    """Scene-averaged per-view PSNR and SSIM heatmaps."""
    path = Path(path)
    psnr_mean = np.mean([r.psnr_views for r in reports], axis=0)
    ssim_mean = np.mean([r.ssim_views for r in reports], axis=0)
    agg = aggregate(reports)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, mat, label in ((axes[0], psnr_mean, "PSNR (dB)"),
                           (axes[1], ssim_mean, "SSIM")):
        im = ax.imshow(mat, cmap="viridis")
        ax.set_xlabel("v")
        ax.set_ylabel("u")
        ax.set_title(label)
        a = mat.shape[0]
        ax.set_xticks(range(a), [str(i + 1) for i in range(a)])
        ax.set_yticks(range(a), [str(i + 1) for i in range(a)])
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.suptitle(
        f"{len(reports)} scenes | PSNR {agg.psnr_mean:.2f} dB, "
        f"SSIM {agg.ssim_mean:.4f}"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
