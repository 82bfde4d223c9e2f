"""
Figures written next to the CSV reports.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_trace(report, path, title=None):
    """Objective (and ADMM consensus residual) against iteration, log scale."""
    n_axes = 2 if report.residual else 1
    fig, axes = plt.subplots(1, n_axes, figsize=(4.5 * n_axes, 3.4), squeeze=False)
    ax = axes[0, 0]
    if report.objective:
        its, vals = zip(*report.objective)
        ax.semilogy(its, np.maximum(vals, np.finfo(float).tiny), "o-", ms=3, lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.grid(True, which="both", alpha=0.3)
    if report.residual:
        its, vals = zip(*report.residual)
        ax = axes[0, 1]
        ax.semilogy(its, np.maximum(vals, np.finfo(float).tiny), lw=1, color="C1")
        ax.set_xlabel("iteration")
        ax.set_ylabel(r"$\|v - z\|$")
        ax.grid(True, which="both", alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_metrics(report, path):
    """Per-plane PSNR and SSIM bars with the aggregate drawn as a line."""
    labels = [lab for lab, _, _ in report.planes]
    psnrs = [p for _, p, _ in report.planes]
    ssims = [s for _, _, s in report.planes]
    pos = np.arange(len(labels))
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(max(6, 0.7 * len(labels) + 3), 3.4))
    a1.bar(pos, psnrs, color="C0")
    a1.axhline(report.psnr, color="k", ls="--", lw=1)
    a1.set_ylabel("PSNR [dB]")
    a2.bar(pos, ssims, color="C2")
    a2.axhline(report.ssim, color="k", ls="--", lw=1)
    a2.set_ylabel("SSIM")
    for ax in (a1, a2):
        ax.set_xticks(pos)
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_stokes(stokes, path, channel=0):
    """S0, DoLP and AoLP side by side for one channel."""
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.2))
    panels = (
        ("s0", stokes.s0[channel], "gray", None),
        ("DoLP", stokes.dolp[channel], "viridis", (0, 1)),
        ("AoLP [deg]", stokes.aolp[channel], "twilight", (-90, 90)),
    )
    for ax, (name, img, cmap, lim) in zip(axes, panels):
        kw = {} if lim is None else dict(vmin=lim[0], vmax=lim[1])
        im = ax.imshow(img, cmap=cmap, **kw)
        ax.set_title(name)
        ax.set_axis_off()
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
