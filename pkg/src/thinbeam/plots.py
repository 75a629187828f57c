"""Figure rendering for the CLI report paths.

Every figure is written next to the delimited output it illustrates; the
Agg backend keeps rendering headless.  Figures are a reporting convenience:
all quantitative content lives in the CSV/JSON outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _overlay_crack(ax, crack, color="crimson"):
    for seg in crack.segments:
        ax.plot(seg[:, 0], seg[:, 1], color=color, lw=1.2)


def save_field_figure(field, crack, path, title=""):
    grid = field.grid
    mag = np.linalg.norm(field.values, axis=-1)
    fig, ax = plt.subplots(figsize=(7, 2.8))
    im = ax.imshow(
        mag.T,
        origin="lower",
        extent=(0, grid.L, -0.5, 0.5),
        aspect="auto",
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label="|y|")
    if crack is not None:
        _overlay_crack(ax, crack)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(title or f"displacement magnitude (h = {grid.h:g})")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_damage_figure(grid, phi, crack, path, title="damage field"):
    fig, ax = plt.subplots(figsize=(7, 2.8))
    im = ax.imshow(
        phi.T,
        origin="lower",
        extent=(0, grid.L, -0.5, 0.5),
        aspect="auto",
        cmap="magma",
        vmin=0.0,
        vmax=1.0,
    )
    fig.colorbar(im, ax=ax, label="phi")
    if crack is not None and crack.n_segments:
        _overlay_crack(ax, crack, color="cyan")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_trace_figure(trace, path):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(np.maximum(np.asarray(trace) - min(trace) + 1e-16, 1e-16), lw=1.2)
    ax.set_xlabel("half-step")
    ax.set_ylabel("energy above final")
    ax.set_title("alternating minimization trace")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_sweep_figure(rows, path):
    hs = [r["h"] for r in rows]
    gaps = [abs(r["rel_gap"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.loglog(hs, gaps, "o-", lw=1.2)
    ax.set_xlabel("h")
    ax.set_ylabel("|E_h - E_0| / E_0")
    ax.set_title("thin-strip energy vs beam limit")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_beam_figure(x, u, v, g_u, g_v, jumps, path):
    fig, axes = plt.subplots(2, 1, figsize=(6, 4.4), sharex=True)
    for ax, sol, tgt, name in ((axes[0], u, g_u, "u"), (axes[1], v, g_v, "v")):
        ax.plot(x, tgt, ".", ms=3, color="gray", label="target")
        ax.plot(x, sol, lw=1.4, label="minimizer")
        for j in jumps:
            ax.axvline(0.5 * (x[j] + x[j + 1]), color="crimson", lw=0.8, ls="--")
        ax.set_ylabel(name)
        ax.legend(loc="best", fontsize=8)
    axes[1].set_xlabel("x")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_profiles_figure(xs, a_lin, a_bar, jumps, path):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(xs, a_lin, lw=1.2, label="interpolated rotation")
    ax.step(xs, a_bar, where="mid", lw=1.2, label="piecewise average")
    for j in jumps:
        ax.axvline(j, color="crimson", lw=0.8, ls="--")
    ax.set_xlabel("x1")
    ax.set_ylabel("skew parameter")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
