"""Figure rendering for the CLI report paths.

Each renderer takes the already-computed report data and writes PNG
files next to the delimited output.  Rendering is optional (the CSV/JSON
files are the primary interface) and uses the Agg backend so it works
headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, figdir, name):
    os.makedirs(figdir, exist_ok=True)
    path = os.path.join(figdir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_grid_figures(rows, figdir) -> list:
    """One figure per quantity from zeta-grid CSV rows
    (z_re, z_im, quantity, value_re, value_im).

    A grid with a single imaginary value plots value vs Re(z); a genuine
    2-d grid shows |value| as a heat map.
    """
    by_quantity = {}
    for z_re, z_im, quantity, v_re, v_im in rows:
        by_quantity.setdefault(quantity, []).append((z_re, z_im, v_re, v_im))
    paths = []
    for quantity, data in by_quantity.items():
        arr = np.array(data, dtype=float)
        im_values = np.unique(arr[:, 1])
        fig, ax = plt.subplots(figsize=(5.5, 3.5))
        if len(im_values) == 1:
            order = np.argsort(arr[:, 0])
            ax.plot(arr[order, 0], arr[order, 2], label="Re", lw=1.2)
            if np.any(arr[:, 3] != 0):
                ax.plot(arr[order, 0], arr[order, 3], label="Im", lw=1.2,
                        ls="--")
                ax.legend(frameon=False)
            ax.set_xlabel("Re z")
            ax.set_ylabel(quantity)
        else:
            re_values = np.unique(arr[:, 0])
            mag = np.full((len(im_values), len(re_values)), np.nan)
            for z_re, z_im, v_re, v_im in data:
                i = np.searchsorted(im_values, z_im)
                j = np.searchsorted(re_values, z_re)
                mag[i, j] = np.hypot(v_re, v_im)
            mesh = ax.pcolormesh(re_values, im_values, mag, shading="auto")
            fig.colorbar(mesh, ax=ax, label=f"|{quantity}|")
            ax.set_xlabel("Re z")
            ax.set_ylabel("Im z")
        ax.set_title(quantity)
        paths.append(_save(fig, figdir, f"grid_{quantity}.png"))
    return paths


def render_count_figure(report, figdir) -> str:
    """Prime counts against the logarithmic-integral target plus the
    ratio panel."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.5, 5.5), sharex=True)
    grid = np.asarray(report.grid)
    ax1.plot(grid, report.pi, lw=1.4, label="prime count")
    ax1.plot(grid, report.li_eht, lw=1.2, ls="--",
             label="li(e^{hT}), h=%.4f" % report.h)
    ax1.set_yscale("log")
    ax1.set_ylabel("count")
    ax1.legend(frameon=False)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.asarray(report.pi, dtype=float) / np.asarray(report.li_eht)
    ax2.plot(grid, ratio, lw=1.2)
    ax2.axhline(1.0, color="0.5", lw=0.8)
    ax2.set_xlabel("T")
    ax2.set_ylabel("count / li")
    return _save(fig, figdir, "counting.png")


def render_resonance_figure(history, aitken, figdir) -> str:
    """Per-depth resonance estimates (raw and corrected) with the
    accelerated value as a horizontal line."""
    ns = [row[0] for row in history]
    raw = [row[1].real for row in history]
    corr = [row[2].real for row in history]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(ns, raw, "o-", lw=1.0, ms=4, label="raw ratio")
    ax.plot(ns, corr, "s-", lw=1.0, ms=4, label="truncation corrected")
    if aitken is not None:
        ax.axhline(aitken.real, color="0.4", lw=0.8, ls=":",
                   label="Aitken accelerated")
    ax.set_xlabel("ratio depth n")
    ax.set_ylabel("resonance estimate")
    ax.legend(frameon=False)
    return _save(fig, figdir, "resonances.png")
