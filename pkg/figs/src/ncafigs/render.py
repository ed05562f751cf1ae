"""Figure renderers: relaxation grid, spectra overlay, transmission heatmaps.

Pure functions of the CSV inputs — fixed styles, fixed colormaps, pinned
image metadata — so identical inputs produce byte-identical images.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .manifest import Manifest, RunEntry, load_csv, read_manifest  # noqa: E402

__all__ = ["FigureRecipe", "render"]

FIGURE_IDS = ("fig2", "spectra", "transmission")
_SAVE_KW = dict(dpi=150, metadata={"Software": "ncamaps-figs"})


@dataclass(frozen=True)
class FigureRecipe:
    manifest_path: str
    figure_id: str
    out_dir: str
    t_range: tuple = (0.0, 300.0)
    sx_range: tuple = (-1.1, 0.05)
    sz_range: tuple = (-1.05, 1.05)
    omega_range: tuple = (0.0, 0.3)

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}; expected one of {FIGURE_IDS}")


def _alpha_colors(alphas):
    uniq = sorted(set(alphas))
    cmap = plt.get_cmap("viridis")
    return {a: cmap(0.05 + 0.9 * i / max(len(uniq) - 1, 1)) for i, a in enumerate(uniq)}


def _style(method: str) -> dict:
    return {"linestyle": "--" if method.endswith("_markov") else "-", "linewidth": 1.2}


def _plot_curves(ax, manifest, entries, xcol, ycol, colors):
    for e in entries:
        data = load_csv(manifest, e)
        x, y = data[xcol], data[ycol]
        ax.plot(x, y, color=colors[e.alpha], **_style(e.method))
        if e.diverged and len(x):
            # truncated run: mark where it stopped
            ax.plot(x[-1], y[-1], "x", color=colors[e.alpha], markersize=7)


def _save(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def _render_fig2(manifest: Manifest, recipe: FigureRecipe) -> list:
    entries = manifest.of_kind("dynamics")
    if not entries:
        return []
    colors = _alpha_colors([e.alpha for e in entries])
    memory = [e for e in entries if e.method in ("nca", "nca_markov")]
    second = [e for e in entries if e.method in ("born", "born_markov")]
    panels = [
        ("sx", "self-consistent", memory, recipe.sx_range),
        ("sx", "second order", second, recipe.sx_range),
        ("sz", "self-consistent", memory, recipe.sz_range),
        ("sz", "second order", second, recipe.sz_range),
    ]
    written = []
    for ycol, group, group_entries, yrange in panels:
        fig, ax = plt.subplots(figsize=(4.2, 3.0), constrained_layout=True)
        _plot_curves(ax, manifest, group_entries, "t", ycol, colors)
        ax.set_xlim(*recipe.t_range)
        ax.set_ylim(*yrange)
        ax.set_xlabel("t [2pi/omega_c]")
        ax.set_ylabel(f"<{ycol}>")
        ax.set_title(group)
        tag = "nca" if group == "self-consistent" else "born"
        written.append(_save(fig, os.path.join(recipe.out_dir, f"fig2_{ycol}_{tag}.png")))
    fig, axes = plt.subplots(2, 2, figsize=(8.4, 6.0), constrained_layout=True)
    for ax, (ycol, group, group_entries, yrange) in zip(axes.ravel(), panels):
        _plot_curves(ax, manifest, group_entries, "t", ycol, colors)
        ax.set_xlim(*recipe.t_range)
        ax.set_ylim(*yrange)
        ax.set_xlabel("t [2pi/omega_c]")
        ax.set_ylabel(f"<{ycol}>")
        ax.set_title(group)
    written.append(_save(fig, os.path.join(recipe.out_dir, "fig2.png")))
    return written


def _render_spectra(manifest: Manifest, recipe: FigureRecipe) -> list:
    entries = manifest.of_kind("spectrum")
    if not entries:
        return []
    colors = _alpha_colors([e.alpha for e in entries])
    methods = sorted({e.method for e in entries})
    written = []
    for method in methods:
        fig, ax = plt.subplots(figsize=(4.6, 3.4), constrained_layout=True)
        inset = ax.inset_axes([0.58, 0.55, 0.4, 0.42])
        for e in (e for e in entries if e.method == method):
            data = load_csv(manifest, e)
            om, cz = data["omega"], data["cz"]
            ax.plot(om, cz, color=colors[e.alpha], **_style(e.method))
            if len(om):
                k = int(np.argmax(cz))
                ax.plot(om[k], cz[k], "v", color=colors[e.alpha], markersize=5)
            low = (om > 0) & (cz > 0)
            inset.loglog(om[low], cz[low], color=colors[e.alpha], linewidth=0.9)
        ax.set_xlim(*recipe.omega_range)
        ax.set_xlabel("omega [omega_c]")
        ax.set_ylabel("C_z(omega)")
        ax.set_title(method)
        inset.tick_params(labelsize=6)
        written.append(_save(fig, os.path.join(recipe.out_dir, f"spectra_{method}.png")))
    fig, axes = plt.subplots(1, len(methods), figsize=(4.2 * len(methods), 3.4),
                             constrained_layout=True, squeeze=False)
    for ax, method in zip(axes.ravel(), methods):
        for e in (e for e in entries if e.method == method):
            data = load_csv(manifest, e)
            ax.plot(data["omega"], data["cz"], color=colors[e.alpha], **_style(e.method))
        ax.set_xlim(*recipe.omega_range)
        ax.set_xlabel("omega [omega_c]")
        ax.set_ylabel("C_z(omega)")
        ax.set_title(method)
    written.append(_save(fig, os.path.join(recipe.out_dir, "spectra.png")))
    return written


def _render_transmission(manifest: Manifest, recipe: FigureRecipe) -> list:
    entries = manifest.of_kind("transmission")
    if not entries:
        return []
    written = []

    def draw(ax, e: RunEntry):
        data = load_csv(manifest, e)
        eps = np.unique(data["epsilon"])
        om = np.unique(data["omega"])
        grid = data["t2"].reshape(len(eps), len(om))
        mesh = ax.pcolormesh(eps, om, grid.T, cmap="magma", shading="auto")
        ax.set_xlabel("epsilon [omega_c]")
        ax.set_ylabel("omega [omega_c]")
        ax.set_title(f"{e.method}, alpha={e.alpha:g}")
        return mesh

    for e in entries:
        fig, ax = plt.subplots(figsize=(4.4, 3.4), constrained_layout=True)
        mesh = draw(ax, e)
        fig.colorbar(mesh, ax=ax, label="|T|^2")
        tag = f"{e.method}_alpha{e.alpha:g}".replace(".", "p")
        written.append(_save(fig, os.path.join(recipe.out_dir, f"transmission_{tag}.png")))
    fig, axes = plt.subplots(1, len(entries), figsize=(4.4 * len(entries), 3.4),
                             constrained_layout=True, squeeze=False)
    for ax, e in zip(axes.ravel(), sorted(entries, key=lambda e: (e.method, e.alpha))):
        mesh = draw(ax, e)
        fig.colorbar(mesh, ax=ax, label="|T|^2")
    written.append(_save(fig, os.path.join(recipe.out_dir, "transmission.png")))
    return written


def render(recipe: FigureRecipe) -> list:
    """Render the requested figure set; returns the list of written files."""
    manifest = read_manifest(recipe.manifest_path)
    os.makedirs(recipe.out_dir, exist_ok=True)
    renderer = {
        "fig2": _render_fig2,
        "spectra": _render_spectra,
        "transmission": _render_transmission,
    }[recipe.figure_id]
    return renderer(manifest, recipe)
