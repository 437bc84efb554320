"""Figures written next to the CSV outputs of a run."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)


def plot_series(path, header, rows, x_col="time", exclude=("step",), title=None):
    """One panel per column against ``x_col``."""
    idx = header.index(x_col)
    cols = [i for i, h in enumerate(header) if i != idx and h not in exclude]
    if not cols or not rows:
        return None
    data = np.array([[float(v) for v in r] for r in rows])
    ncol = 3
    nrow = (len(cols) + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 2.6 * nrow), squeeze=False)
    for ax, c in zip(axes.flat, cols):
        ax.plot(data[:, idx], data[:, c], lw=1.2)
        ax.set_title(header[c], fontsize=9)
        ax.set_xlabel(x_col, fontsize=8)
        ax.tick_params(labelsize=7)
    for ax in list(axes.flat)[len(cols):]:
        ax.axis("off")
    if title:
        fig.suptitle(title, fontsize=10)
    _save(fig, path)
    return path


def plot_phase_space(path, grid, values, title="", cmap="RdBu_r", symmetric=True):
    v = np.real(values)
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    lim = np.max(np.abs(v)) if symmetric else None
    extent = [grid.z[0], grid.z[-1], grid.p[0], grid.p[-1]]
    im = ax.imshow(v.T, origin="lower", extent=extent, aspect="auto", cmap=cmap,
                   vmin=-lim if symmetric else None, vmax=lim)
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("z")
    ax.set_ylabel("p")
    ax.set_title(title)
    _save(fig, path)
    return path


def plot_curves(path, x, curves: dict, xlabel="x", ylabel="", title=""):
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for label, y in curves.items():
        ax.plot(x, y, lw=1.2, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save(fig, path)
    return path
