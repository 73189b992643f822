"""Figures written next to CSV results (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from gridflood.experiments import cell_stats  # noqa: E402


def plot_sweep(rows: list[dict], path, x: str = "n") -> Path:
    """Log-log mean T (with standard-error bars) against n or m, one line per other-axis group."""
    path = Path(path)
    cells = cell_stats(rows)
    idx = {"n": 1, "m": 2}[x]
    other = 2 if idx == 1 else 1
    fig, ax = plt.subplots(figsize=(5, 4))
    cells = [c for c in cells if len(c.values)]
    # sweeps where the other parameter repeats get one line per value;
    # sweeps that scale it with x (e.g. fixed density) share one line per d
    repeated = len({c.key[other] for c in cells}) < len(cells)
    groups: dict[tuple, list] = {}
    for c in cells:
        key = (c.key[0], c.key[other]) if repeated else (c.key[0],)
        groups.setdefault(key, []).append(c)
    for key, cs in sorted(groups.items()):
        xs = np.array([c.key[idx] for c in cs], dtype=float)
        ys = np.array([c.mean for c in cs])
        err = np.array([c.stderr for c in cs])
        label = f"d={key[0]}" + ("" if len(key) == 1 else f", {'m' if idx == 1 else 'n'}={key[1]}")
        ax.errorbar(xs, ys, yerr=err, marker="o", capsize=2, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel("mean diffusion time T")
    if groups:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_growth(records: list[dict], path) -> Path:
    path = Path(path)
    t = [r["t"] for r in records]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(t, [r["infected"] for r in records], label="infected")
    ax.plot(t, [r["uninfected"] for r in records], label="uninfected")
    ax.set_xlabel("t")
    ax.set_ylabel("agents")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
