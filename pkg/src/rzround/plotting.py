"""Report figures. Everything renders off-screen to image files."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .cost import AngleSet  # noqa: E402

FIGSIZE = (6.4, 3.6)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rounding_cost(angle_set: AngleSet, snapped, leftover, path) -> None:
    """Triangle-wave penalty of ``angle_set`` with the final angles marked."""
    xs = np.linspace(0, 2 * math.pi, 2001)
    _, delta = angle_set.nearest(xs)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(xs, np.abs(delta) / 2, color="0.4", lw=1)
    if len(snapped):
        s = np.mod(np.asarray(snapped, dtype=float), 2 * math.pi)
        ax.plot(s, np.zeros_like(s), "o", color="tab:blue", label=f"rounded ({len(s)})")
    if len(leftover):
        left = np.mod(np.asarray(leftover, dtype=float), 2 * math.pi)
        _, dl = angle_set.nearest(left)
        ax.plot(left, np.abs(dl) / 2, "x", color="tab:red", label=f"left as Rz ({len(left)})")
    ax.set_xlim(0, 2 * math.pi)
    ax.set_xticks([k * math.pi / 2 for k in range(5)], ["0", "π/2", "π", "3π/2", "2π"])
    ax.set_xlabel("Rz angle")
    ax.set_ylabel("rounding penalty")
    ax.set_title(f"angle set: {angle_set.name}")
    if len(snapped) or len(leftover):
        ax.legend(frameon=False)
    _save(fig, path)


def plot_search(probes_all: dict, probes_clifford: dict, path) -> None:
    """Binary-search probes in the order they were made."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for label, probes, y in (("any lattice angle", probes_all, 1), ("Clifford only", probes_clifford, 0)):
        for step, (n, ok) in enumerate(probes.items()):
            ax.plot(n, y + 0.08 * step, "o" if ok else "x", color="tab:green" if ok else "tab:red")
        ax.text(-0.5, y, label, ha="right", va="center", fontsize=8)
    ns = list(probes_all) + list(probes_clifford)
    ax.set_xlim(-0.5 - max(1, max(ns, default=1)) * 0.6, max(ns, default=1) + 0.5)
    ax.set_yticks([])
    ax.set_xlabel("number of rounded Rz gates probed")
    ax.set_title("feasibility probes (o pass, x fail)")
    _save(fig, path)


def plot_blocks(rz_before, rz_after, path) -> None:
    """Per-block Rz counts before and after rounding."""
    idx = np.arange(len(rz_before))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.bar(idx - 0.2, rz_before, width=0.4, label="before", color="0.7")
    ax.bar(idx + 0.2, rz_after, width=0.4, label="after", color="tab:blue")
    ax.set_xlabel("block")
    ax.set_ylabel("Rz gates")
    ax.legend(frameon=False)
    _save(fig, path)
