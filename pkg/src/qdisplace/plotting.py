"""Figures written next to the CLI reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from qdisplace.bases import ALL_LABELS, BasisFamily, basis_matrix, basis_state_names  # noqa: E402

DPI = 120


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def _label_names():
    return [str(label) for label in ALL_LABELS]


def plot_basis_signs(family: BasisFamily, path: Path) -> Path:
    m = basis_matrix(family).real
    fig, ax = plt.subplots(figsize=(7.5, 6))
    im = ax.imshow(m, cmap="RdBu_r", vmin=-0.5, vmax=0.5)
    ax.set_xticks(range(16), basis_state_names(family), rotation=90, fontsize=7)
    ax.set_yticks(range(16), _label_names(), fontsize=7)
    ax.set_title(f"{family.value} amplitudes")
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)


def plot_outcome_histogram(counts: Sequence[int], path: Path, title: str = "") -> Path:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    expected = n / 16
    sigma = np.sqrt(n * (1 / 16) * (15 / 16))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(range(16), counts, color="0.55")
    ax.axhline(expected, color="k", lw=1)
    ax.axhspan(expected - 5 * sigma, expected + 5 * sigma, color="tab:blue", alpha=0.12, lw=0)
    ax.set_xticks(range(16), _label_names(), rotation=60, fontsize=8)
    ax.set_ylabel("count")
    ax.set_title(title or f"outcome counts, n = {int(n)} (band: 5 sigma)")
    return _save(fig, path)


def plot_pairing_matrix(coefficients: np.ndarray, path: Path, title: str = "") -> Path:
    c = np.real(coefficients)
    fig, ax = plt.subplots(figsize=(6, 5.5))
    im = ax.imshow(c, cmap="RdBu_r", vmin=-0.25, vmax=0.25)
    ax.set_xticks(range(16), _label_names(), rotation=90, fontsize=7)
    ax.set_yticks(range(16), _label_names(), fontsize=7)
    ax.set_xlabel("retained-pair basis vector")
    ax.set_ylabel("measured basis vector")
    ax.set_title(title or "swap expansion coefficients")
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)


def plot_deficit_curve(points: Sequence[tuple[float, float]], path: Path) -> Path:
    s = np.linspace(0.0, 1.0, 201)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(s, s - s * s, color="k", lw=1, label="s - s^2")
    if points:
        xs, ys = zip(*points)
        ax.plot(xs, ys, "o", color="tab:red", label="computed")
    ax.set_xlabel("overlap s")
    ax.set_ylabel("deficit")
    ax.legend(frameon=False)
    return _save(fig, path)
