"""Headless figure rendering for the report paths.

Figures land next to the CSV output; nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def plot_speedup_curves(
    curves: dict[str, list[tuple[int, float]]],
    path: str | Path,
    title: str = "",
) -> Path:
    """Speedup vs. worker count, one line per labeled configuration, with
    the ideal diagonal for reference."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    w_max = 1
    for label, points in curves.items():
        ws = [w for w, _ in points]
        ss = [s for _, s in points]
        w_max = max(w_max, max(ws))
        ax.plot(ws, ss, marker="o", markersize=3, label=label)
    ax.plot([1, w_max], [1, w_max], linestyle="--", color="gray", linewidth=1, label="ideal")
    ax.set_xlabel("workers")
    ax.set_ylabel("speedup")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_duration_sweep(
    points: list[tuple[int, float]],
    path: str | Path,
    title: str = "",
) -> Path:
    """Efficiency vs. per-task duration on a log duration axis."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    durations = [d for d, _ in points]
    effs = [e for _, e in points]
    ax.semilogx(durations, effs, marker="o")
    ax.set_xlabel("task duration [ns]")
    ax.set_ylabel("efficiency")
    ax.set_ylim(0, 1.05)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_delta_histogram(hist: dict[int, int], path: str | Path, title: str = "") -> Path:
    """Order count per displacement value."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    deltas = sorted(hist)
    ax.bar([str(d) for d in deltas], [hist[d] for d in deltas], color="tab:blue")
    ax.set_xlabel("displacement")
    ax.set_ylabel("orders")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
