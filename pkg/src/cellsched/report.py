"""Flat CSV schema shared by predictions, simulations, and executions.

One row per (configuration, worker count). The same fifteen columns serve
every experiment so downstream plotting never needs schema switches;
fields that do not apply stay empty.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .grid import GridSpec
from .taskgen import ORDER_PRESETS, StencilOrder

CSV_COLUMNS = (
    "kind",
    "strategy",
    "dim",
    "ex",
    "ey",
    "ez",
    "order",
    "delta",
    "workers",
    "tasks",
    "makespan",
    "speedup",
    "utilization",
    "duration_ns",
    "seed",
)


def encode_order(order: StencilOrder) -> str:
    """Comma-free text form: entries joined by ';', components by ':'."""
    return ";".join(":".join(str(c) for c in off) for off in order.offsets)


def order_label(order: StencilOrder | None) -> str:
    """Preset name when the order matches one, else the encoded entries."""
    if order is None:
        return ""
    for name, preset in ORDER_PRESETS.items():
        if order.dim == 2 and order == preset():
            return name
    if order == StencilOrder.canonical(order.dim):
        return "canonical"
    return encode_order(order)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def make_row(
    kind: str,
    strategy: str = "",
    grid: GridSpec | None = None,
    dim: int | None = None,
    order: str = "",
    delta: int | None = None,
    workers: int | None = None,
    tasks: int | None = None,
    makespan: int | None = None,
    speedup: float | None = None,
    utilization: float | None = None,
    duration_ns: int | None = None,
    seed: int | None = None,
) -> list[str]:
    ex = ey = ez = None
    if grid is not None:
        dim = grid.dim
        ex, ey = grid.extents[0], grid.extents[1]
        ez = grid.extents[2] if grid.dim == 3 else 1
    values = (
        kind, strategy, dim, ex, ey, ez, order, delta, workers,
        tasks, makespan, speedup, utilization, duration_ns, seed,
    )
    return [_fmt(v) for v in values]


def write_csv(path: str | Path, rows: list[list[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)
    return path


def write_accumulators(path: str | Path, acc: dict[int, int]) -> Path:
    """Per-cell accumulator dump, diffable across strategies."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("cell", "accumulator"))
        for cell in sorted(acc):
            writer.writerow((cell, acc[cell]))
    return path
