"""Closed-form speedup predictions and the displacement permutation sweep.

All formulas are evaluated in exact rational arithmetic so acceptance
comparisons never hinge on rounding; callers convert to float for reports.

The model: a stencil of n tasks is executed k times (once per cell). The
displacement delta is how many of a cell's interactions must finish before
the interaction shared with the next x-neighbor can run, so the whole
sweep serializes into a chain of roughly delta*k tasks:

    speedup(delta, k, n) = n*k / (n + delta*(k - 1))      -> n/delta as k grows

With delta = 1 the sweep degenerates into a pipeline whose depth is the
stencil size.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .schedsim import SimResult
from .taskgen import StencilOrder, displacement, intra_first_orders, order_with_displacement


@dataclass(frozen=True)
class AnalyticModel:
    """delta: stencil displacement; k: stencil executions for the whole
    domain (= cell count); n: tasks per stencil."""

    delta: int
    k: int
    n: int

    def __post_init__(self) -> None:
        if not 1 <= self.delta <= self.n:
            raise ValueError(f"delta must be in [1, n={self.n}], got {self.delta}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def speedup_stencil(model: AnalyticModel) -> Fraction:
    """Finite-domain speedup n*k / (n + delta*(k-1))."""
    return Fraction(model.n * model.k, model.n + model.delta * (model.k - 1))


def speedup_max(delta: int, n: int) -> Fraction:
    """Large-domain limit n/delta."""
    if not 1 <= delta <= n:
        raise ValueError(f"delta must be in [1, n={n}], got {delta}")
    return Fraction(n, delta)


def speedup_pipeline(n: int, k: int) -> Fraction:
    """Pipeline speedup n*k / (n + k - 1): n operations through a pipeline
    of depth k (the stencil size: 5 in 2D, 14 in 3D)."""
    if n < 1 or k < 1:
        raise ValueError(f"n and k must be >= 1, got n={n}, k={k}")
    return Fraction(n * k, n + k - 1)


def speedup_capped(model: AnalyticModel, workers: int) -> Fraction:
    """Predicted plateau under a worker limit: min(workers, eq-2 value)."""
    return min(Fraction(workers), speedup_stencil(model))


@dataclass(frozen=True)
class SweepEntry:
    order: StencilOrder
    delta: int
    s_max: Fraction


def permutation_sweep(dim: int = 2) -> list[SweepEntry]:
    """Delta and n/delta for every intra-first order; 4! = 24 rows in 2D.

    The 3D space (13!) is enumerated by `sampled_permutation_sweep`
    instead."""
    if dim != 2:
        raise ValueError("exhaustive sweep is 2D only; use sampled_permutation_sweep for 3D")
    out = []
    for order in intra_first_orders(dim):
        d = displacement(order)
        out.append(SweepEntry(order, d, speedup_max(d, order.n)))
    return out


def sampled_permutation_sweep(dim: int = 3, count: int = 1000, seed: int = 0) -> list[SweepEntry]:
    """Random intra-first orders plus the two extremal ones (+x right after
    intra, and +x last), so the delta range [2, n] is always exhibited."""
    rng = random.Random(seed)
    base = StencilOrder.canonical(dim)
    zero, inter = base.offsets[0], list(base.offsets[1:])
    orders = [order_with_displacement(dim, 2), order_with_displacement(dim, base.n)]
    for _ in range(count):
        perm = inter[:]
        rng.shuffle(perm)
        orders.append(StencilOrder((zero, *perm)))
    out = []
    for order in orders:
        d = displacement(order)
        out.append(SweepEntry(order, d, speedup_max(d, order.n)))
    return out


def delta_histogram(entries: list[SweepEntry]) -> dict[int, int]:
    return dict(sorted(Counter(e.delta for e in entries).items()))


@dataclass(frozen=True)
class ComparisonReport:
    """Prediction vs measurement with a pass/fail verdict."""

    predicted: float
    measured: float
    rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.rel_error <= self.tolerance


def compare(
    model: AnalyticModel,
    measured: SimResult,
    tolerance: float = 0.05,
    workers: int | None = None,
) -> ComparisonReport:
    """Relative error of the measured speedup against the prediction
    (capped at the worker count when one is given)."""
    predicted = speedup_capped(model, workers) if workers else speedup_stencil(model)
    predicted_f = float(predicted)
    rel = abs(measured.speedup - predicted_f) / predicted_f
    return ComparisonReport(predicted_f, measured.speedup, rel, tolerance)
