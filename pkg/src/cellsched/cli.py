"""Experiment driver: every capability behind one subcommand.

Exit codes: 0 success, 1 usage error, 2 runtime error. The default output
directory comes from CELLSCHED_OUTDIR (falling back to the working
directory); report commands write a figure next to each CSV unless told
not to.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import analytics, executor, payload, plotting, report, schedsim
from .depgraph import critical_path, detect_dependencies, export_dot
from .grid import GridSpec
from .taskgen import (
    NestedPlan,
    ORDER_PRESETS,
    STRATEGIES,
    StencilOrder,
    displacement,
    generate,
    nested_plan,
    order_with_displacement,
)

_DURATION_UNITS = {"ns": 1, "us": 1_000, "µs": 1_000, "ms": 1_000_000, "s": 1_000_000_000}


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on bad usage; we reserve 2 for
    runtime errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_extents(text: str) -> tuple[int, ...]:
    try:
        extents = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ValueError(f"extents must be comma-separated integers, got {text!r}") from None
    return extents


def parse_workers(text: str) -> list[int]:
    """Accepts '8', '1,2,4' and '1..32', or any comma mix of those."""
    out: list[int] = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out or any(w < 1 for w in out):
        raise ValueError(f"worker counts must be positive, got {text!r}")
    return out


def parse_duration(text: str) -> int:
    text = text.strip()
    for unit, scale in _DURATION_UNITS.items():
        if text.endswith(unit) and (unit != "s" or not text.endswith(("ns", "us", "ms"))):
            return int(float(text[: -len(unit)]) * scale)
    return int(text)  # bare nanoseconds


def parse_order(spec: str | None, dim: int) -> StencilOrder | None:
    """Preset name, 'canonical', 'delta=K', or explicit 'x:y[:z];...'."""
    if spec is None or spec == "":
        return None
    if spec in ORDER_PRESETS:
        if dim != 2:
            raise ValueError(f"order preset {spec!r} is 2D only")
        return ORDER_PRESETS[spec]()
    if spec == "canonical":
        return StencilOrder.canonical(dim)
    if spec.startswith("delta="):
        return order_with_displacement(dim, int(spec[len("delta="):]))
    entries = []
    for part in spec.split(";"):
        entries.append(tuple(int(c) for c in part.split(":")))
    return StencilOrder(tuple(entries))


def _outdir() -> Path:
    return Path(os.environ.get("CELLSCHED_OUTDIR", "."))


def _resolve(path_text: str) -> Path:
    path = Path(path_text)
    return path if path.is_absolute() else _outdir() / path


def _grid_from_args(args) -> GridSpec:
    extents = parse_extents(args.extents)
    if getattr(args, "dim", None) and args.dim != len(extents):
        raise ValueError(f"--dim {args.dim} contradicts --extents {args.extents}")
    return GridSpec(extents, periodic=not args.non_periodic)


def _stream_and_graph(strategy: str, grid: GridSpec, order: StencilOrder | None):
    """(tasks-or-plan, static graph or realized graph at unlimited workers)."""
    stream = generate(strategy, grid, order)
    if isinstance(stream, NestedPlan):
        result = schedsim.simulate_dynamic(stream, schedsim.unlimited_workers(stream))
        return stream, result.graph
    return stream, detect_dependencies(stream)


# ----------------------------------------------------------------------
# subcommands


def cmd_predict(args) -> int:
    if args.pipeline:
        value = analytics.speedup_pipeline(args.n, int(args.k))
    elif args.k == "inf" or args.k == float("inf"):
        value = analytics.speedup_max(args.delta, args.n)
    else:
        model = analytics.AnalyticModel(args.delta, int(args.k), args.n)
        value = analytics.speedup_stencil(model)
    if value.denominator == 1:
        print(value.numerator)
    else:
        print(f"{value} = {float(value):.6g}")
    return 0


def cmd_sweep(args) -> int:
    if args.dim == 2:
        entries = analytics.permutation_sweep(2)
    else:
        entries = analytics.sampled_permutation_sweep(3, count=args.samples, seed=args.seed)
    rows = []
    for e in entries:
        rows.append(
            report.make_row(
                "predicted",
                strategy="basic",
                dim=args.dim,
                order=report.encode_order(e.order),
                delta=e.delta,
                tasks=e.order.n,
                speedup=float(e.s_max),
            )
        )
    hist = analytics.delta_histogram(entries)
    print(f"{len(entries)} orders, delta histogram: {hist}")
    if args.output:
        path = report.write_csv(_resolve(args.output), rows)
        print(f"wrote {path}")
        if not args.no_plot:
            fig = plotting.plot_delta_histogram(
                hist, path.with_suffix(".png"), title=f"{args.dim}D displacement histogram"
            )
            print(f"wrote {fig}")
    return 0


def cmd_dag(args) -> int:
    grid = _grid_from_args(args)
    order = parse_order(args.order, grid.dim)
    _, graph = _stream_and_graph(args.strategy, grid, order)
    dot = export_dot(graph, transitive_reduction=args.transitive_reduction)
    path = _resolve(args.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dot)
    print(
        f"wrote {path}: {graph.task_count} tasks, {graph.edge_count} edges, "
        f"critical path {critical_path(graph)}"
    )
    return 0


def cmd_simulate(args) -> int:
    grid = _grid_from_args(args)
    order = parse_order(args.order, grid.dim)
    stream, graph = _stream_and_graph(args.strategy, grid, order)
    subject = stream if isinstance(stream, NestedPlan) else graph
    workers = parse_workers(args.workers)
    delta = None
    if args.strategy == "basic":
        delta = displacement(order if order is not None else StencilOrder.canonical(grid.dim))
    rows = []
    curve = []
    for w, result in schedsim.speedup_curve(subject, workers):
        curve.append((w, result.speedup))
        rows.append(
            report.make_row(
                "simulated",
                strategy=args.strategy,
                grid=grid,
                order=report.order_label(order),
                delta=delta,
                workers=w,
                tasks=result.serial_time,
                makespan=result.makespan,
                speedup=result.speedup,
                utilization=result.utilization,
            )
        )
        print(f"W={w:>3}  makespan={result.makespan:>7}  speedup={result.speedup:.3f}")
    if args.output:
        path = report.write_csv(_resolve(args.output), rows)
        print(f"wrote {path}")
        if not args.no_plot:
            fig = plotting.plot_speedup_curves(
                {args.strategy: curve},
                path.with_suffix(".png"),
                title=f"{args.strategy} on {grid.extents}",
            )
            print(f"wrote {fig}")
    return 0


def cmd_execute(args) -> int:
    grid = _grid_from_args(args)
    order = parse_order(args.order, grid.dim)
    stream, graph = _stream_and_graph(args.strategy, grid, order)
    subject = stream if isinstance(stream, NestedPlan) else graph
    duration = parse_duration(args.duration)
    rows = []
    curve = []
    import statistics

    for threads in parse_workers(args.threads):
        walls = []
        count = 0
        for _ in range(args.reps):
            cfg = executor.ExecConfig(threads, duration, payload_seed=args.seed)
            result = executor.execute(subject, cfg, grid)
            walls.append(result.wall_ns)
            count = result.task_count
        wall = statistics.median(walls)
        effective = (count * duration) / max(wall, 1)
        rows.append(
            report.make_row(
                "executed",
                strategy=args.strategy,
                grid=grid,
                order=report.order_label(order),
                workers=threads,
                tasks=count,
                makespan=int(wall),
                speedup=effective,
                utilization=effective / threads,
                duration_ns=duration,
                seed=args.seed,
            )
        )
        curve.append((threads, effective))
        print(
            f"threads={threads:>2}  wall={wall / 1e6:.1f} ms  "
            f"effective-parallelism={effective:.2f}  efficiency={effective / threads:.1%}"
        )
    if args.output:
        path = report.write_csv(_resolve(args.output), rows)
        print(f"wrote {path}")
        if not args.no_plot:
            fig = plotting.plot_speedup_curves(
                {args.strategy: curve},
                path.with_suffix(".png"),
                title=f"executed {args.strategy} on {grid.extents}, {duration} ns tasks",
            )
            print(f"wrote {fig}")
    return 0


def cmd_oracle(args) -> int:
    grid = _grid_from_args(args)
    expected = payload.reference_oracle(grid, args.seed)
    if args.dump_dir:
        report.write_accumulators(_resolve(args.dump_dir) / "oracle.csv", expected)
    configs = [("basic", StencilOrder.canonical(grid.dim))]
    if grid.dim == 2:
        configs += [("basic", ORDER_PRESETS[p]()) for p in ("naive", "bad", "opt")]
    configs += [("loopex", None), ("buffered", None), ("nested", None)]
    failures = 0
    for strategy, order in configs:
        acc = payload.execute_with_payload(strategy, grid, args.seed, order=order)
        label = strategy if order is None else f"{strategy}[{report.order_label(order)}]"
        ok = acc == expected
        conserved = payload.conservation_defect(acc, grid, args.seed) == 0
        status = "OK" if ok and conserved else "MISMATCH"
        failures += 0 if ok and conserved else 1
        print(f"{label:<24} {status}")
        if args.dump_dir:
            safe = label.replace("[", "_").replace("]", "").replace(";", "_").replace(":", "")
            report.write_accumulators(_resolve(args.dump_dir) / f"{safe}.csv", acc)
    if failures:
        raise RuntimeError(f"{failures} strategy run(s) diverged from the reference oracle")
    print(f"all {len(configs)} runs match the reference oracle on {grid.extents}, seed {args.seed}")
    return 0


# ----------------------------------------------------------------------
# canned reproduction recipes


def _repro_scaling(name: str, grid: GridSpec, orders: dict[str, StencilOrder], workers, outdir: Path) -> None:
    curves: dict[str, list[tuple[int, float]]] = {}
    rows = []
    summary = []
    for label, order in orders.items():
        graph = detect_dependencies(generate("basic", grid, order))
        delta = displacement(order)
        model = analytics.AnalyticModel(delta, grid.cell_count, order.n)
        curve = []
        for w, result in schedsim.speedup_curve(graph, workers):
            curve.append((w, result.speedup))
            rows.append(
                report.make_row(
                    "simulated", strategy="basic", grid=grid, order=report.order_label(order),
                    delta=delta, workers=w, tasks=result.serial_time,
                    makespan=result.makespan, speedup=result.speedup,
                    utilization=result.utilization,
                )
            )
        curves[f"basic-{label}"] = curve
        cmp = analytics.compare(model, result, workers=max(workers))
        summary.append(
            f"basic-{label} (delta={delta}): measured {cmp.measured:.4f} vs predicted "
            f"{cmp.predicted:.4f}, rel err {cmp.rel_error:.2%} "
            f"({'PASS' if cmp.passed else 'FAIL'} at {cmp.tolerance:.0%})"
        )
    for strategy in ("loopex", "nested"):
        stream, graph = _stream_and_graph(strategy, grid, None)
        subject = stream if isinstance(stream, NestedPlan) else graph
        curve = []
        for w, result in schedsim.speedup_curve(subject, workers):
            curve.append((w, result.speedup))
            rows.append(
                report.make_row(
                    "simulated", strategy=strategy, grid=grid, workers=w,
                    tasks=result.serial_time, makespan=result.makespan,
                    speedup=result.speedup, utilization=result.utilization,
                )
            )
        curves[strategy] = curve
        summary.append(
            f"{strategy}: speedup {result.speedup:.2f} at W={max(workers)} "
            f"({result.speedup / max(workers):.1%} of ideal)"
        )
    csv_path = report.write_csv(outdir / f"{name}.csv", rows)
    fig_path = plotting.plot_speedup_curves(curves, outdir / f"{name}.png", title=name)
    summary_path = outdir / f"{name}-summary.txt"
    summary_path.write_text("\n".join(summary) + "\n")
    for line in summary:
        print(line)
    print(f"wrote {csv_path}, {fig_path}, {summary_path}")


def _repro_duration(grid: GridSpec, threads: int, durations: list[int], reps: int, outdir: Path) -> None:
    graph = detect_dependencies(generate("loopex", grid, None))
    points, knee = executor.duration_sweep(graph, durations, threads, grid=grid, repetitions=reps)
    rows = [
        report.make_row(
            "executed", strategy="loopex", grid=grid, workers=threads,
            tasks=graph.task_count, makespan=int(p.wall_ns),
            speedup=p.efficiency * threads, utilization=p.efficiency,
            duration_ns=p.duration_ns,
        )
        for p in points
    ]
    csv_path = report.write_csv(outdir / "fig5.csv", rows)
    fig_path = plotting.plot_duration_sweep(
        [(p.duration_ns, p.efficiency) for p in points],
        outdir / "fig5.png",
        title=f"loopex {grid.extents}, {threads} threads",
    )
    lines = [
        f"duration {p.duration_ns:>12} ns: wall {p.wall_ns / 1e6:10.1f} ms, efficiency {p.efficiency:.1%}"
        for p in points
    ]
    lines.append(
        f"smallest duration with >=90% efficiency: {knee if knee is not None else 'none observed'}"
    )
    summary_path = outdir / "fig5-summary.txt"
    summary_path.write_text("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    print(f"wrote {csv_path}, {fig_path}, {summary_path}")


def cmd_repro(args) -> int:
    outdir = _resolve(args.output) if args.output else _outdir()
    outdir.mkdir(parents=True, exist_ok=True)
    workers = parse_workers(args.workers)
    if args.recipe == "fig7-2d":
        orders = {"bad": ORDER_PRESETS["bad"](), "opt": ORDER_PRESETS["opt"]()}
        _repro_scaling("fig7-2d", GridSpec((50, 50)), orders, workers, outdir)
    elif args.recipe == "fig7-3d":
        orders = {
            "bad": order_with_displacement(3, 14),
            "opt": order_with_displacement(3, 1),
        }
        _repro_scaling("fig7-3d", GridSpec((30, 10, 10)), orders, workers, outdir)
    elif args.recipe == "fig5":
        durations = (
            [parse_duration(d) for d in args.durations.split(",")]
            if args.durations
            else [100, 1_000, 10_000, 100_000, 1_000_000, 10_000_000]
        )
        _repro_duration(
            GridSpec(parse_extents(args.extents)), args.threads, durations, args.reps, outdir
        )
    else:
        raise ValueError(f"unknown recipe {args.recipe!r}")
    return 0


# ----------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="cellsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", parents=[], help="closed-form speedup value")
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", default="inf", help="domain size, or 'inf' for the limit")
    p.add_argument("--pipeline", action="store_true", help="pipeline formula instead")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="displacement of every per-cell order")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--samples", type=int, default=1000, help="3D sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    def add_domain(p, strategy=True):
        p.add_argument("--extents", required=True, help="e.g. 50,50 or 30,10,10")
        p.add_argument("--dim", type=int, choices=(2, 3), help="optional consistency check")
        p.add_argument("--non-periodic", action="store_true")
        if strategy:
            p.add_argument("--strategy", choices=STRATEGIES, default="basic")
            p.add_argument("--order", help="naive|bad|opt|canonical|delta=K|x:y;x:y;...")

    p = sub.add_parser("dag", help="build a task stream, detect dependencies, export DOT")
    add_domain(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--transitive-reduction", action="store_true")
    p.set_defaults(func=cmd_dag)

    p = sub.add_parser("simulate", help="discrete-time schedule on W workers")
    add_domain(p)
    p.add_argument("--workers", default="1..32")
    p.add_argument("-o", "--output")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("execute", help="real threaded execution with busy-work tasks")
    add_domain(p)
    p.add_argument("--threads", default="8")
    p.add_argument("--duration", default="1ms", help="per-task busy time, e.g. 10ms, 100ns")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, help="apply the integer payload with this seed")
    p.add_argument("-o", "--output")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_execute)

    p = sub.add_parser("oracle", help="cross-strategy accumulator diff")
    add_domain(p, strategy=False)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dump-dir", help="write per-run accumulator CSVs here")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("repro", help="canned experiment recipes")
    p.add_argument("recipe", choices=("fig7-2d", "fig7-3d", "fig5"))
    p.add_argument("--workers", default="1..32")
    p.add_argument("--threads", type=int, default=8, help="fig5 only")
    p.add_argument("--extents", default="20,20", help="fig5 only")
    p.add_argument("--durations", help="fig5 only: comma list, e.g. 100ns,1ms")
    p.add_argument("--reps", type=int, default=3, help="fig5 only")
    p.add_argument("-o", "--output", help="output directory")
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"cellsched: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
