"""cellsched: a laboratory for serialization effects in dependency-driven
task-parallel stencil sweeps.

Generates link-cell interaction task streams under several strategies,
detects dependencies the way an inout-tracking runtime would, predicts and
simulates speedup, executes graphs on real threads, and verifies that all
strategies compute identical results.
"""

from .analytics import (
    AnalyticModel,
    ComparisonReport,
    compare,
    delta_histogram,
    permutation_sweep,
    sampled_permutation_sweep,
    speedup_capped,
    speedup_max,
    speedup_pipeline,
    speedup_stencil,
)
from .depgraph import (
    SpawnRecord,
    TaskGraph,
    critical_path,
    detect_dependencies,
    detect_dependencies_dynamic,
    export_dot,
)
from .executor import ExecConfig, ExecResult, calibrate, duration_sweep, execute, measure_speedup
from .grid import (
    CellId,
    GridSpec,
    Offset,
    Stencil,
    canonical_half_stencil,
    cells_by_color,
    color,
    neighbor,
)
from .payload import (
    apply_tasks,
    charges,
    execute_with_payload,
    intra_contribution,
    pair_contribution,
    reference_oracle,
)
from .schedsim import SimConfig, SimResult, simulate, simulate_dynamic, speedup_curve
from .taskgen import (
    NestedPlan,
    StencilOrder,
    Task,
    bad_order,
    displacement,
    generate,
    generate_basic,
    generate_buffered,
    generate_loopex,
    intra_first_orders,
    naive_order,
    nested_plan,
    opt_order,
    order_with_displacement,
)

__version__ = "0.1.0"
