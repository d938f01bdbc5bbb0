from .scenario import (
    SWEEP_PARAMETERS,
    RobotSetup,
    Scenario,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
    resolve_scenario_path,
    scenario_from_dict,
    with_parameter,
)
from .simulation import Simulation, run
from .sweep import SweepRow, format_table, sweep
from .trace import (
    EventKind,
    MetricsSummary,
    TraceEvent,
    compute_metrics,
    read_trace,
    write_trace,
)

__all__ = [
    "SWEEP_PARAMETERS",
    "RobotSetup",
    "Scenario",
    "bundled_scenarios",
    "load_scenario",
    "parse_scenario",
    "resolve_scenario_path",
    "scenario_from_dict",
    "with_parameter",
    "Simulation",
    "run",
    "SweepRow",
    "format_table",
    "sweep",
    "EventKind",
    "MetricsSummary",
    "TraceEvent",
    "compute_metrics",
    "read_trace",
    "write_trace",
]
