from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

from ..exceptions import ScenarioValidationError
from .scenario import SWEEP_PARAMETERS, Scenario, with_parameter
from .simulation import run
from .trace import MetricsSummary

logger = logging.getLogger(__name__)

Number = Union[int, float]

_COLUMNS = (
    "wait_ticks",
    "completed",
    "denm_count",
    "delivery_ratio",
    "min_distance_m",
    "violations",
)


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: Number
    seed: int
    metrics: MetricsSummary


def _run_point(job: Tuple[Scenario, str, Number, int]) -> SweepRow:
    scenario, parameter, value, seed = job
    _, metrics = run(with_parameter(scenario, parameter, value).with_seed(seed))
    return SweepRow(parameter, value, seed, metrics)


def sweep(scenario: Scenario, parameter: str, values: Sequence[Number], workers: int = 1) -> List[SweepRow]:
    """Run `scenario` once per value of `parameter`.

    The i-th run uses seed ``scenario.seed ^ i``. Rows come back in the order of
    `values` whatever the number of `workers`.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ScenarioValidationError(
            "parameter", f"must be one of {', '.join(SWEEP_PARAMETERS)}, got {parameter!r}"
        )
    jobs = [(scenario, parameter, value, scenario.seed ^ i) for i, value in enumerate(values)]
    for _, _, value, _ in jobs:
        with_parameter(scenario, parameter, value)

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point, jobs))
    else:
        rows = [_run_point(job) for job in jobs]
    logger.info("sweep of %s over %d values finished", parameter, len(rows))
    return rows


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def format_table(rows: Sequence[SweepRow], parameter: str = "value") -> str:
    """Render sweep rows as a fixed-width text table, header first."""
    if rows:
        parameter = rows[0].parameter
    header = (parameter, "seed") + _COLUMNS
    body = []
    for row in rows:
        m = row.metrics
        body.append(tuple(_cell(v) for v in (
            row.value,
            row.seed,
            m.pedestrian_wait_ticks,
            m.crossing_completed,
            m.denm_count,
            m.denm_delivery_ratio,
            m.min_ped_vehicle_distance,
            m.violations,
        )))
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    return "\n".join(
        "  ".join(cell.rjust(width) for cell, width in zip(line, widths)).rstrip()
        for line in [header] + body
    )
