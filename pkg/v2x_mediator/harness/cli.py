"""Command-line entry point: ``v2x-mediator`` / ``python -m v2x_mediator``.

Exit codes: 0 when no proximity violation occurred, 1 when at least one did,
2 when the scenario or trace could not be loaded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from ..exceptions import MediatorError, ScenarioValidationError
from .scenario import SWEEP_PARAMETERS, bundled_scenarios, load_scenario
from .simulation import run
from .sweep import format_table, sweep
from .trace import compute_metrics, read_trace, write_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT_ERROR = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _parse_values(parameter: str, text: str) -> List:
    values = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        try:
            values.append(int(item) if parameter == "latency_ticks" else float(item))
        except ValueError:
            raise ScenarioValidationError("--values", f"{item!r} is not a valid {parameter} value") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2x-mediator",
        description="Simulate a robot mediating pedestrian crossings with V2X warnings.",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging verbosity on stderr (default: WARNING)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="run one scenario and print its metrics as JSON")
    run_cmd.add_argument("scenario", help=f"scenario file, or a bundled name ({', '.join(bundled_scenarios())})")
    run_cmd.add_argument("--seed", type=int, help="override the scenario seed")
    run_cmd.add_argument("--trace", metavar="PATH", help="write the event trace (JSON lines)")
    run_cmd.add_argument("--metrics", metavar="PATH", help="write the metrics as JSON")
    run_cmd.add_argument("--message-log", metavar="PATH", help="write every broadcast message, encoded")

    sweep_cmd = commands.add_parser("sweep", help="run a scenario across values of one parameter")
    sweep_cmd.add_argument("scenario")
    sweep_cmd.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    sweep_cmd.add_argument("--values", required=True, help="comma-separated list, e.g. 0,0.5,1")
    sweep_cmd.add_argument("--seed", type=int, help="override the scenario seed")
    sweep_cmd.add_argument("--workers", type=int, default=1, help="parallel runs (default: 1)")

    validate_cmd = commands.add_parser("validate", help="load and validate a scenario")
    validate_cmd.add_argument("scenario")

    replay_cmd = commands.add_parser("replay", help="recompute metrics from a trace file")
    replay_cmd.add_argument("trace")
    return parser


def _print_json(data):
    print(json.dumps(data, indent=2))


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    events, metrics = run(scenario, message_log=args.message_log)
    if args.trace:
        write_trace(args.trace, events)
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8") as f:
            json.dump(metrics.to_dict(), f, indent=2)
            f.write("\n")
    _print_json(metrics.to_dict())
    return EXIT_VIOLATIONS if metrics.violations else EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    rows = sweep(scenario, args.param, _parse_values(args.param, args.values), workers=args.workers)
    print(format_table(rows, args.param))
    return EXIT_VIOLATIONS if any(row.metrics.violations for row in rows) else EXIT_OK


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(
        f"ok: {scenario.name} ({len(scenario.vehicles)} vehicles, "
        f"{len(scenario.pedestrians)} pedestrians, {len(scenario.rsus)} rsus, "
        f"{scenario.duration_ticks} ticks)"
    )
    return EXIT_OK


def _cmd_replay(args) -> int:
    metrics = compute_metrics(read_trace(args.trace))
    _print_json(metrics.to_dict())
    return EXIT_VIOLATIONS if metrics.violations else EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "replay": _cmd_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except (MediatorError, OSError) as e:
        logger.error("%s", e)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
