"""Command-line interface: ``ftswitch run|validate|paths``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .dot import export_dot
from .report import report_csv, report_json
from .scenario import (
    BUNDLED,
    Scenario,
    ScenarioError,
    ScenarioValidationError,
    bundled_text,
    parse_scenario,
)
from .simulation import run_scenario
from .topology import NoBackup, NoPath, TopologyError, disjoint_backup, equal_cost_paths, shortest_path

log = logging.getLogger("ftswitch")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2


def _read_scenario(ref: str) -> Scenario:
    """Load a scenario from a path, or by bundled name (``testcase1`` ...)."""
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            text = fh.read()
    elif ref in BUNDLED:
        text = bundled_text(ref)
    else:
        raise FileNotFoundError(f"scenario file not found: {ref}")
    return parse_scenario(text)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _report_errors(exc: Exception) -> None:
    if isinstance(exc, ScenarioValidationError):
        for problem in exc.errors:
            print(f"error: {problem}", file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = _read_scenario(args.scenario)
    except (OSError, ScenarioError) as exc:
        _report_errors(exc)
        return EXIT_INVALID
    scenario = scenario.with_overrides(seed=args.seed, duration_ms=args.duration)
    result = run_scenario(scenario)
    report = result.report
    if args.report_json:
        _write(args.report_json, report_json(report))
    if args.report_csv:
        _write(args.report_csv, report_csv(report))
    if args.dot:
        _write(args.dot, export_dot(result.topology, result.statuses, name=scenario.name))
    if args.event_log:
        _write(args.event_log, result.event_log())
    if not args.report_json:
        sys.stdout.write(report_json(report))
    else:
        mttr = "-" if report.mttr_ms is None else f"{report.mttr_ms} ms"
        print(
            f"{scenario.name}: loss {report.loss_rate_percent}% "
            f"mttr {mttr} success {report.success_rate_percent}%"
        )
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        scenario = _read_scenario(args.scenario)
    except (OSError, ScenarioError) as exc:
        _report_errors(exc)
        return EXIT_INVALID
    print(
        f"ok: {scenario.name} ({len(scenario.nodes)} nodes, {len(scenario.links)} links, "
        f"{len(scenario.flows)} flows, {len(scenario.faults)} faults)"
    )
    return EXIT_OK


def _fmt(path) -> str:
    return f"{path} (cost {path.cost})"


def cmd_paths(args: argparse.Namespace) -> int:
    try:
        scenario = _read_scenario(args.scenario)
    except (OSError, ScenarioError) as exc:
        _report_errors(exc)
        return EXIT_INVALID
    topo = scenario.topology()
    for node_id in (args.src, args.dst):
        if node_id not in topo.nodes:
            print(f"error: unknown node {node_id!r}", file=sys.stderr)
            return EXIT_INVALID
    try:
        primary = shortest_path(topo, args.src, args.dst)
    except NoPath:
        print(f"no path from {args.src} to {args.dst}")
        return EXIT_OK
    print(f"shortest: {_fmt(primary)}")
    ecmp = equal_cost_paths(topo, args.src, args.dst)
    print(f"equal-cost paths: {len(ecmp)}")
    for path in ecmp:
        print(f"  {_fmt(path)}")
    try:
        print(f"backup: {_fmt(disjoint_backup(topo, primary))}")
    except NoBackup:
        print("backup: none")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftswitch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write reports")
    run.add_argument("scenario", help="scenario JSON file or bundled name")
    run.add_argument("--seed", type=int)
    run.add_argument("--duration", type=int, metavar="MS")
    run.add_argument("--report-json", metavar="PATH")
    run.add_argument("--report-csv", metavar="PATH")
    run.add_argument("--dot", metavar="PATH")
    run.add_argument("--event-log", metavar="PATH")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="check a scenario file")
    validate.add_argument("scenario")
    validate.set_defaults(func=cmd_validate)

    paths = sub.add_parser("paths", help="show shortest, equal-cost and backup paths")
    paths.add_argument("scenario")
    paths.add_argument("--from", dest="src", required=True, metavar="ID")
    paths.add_argument("--to", dest="dst", required=True, metavar="ID")
    paths.set_defaults(func=cmd_paths)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (TopologyError, ScenarioError) as exc:
        _report_errors(exc)
        return EXIT_INVALID
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
