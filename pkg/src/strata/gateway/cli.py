"""Command-line entry point.

Exit codes: 0 success, 2 scenario/knowledge validation error, 3 runtime
fault.
"""
from __future__ import annotations

import argparse
import json
import sys

from strata.gateway.config import ScenarioValidationError, load_scenario_config
from strata.gateway.runner import default_trace_path, run
from strata.gateway.trace import (
    TracePersistenceError,
    audit_trace,
    goal_ids_in_trace,
    thoughts_from_trace,
)
from strata.kb.kbase import KbValidationError
from strata.kb.loader import KbParseError
from strata.strategic.explain import UnknownTarget, explain


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strata",
        description="Run a dual-layer robot team scenario (headless or served).",
    )
    parser.add_argument("--scenario", required=True, help="scenario file path")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--headless", action="store_true", help="run to completion, no server")
    mode.add_argument("--serve", type=int, metavar="PORT", help="serve the run on a WebSocket port")
    parser.add_argument("--max-ticks", type=int, default=None, help="override max ticks")
    parser.add_argument("--trace-out", default=None, help="trace JSONL output path")
    parser.add_argument("--speed", type=float, default=1.0, help="serve-mode speed multiplier")
    parser.add_argument("--audit", action="store_true", help="audit the trace after the run")
    parser.add_argument(
        "--explain", action="store_true",
        help="print a causal explanation of every goal in the trace after the run",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_scenario_config(args.scenario)
        if args.seed is not None:
            config.seed = args.seed
        if args.max_ticks is not None:
            config.max_ticks = args.max_ticks
        config.validate()
        trace_path = args.trace_out or default_trace_path(config)
        if args.serve is not None:
            summary = run(config, mode="serve", port=args.serve,
                          trace_path=trace_path, speed=args.speed)
        else:
            summary = run(config, mode="headless", trace_path=trace_path)
    except (ScenarioValidationError, KbValidationError, KbParseError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except TracePersistenceError as exc:
        print(f"trace persistence error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # runtime fault
        print(f"runtime fault: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary.to_payload(), indent=2))
    if args.audit:
        report = audit_trace(summary.trace_path)
        status = "clean" if report.ok else f"{len(report.violations)} violations"
        print(f"audit: {status}")
        for violation in report.violations:
            print(f"  - {violation}")
        if not report.ok:
            return 3
    if args.explain:
        thoughts = thoughts_from_trace(summary.trace_path)
        for goal_id in goal_ids_in_trace(summary.trace_path):
            try:
                print(f"\n== {goal_id}\n{explain(goal_id, thoughts)}")
            except UnknownTarget:
                continue
    return 0


if __name__ == "__main__":
    sys.exit(main())
