"""Command-line entry points.

Exit codes: 0 success / gate pass, 1 gate fail, 2 error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .certification import (
    BUILTIN_CRITERIA,
    LedgerWriter,
    evaluate_stage,
    load_campaign,
    load_ledger,
    run_campaign,
    run_scenario,
    write_report,
)
from .kinematics import InfeasibleBudget, TimingBudget, ZeroRelativeSpeed, min_update_rate
from .navigation import NoPathFound
from .scenario import STAGES, ScenarioLoadError, load_scenario

EXIT_OK = 0
EXIT_GATE_FAIL = 1
EXIT_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="masssim",
        description="Deterministic certification-campaign simulator for autonomous surface vessels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenario files and print per-run summaries")
    p_run.add_argument("scenarios", nargs="+", metavar="scenario-file")
    p_run.add_argument("--ledger", help="append results to this ledger file")

    p_campaign = sub.add_parser("campaign", help="run a campaign file end to end")
    p_campaign.add_argument("campaign", metavar="campaign-file")

    p_gate = sub.add_parser("gate", help="evaluate a ledger against a stage gate")
    p_gate.add_argument("ledger", metavar="ledger-file")
    p_gate.add_argument("--stage", required=True, choices=STAGES)

    p_report = sub.add_parser("report", help="emit a report document from a ledger")
    p_report.add_argument("ledger", metavar="ledger-file")
    p_report.add_argument("-o", "--output", required=True)

    p_serve = sub.add_parser("serve", help="serve the operator console for a live run")
    p_serve.add_argument("scenario", metavar="scenario-file")
    p_serve.add_argument("--listen", default="127.0.0.1:8000")
    p_serve.add_argument("--token", default=None, help="static bearer token")
    p_serve.add_argument(
        "--realtime-factor",
        type=float,
        default=1.0,
        help="simulated seconds per wall second; 0 runs unpaced",
    )
    p_serve.add_argument(
        "--static-dir",
        default=None,
        help="serve this directory at / (e.g. the built operator console)",
    )

    p_timing = sub.add_parser("timing", help="print the reaction-time budget result")
    p_timing.add_argument("budget", metavar="budget-file")

    return parser


def _cmd_run(args) -> int:
    writer = LedgerWriter(args.ledger) if args.ledger else None
    for path in args.scenarios:
        spec = load_scenario(path)
        result = run_scenario(spec)
        print(
            f"{spec.id}: {result.outcome} miles={result.miles:.4f} "
            f"violations={len(result.violations)} "
            f"failover_events={len(result.failover_events)} "
            f"steps={result.total_steps}"
        )
        if writer is not None:
            writer.record(result)
    if writer is not None:
        print(f"ledger updated: {args.ledger}")
    return EXIT_OK


def _cmd_campaign(args) -> int:
    plan = load_campaign(args.campaign)
    ledger, decision = run_campaign(plan)
    print(
        f"campaign: {len(ledger.runs)} runs, {ledger.total_miles:.4f} nmi, "
        f"stage {decision.stage}: {'PASS' if decision.passed else 'FAIL'}"
    )
    if not decision.passed:
        print("unmet criteria: " + ", ".join(decision.unmet))
    return EXIT_OK if decision.passed else EXIT_GATE_FAIL


def _cmd_gate(args) -> int:
    ledger = load_ledger(args.ledger)
    decision = evaluate_stage(ledger, BUILTIN_CRITERIA[args.stage])
    verdict = "PASS" if decision.passed else "FAIL"
    print(f"stage {args.stage}: {verdict}")
    m = decision.metrics
    print(
        f"  miles={m.miles:.3f} ports={m.port_operations} collisions={m.collision_count} "
        f"nav_err={m.nav_error_rate:.6f} fail={m.system_failure_rate:.6f} "
        f"avail={m.availability:.6f}"
    )
    if not decision.passed:
        print("  unmet: " + ", ".join(decision.unmet))
    return EXIT_OK if decision.passed else EXIT_GATE_FAIL


def _cmd_report(args) -> int:
    ledger = load_ledger(args.ledger)
    decisions = [
        evaluate_stage(ledger, BUILTIN_CRITERIA[stage]) for stage in STAGES
    ]
    summary = write_report(ledger, decisions, args.output)
    print(summary)
    print(f"report written: {args.output}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .console import serve
    from .simulation import Simulation

    spec = load_scenario(args.scenario)
    sim = Simulation(spec)
    static_dir = args.static_dir
    if static_dir is None:
        bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        if bundled.is_dir():
            static_dir = str(bundled)
    print(f"serving scenario {spec.id!r} on {args.listen}")
    serve(
        sim,
        listen=args.listen,
        token=args.token,
        realtime_factor=args.realtime_factor,
        static_dir=static_dir,
    )
    return EXIT_OK


def _cmd_timing(args) -> int:
    path = Path(args.budget)
    if not path.exists():
        raise ScenarioLoadError(f"budget file not found: {path}")
    data = yaml.safe_load(path.read_text())
    if not isinstance(data, dict):
        raise ScenarioLoadError("budget file must be a mapping of budget fields")
    budget = TimingBudget(**data)
    result = min_update_rate(budget)
    print(f"t_sys_response  : {result.t_sys_response:.6f} s")
    print(f"t_available     : {result.t_available:.6f} s")
    print(f"margin          : {result.margin:.6f} s")
    print(f"min_update_rate : {result.min_update_rate:.6f} Hz")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "campaign": _cmd_campaign,
        "gate": _cmd_gate,
        "report": _cmd_report,
        "serve": _cmd_serve,
        "timing": _cmd_timing,
    }
    try:
        return handlers[args.command](args)
    except (
        ScenarioLoadError,
        InfeasibleBudget,
        ZeroRelativeSpeed,
        NoPathFound,
        FileNotFoundError,
        ValueError,
        TypeError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
