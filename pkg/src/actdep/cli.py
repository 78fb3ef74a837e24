"""Command line harness for policy bundles.

    actdep validate --policy DIR
        Structural load plus cycle/conflict analysis; exit 0 iff clean.
    actdep decide --policy DIR --source S --activity A
        Full life cycle for one request; prints the decision record.
    actdep simulate --policy DIR [--requests N] [--seed K]
        All bundled requests as interleaved passes, N times over.
    actdep bench --policy DIR [--batches 10,20,30,40] [--reset-state]
        Repeats the first bundled request per batch and reports counters
        and elapsed times per phase.

Exit codes: 0 clean, 1 validation failure or refused request, 2 policy
load error, 3 I/O error. Diagnostics go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .engine import Engine, EngineConfig
from .errors import CycleDetected, PolicyConflict, PolicyError
from .graph import analyze_bundle
from .model import ActivityRequest, BenchReport, BenchRow, PhaseOutcome, PHASES, TraceEvent
from .policy import load_bundle_dir


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actdep", description="dependency-aware activity decisions"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--policy", required=True, help="policy bundle directory")

    p = sub.add_parser("validate", help="check a policy bundle")
    common(p)
    p.add_argument("--json", action="store_true", help="machine-readable report")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decide", help="decide one activity request")
    common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--activity", required=True)
    p.add_argument("--deterministic", action="store_true",
                   help="fixed scheduling and byte-stable output")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace", metavar="PATH",
                   help="write the resolution trace as JSON lines ('-' for stdout)")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("simulate", help="run the bundled requests concurrently")
    common(p)
    p.add_argument("--requests", type=int, default=1, metavar="N",
                   help="replicate the request list N times (default 1)")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace", metavar="PATH")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="counter and timing report")
    common(p)
    p.add_argument("--batches", default="10,20,30,40",
                   help="comma-separated request counts (default 10,20,30,40)")
    p.add_argument("--reset-state", action="store_true",
                   help="restore initial activity states before every request")
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def cmd_validate(args: argparse.Namespace) -> int:
    bundle = load_bundle_dir(args.policy)
    report = analyze_bundle(bundle)
    if args.json:
        print(json.dumps(report.to_record(), indent=2))
    else:
        for line in report.describe():
            print(line)
        print("ok" if report.ok else "invalid")
    return 0 if report.ok else 1


def cmd_decide(args: argparse.Namespace) -> int:
    bundle = load_bundle_dir(args.policy)
    engine = Engine(bundle, EngineConfig(deterministic=args.deterministic, seed=args.seed))
    request = ActivityRequest(source=args.source, activity=args.activity)
    decision = engine.run_lifecycle(request)
    record = decision.to_record(include_elapsed=not args.deterministic)
    print(json.dumps(record, indent=2, sort_keys=True))
    if args.trace:
        _write_trace(args.trace, engine.store.trace)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    bundle = load_bundle_dir(args.policy)
    engine = Engine(bundle, EngineConfig(deterministic=args.deterministic, seed=args.seed))
    decisions = engine.simulate(repeat=args.requests)
    for decision in decisions:
        record = decision.to_record(include_elapsed=not args.deterministic)
        print(json.dumps(record, sort_keys=True))
    if args.trace:
        _write_trace(args.trace, engine.store.trace)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        batches = [int(part) for part in args.batches.split(",") if part.strip()]
    except ValueError:
        print(f"error: bad --batches value {args.batches!r}", file=sys.stderr)
        return 1
    bundle = load_bundle_dir(args.policy)
    if not bundle.requests:
        print("error: bench needs at least one entry in request.json", file=sys.stderr)
        return 1
    engine = Engine(bundle, EngineConfig(deterministic=args.deterministic))
    request = bundle.requests[0]

    report = BenchReport()
    for count in batches:
        engine.reset_state()
        totals = {phase: PhaseOutcome() for phase in PHASES}
        for _ in range(count):
            if args.reset_state:
                engine.reset_state()
            decision = engine.run_lifecycle(request)
            for phase, measured in decision.phases.items():
                totals[phase].ndc += measured.ndc
                totals[phase].ndu += measured.ndu
                totals[phase].elapsed_ms += measured.elapsed_ms
        report.rows.append(BenchRow(request_count=count, phases=totals))

    _print_bench_table(report)
    print()
    for row in report.rows:
        print(json.dumps(row.to_record(), sort_keys=True))
    return 0


def _print_bench_table(report: BenchReport) -> None:
    columns = ["requests"]
    for phase in PHASES:
        columns += [f"{phase}.ndc", f"{phase}.ndu", f"{phase}.ms"]
    rows = []
    for row in report.rows:
        cells = [str(row.request_count)]
        for phase in PHASES:
            measured = row.phases.get(phase, PhaseOutcome())
            cells += [str(measured.ndc), str(measured.ndu), f"{measured.elapsed_ms:.2f}"]
        rows.append(cells)
    widths = [max(len(columns[i]), *(len(r[i]) for r in rows)) if rows else len(columns[i])
              for i in range(len(columns))]
    print("  ".join(name.rjust(widths[i]) for i, name in enumerate(columns)))
    for cells in rows:
        print("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(cells)))


def _write_trace(path: str, events: Sequence[TraceEvent]) -> None:
    lines = "".join(event.to_line() + "\n" for event in events)
    if path == "-":
        sys.stdout.write(lines)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except PolicyError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (CycleDetected, PolicyConflict) as err:
        print(f"refused: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
