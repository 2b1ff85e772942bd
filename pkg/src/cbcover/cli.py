"""``cbcover`` command line: validate, sequences, coverage, simulate, report."""

from __future__ import annotations

import argparse
import json
import sys
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Sequence

from .ccfa import CcfaError, classify_callbacks, parse_ccfa, validate_ccfa
from .coverage import (
    correlate_bugs,
    coverage_report,
    parse_bugs,
    render_coverage,
    render_series,
    series_to_dict,
    time_series,
)
from .seqgen import GENERATORS, Criterion, EnumerationLimit, gen_event_event, gen_gui_pairs
from .simulate import RandomRun, ReplayLimit, Scripted, SimulationError, parse_script, simulate
from .trace import TraceError, parse_trace


class ExitStatus(IntEnum):
    OK = 0
    USAGE_ERROR = 2
    INPUT_ERROR = 3
    INTERNAL_LIMIT = 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ExitStatus.USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_ccfa(path: str):
    try:
        return parse_ccfa(_read(path))
    except CcfaError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_traces(paths: Sequence[str], rebase: bool = False):
    traces = []
    for p in paths:
        try:
            t = parse_trace(_read(p), source=p)
        except TraceError as exc:
            raise InputError(f"{p}: {exc}") from None
        traces.append(t.rebased() if rebase else t)
    return traces


def _kinds(ccfa, path: str):
    try:
        return classify_callbacks(ccfa)
    except CcfaError as exc:
        raise InputError(f"{path}: {exc}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_validate(args) -> int:
    ccfa = _load_ccfa(args.ccfa)
    diags = validate_ccfa(ccfa)
    for d in diags:
        print(f"{args.ccfa}: {d.severity}: {d.code}: {d.message}")
    if not diags:
        print(f"{args.ccfa}: ok")
        return ExitStatus.OK
    return ExitStatus.INPUT_ERROR


def _generate(ccfa, criterion: Criterion, self_pairs: bool):
    if criterion is Criterion.EVENT_EVENT:
        return gen_event_event(ccfa, include_self_pairs=self_pairs)
    if criterion is Criterion.GUI_PAIR:
        return gen_gui_pairs(ccfa, include_self_pairs=self_pairs)
    return GENERATORS[criterion](ccfa)


def cmd_sequences(args) -> int:
    ccfa = _load_ccfa(args.ccfa)
    _kinds(ccfa, args.ccfa)
    required = _generate(ccfa, Criterion(args.criterion), args.include_self_pairs)
    _emit(required.render(), args.out)
    return ExitStatus.OK


def cmd_coverage(args) -> int:
    ccfa = _load_ccfa(args.ccfa)
    kinds = _kinds(ccfa, args.ccfa)
    traces = _load_traces(args.trace)
    required = _generate(ccfa, Criterion(args.criterion), False)
    report = coverage_report(required, traces, kinds)
    _emit(_json(report.to_dict()) if args.json else render_coverage(report), None)
    return ExitStatus.OK


def cmd_simulate(args) -> int:
    ccfa = _load_ccfa(args.ccfa)
    if args.script:
        try:
            config = Scripted(parse_script(_read(args.script)))
        except ValueError as exc:
            raise InputError(f"{args.script}: {exc}") from None
    else:
        try:
            config = RandomRun(args.seed, args.steps, args.defer_prob)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    try:
        trace = simulate(ccfa, config)
    except SimulationError as exc:
        raise InputError(f"{args.script or 'simulation'}: {exc}") from None
    _emit(trace.render(), args.out)
    return ExitStatus.OK


def cmd_report(args) -> int:
    if args.window <= 0:
        raise InputError("--window must be positive")
    ccfa = _load_ccfa(args.ccfa)
    kinds = _kinds(ccfa, args.ccfa)
    traces = _load_traces(args.trace, rebase=args.rebase)
    try:
        bugs = parse_bugs(_read(args.bugs))
    except ValueError as exc:
        raise InputError(f"{args.bugs}: {exc}") from None
    required = {c: _generate(ccfa, c, False) for c in Criterion}
    reports = [coverage_report(required[c], traces, kinds) for c in Criterion]
    series = time_series(required, traces, bugs, args.window, kinds)
    corr = correlate_bugs(series)
    if args.json:
        _emit(_json(series_to_dict(reports, series, corr)), None)
    else:
        _emit(render_series(reports, series, corr), None)
    return ExitStatus.OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cbcover", description="Callback-sequence coverage from CCFAs and traces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    criteria = [c.value for c in Criterion]

    v = sub.add_parser("validate", help="check a CCFA file and print diagnostics")
    v.add_argument("ccfa")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("sequences", help="write the required sequences of one criterion")
    s.add_argument("--ccfa", required=True)
    s.add_argument("--criterion", required=True, choices=criteria)
    s.add_argument("--include-self-pairs", action="store_true",
                   help="also pair an event callback with itself (event-event and gui)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sequences)

    c = sub.add_parser("coverage", help="measure one criterion over traces")
    c.add_argument("--ccfa", required=True)
    c.add_argument("--criterion", required=True, choices=criteria)
    c.add_argument("--trace", required=True, nargs="+")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_coverage)

    m = sub.add_parser("simulate", help="produce a trace from a script or a seeded random run")
    m.add_argument("--ccfa", required=True)
    mode = m.add_mutually_exclusive_group(required=True)
    mode.add_argument("--script")
    mode.add_argument("--seed", type=int)
    m.add_argument("--steps", type=int)
    m.add_argument("--defer-prob", type=float, default=0.5)
    m.add_argument("--out")
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="windowed coverage of every criterion and bug correlation")
    r.add_argument("--ccfa", required=True)
    r.add_argument("--trace", required=True, nargs="+")
    r.add_argument("--bugs", required=True)
    r.add_argument("--window", required=True, type=float, help="window length in seconds")
    r.add_argument("--rebase", action="store_true", help="shift each trace so it starts at 0")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate" and args.seed is not None and args.steps is None:
            parser.error("simulate: --steps is required with --seed")
        if args.command == "simulate" and args.script and args.steps is not None:
            parser.error("simulate: --steps only applies to random runs")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except InputError as exc:
        print(f"cbcover: {exc}", file=sys.stderr)
        return ExitStatus.INPUT_ERROR
    except (EnumerationLimit, ReplayLimit) as exc:
        print(f"cbcover: limit reached: {exc}", file=sys.stderr)
        return ExitStatus.INTERNAL_LIMIT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
