"""Shared test utilities: fixture loading, the planted-bug session, witness search."""

from collections import deque
from pathlib import Path

from cbcover.ccfa import parse_ccfa
from cbcover.simulate import Machine, Simulator, parse_script
from cbcover.trace import Trace, TraceRecord

FIXTURES = Path(__file__).parent / "fixtures"


def fixture(name):
    return FIXTURES / name


def load(name):
    return parse_ccfa(fixture(name).read_text())


# ---------------------------------------------------------------------------
# a 30 minute session over session.json, one phase per five-minute window

SESSION_PHASES = [
    # (phase start in ms, directives)
    (10_000, "event launch\ndrain\nevent click_tab\ndrain"),
    (310_000, "event click_shot\ndrain\ndrain\nevent click_tab\ndrain"),
    (620_000, "event click_tab\ndrain"),
    (910_000, "event location\ndrain\nevent click_shot\ndrain\ndrain\nevent location\ndrain"),
    (1_210_000, "event click_shot\ndrain\nevent location\ndrain\ndrain"),
    (1_700_000, "event click_tab\ndrain"),
]

# bug id, timestamp in ms; B1 recurs later and must only count once
SESSION_BUGS = [(120_000, "B1"), (750_000, "B2"), (1_000_000, "B1"), (1_400_000, "B3")]


def session_trace():
    """Run the phases through one simulator, one second between records."""
    sim = Simulator(load("session.json"))
    records = []
    for start, text in SESSION_PHASES:
        before = len(sim.records)
        for d in parse_script(text):
            sim.execute(d)
        sim.finish()
        for i, r in enumerate(sim.records[before:]):
            records.append(TraceRecord(start + 1000 * i, r.callback, r.point))
    return Trace(tuple(records), "session")


def session_bugs_text():
    return "".join(f"{t} {b}\n" for t, b in SESSION_BUGS)


# ---------------------------------------------------------------------------
# realizability witnesses


def find_witness(ccfa, target, keep, max_configs=200_000, max_pending=3):
    """Shortest complete schedule whose trace, filtered to callbacks in
    ``keep``, contains ``target`` contiguously.  Returns the symbol list or None.

    Breadth-first over the same task semantics the simulator uses: at a task
    boundary either the oldest posted message runs or an enabled event fires.
    """
    m = Machine(ccfa)
    k = len(target)
    target = tuple(target)
    start = (ccfa.initial, (), None, ())
    parent = {start: None}
    todo = deque([start])
    while todo:
        cfg = todo.popleft()
        main, pending, run, window = cfg
        if window is None and run is None:
            return _unwind(parent, cfg)
        moves = []
        if run is None:
            if pending:
                moves.append((main, pending[1:], m.message_run(pending[0]), None))
            for label in m.enabled_labels(main):
                moves.append((main, pending, m.event_run(main, label), None))
        else:
            for opt in m.options(run):
                nxt, sym, posted = m.apply(run, opt)
                new_main = run.state if nxt is None and not run.message else main
                new_pending = pending + (posted,) if posted is not None else pending
                moves.append((new_main, new_pending, nxt, sym))
        for new_main, new_pending, nxt, sym in moves:
            if len(new_pending) > max_pending:
                continue
            new_window = window
            if window is not None and sym is not None and sym.callback in keep:
                new_window = (window + (sym,))[-k:]
                if new_window == target:
                    new_window = None  # matched; now let the running task finish
            child = (new_main, new_pending, nxt, new_window)
            if child in parent:
                continue
            parent[child] = (cfg, sym)
            if len(parent) > max_configs:
                return None
            todo.append(child)
    return None


def _unwind(parent, cfg):
    syms = []
    while parent[cfg] is not None:
        cfg, sym = parent[cfg]
        if sym is not None:
            syms.append(sym)
    return syms[::-1]


def trace_of(symbols):
    return Trace(tuple(TraceRecord(i, s.callback, s.point) for i, s in enumerate(symbols)), "witness")
