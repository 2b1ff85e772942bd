"""A single-looper event-queue interpreter for CCFAs.

The automaton has one *main* position that moves only when event tasks run.
External events queue event tasks; message-guarded callbacks inside API
regions are posted as message tasks which wait in a FIFO ``pending`` list
(the framework is still busy producing them) and run once no event task is
queued.  Each task executes its callback block synchronously: sync
transitions and epsilon regions are followed inline, and branch points are
resolved by ``choose`` directives or, in random mode, by a seeded generator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from .ccfa import Ccfa, ExternalEvent, Message, Point, Symbol, message_block
from .trace import Trace, TraceRecord


class SimulationError(RuntimeError):
    def __init__(self, message: str, directive: Optional[int] = None):
        self.directive = directive
        where = f"directive {directive + 1}: " if directive is not None else ""
        super().__init__(where + message)


class ReplayLimit(RuntimeError):
    """Replay explored more configurations than its cap."""


# ---------------------------------------------------------------------------
# scripts


@dataclass(frozen=True)
class Event:
    label: str


@dataclass(frozen=True)
class Drain:
    pass


@dataclass(frozen=True)
class Choose:
    index: int


Directive = Union[Event, Drain, Choose]


def parse_script(document: str) -> Tuple[Directive, ...]:
    """Parse ``event <label>`` / ``drain`` / ``choose <index>`` lines."""
    out: List[Directive] = []
    for lineno, raw in enumerate(document.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, arg = line.partition(" ")
        arg = arg.strip()
        if word == "event" and arg:
            out.append(Event(arg))
        elif word == "drain" and not arg:
            out.append(Drain())
        elif word == "choose" and arg.isdigit():
            out.append(Choose(int(arg)))
        else:
            raise ValueError(f"bad script directive at line {lineno}: {raw.strip()!r}")
    return tuple(out)


def render_script(script: Sequence[Directive]) -> str:
    lines = []
    for d in script:
        if isinstance(d, Event):
            lines.append(f"event {d.label}")
        elif isinstance(d, Drain):
            lines.append("drain")
        else:
            lines.append(f"choose {d.index}")
    return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class Scripted:
    script: Tuple[Directive, ...]


@dataclass(frozen=True)
class RandomRun:
    seed: int
    steps: int
    defer_probability: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.defer_probability <= 1.0:
            raise ValueError("defer_probability must lie in [0, 1]")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")


SimConfig = Union[Scripted, RandomRun]


# ---------------------------------------------------------------------------
# task semantics


class Run(NamedTuple):
    """A task in progress: its automaton position and open callbacks."""

    message: bool            # message task (ends when its root callback exits)
    state: Optional[str]     # None until the first transition is taken
    stack: Tuple[str, ...]
    candidates: Tuple[int, ...] = ()  # first transitions, before the task starts


class Option(NamedTuple):
    kind: str                # "take" | "post" | "end"
    index: int = -1
    resume: Optional[str] = None


END = Option("end")


class Machine:
    """Stateless view of the queue semantics of one CCFA."""

    def __init__(self, ccfa: Ccfa):
        self.ccfa = ccfa

    @cached_property
    def _resume(self) -> Dict[int, Tuple[str, ...]]:
        out = {}
        for j, t in enumerate(self.ccfa.transitions):
            if t.is_entry and isinstance(t.guard, Message):
                out[j] = tuple(sorted(message_block(self.ccfa, j)[1]))
        return out

    def is_message(self, j: int) -> bool:
        return j in self._resume

    def trigger_label(self, j: int) -> str:
        t = self.ccfa.transitions[j]
        return t.guard.label if isinstance(t.guard, ExternalEvent) else t.label.callback

    def triggers(self, state: str) -> List[int]:
        """Asynchronous entries an external event can start from ``state``."""
        return [j for j in self.ccfa.outgoing(state)
                if self.ccfa.transitions[j].is_entry and self.ccfa.transitions[j].is_async
                and not self.is_message(j)]

    def enabled_labels(self, state: str) -> List[str]:
        labels: Dict[str, None] = {}
        for j in self.triggers(state):
            labels.setdefault(self.trigger_label(j))
        return list(labels)

    def event_run(self, state: str, label: str) -> Optional[Run]:
        cands = tuple(j for j in self.triggers(state) if self.trigger_label(j) == label)
        return Run(False, None, (), cands) if cands else None

    def message_run(self, j: int) -> Run:
        return Run(True, None, (), (j,))

    def options(self, run: Run) -> List[Option]:
        if run.state is None:
            return [Option("take", j) for j in run.candidates]
        if run.message and not run.stack:
            return [END]
        opts: List[Option] = []
        has_trigger = False
        for j in self.ccfa.outgoing(run.state):
            t = self.ccfa.transitions[j]
            if self.is_message(j):
                opts.extend(Option("post", j, r) for r in self._resume[j])
            elif t.is_async:
                has_trigger = True
            else:
                opts.append(Option("take", j))
        if not run.stack and (has_trigger or not opts):
            opts.append(END)
        return opts

    def apply(self, run: Run, opt: Option) -> Tuple[Optional[Run], Optional[Symbol], Optional[int]]:
        """Perform one option: returns (next run or None if finished, emitted symbol, posted message)."""
        if opt.kind == "end":
            return None, None, None
        if opt.kind == "post":
            return Run(run.message, opt.resume, run.stack), None, opt.index
        t = self.ccfa.transitions[opt.index]
        sym = t.symbol
        stack = run.stack
        if sym is not None:
            if sym.point is Point.ENTRY:
                stack = stack + (sym.callback,)
            else:
                if not stack or stack[-1] != sym.callback:
                    raise SimulationError(f"unbalanced exit {sym} at {t.describe()}")
                stack = stack[:-1]
        return Run(run.message, t.target, stack), sym, None


# ---------------------------------------------------------------------------
# simulator


class Simulator:
    """Executes directives one at a time; see :func:`simulate`."""

    def __init__(self, ccfa: Ccfa):
        self.machine = Machine(ccfa)
        self.main = ccfa.initial
        self.queue: List[str] = []
        self.pending: List[int] = []
        self.run: Optional[Run] = None
        self.records: List[TraceRecord] = []
        self.log: List[Directive] = []
        self._index = 0

    # public state -------------------------------------------------------
    @property
    def choice_pending(self) -> bool:
        return self.run is not None

    def choices(self) -> List[Option]:
        return self.machine.options(self.run) if self.run is not None else []

    def enabled_labels(self) -> List[str]:
        return self.machine.enabled_labels(self.main)

    def trace(self, source: str = "simulate") -> Trace:
        return Trace(tuple(self.records), source)

    # directives ---------------------------------------------------------
    def execute(self, directive: Directive) -> None:
        idx = self._index
        self._index += 1
        self.log.append(directive)
        if self.run is not None:
            if not isinstance(directive, Choose):
                raise SimulationError("a branch choice is pending; expected 'choose'", idx)
            opts = self.choices()
            if not 0 <= directive.index < len(opts):
                raise SimulationError(f"choose {directive.index} out of range (0..{len(opts) - 1})", idx)
            self._step(opts[directive.index], idx)
            self._advance(idx)
        elif isinstance(directive, Event):
            if not self.queue and directive.label not in self.enabled_labels():
                raise SimulationError(f"event {directive.label!r} is not enabled at state {self.main!r}", idx)
            self.queue.append(directive.label)
        elif isinstance(directive, Drain):
            if self.queue:
                label = self.queue.pop(0)
                run = self.machine.event_run(self.main, label)
                if run is None:
                    raise SimulationError(f"event {label!r} is not enabled at state {self.main!r}", idx)
            elif self.pending:
                run = self.machine.message_run(self.pending.pop(0))
            else:
                raise SimulationError("drain on an empty queue", idx)
            self.run = run
            self._advance(idx)
        else:
            raise SimulationError("no branch choice is pending", idx)

    def finish(self) -> None:
        if self.run is not None:
            raise SimulationError("script ended while a branch choice is pending")

    def _step(self, opt: Option, idx: int) -> None:
        run = self.run
        nxt, sym, posted = self.machine.apply(run, opt)
        if sym is not None:
            self.records.append(TraceRecord(len(self.records), sym.callback, sym.point))
        if posted is not None:
            self.pending.append(posted)
        if nxt is None and not run.message:
            self.main = run.state
        self.run = nxt

    def _advance(self, idx: int) -> None:
        while self.run is not None:
            opts = self.choices()
            if not opts:
                raise SimulationError(f"task stuck at state {self.run.state!r}", idx)
            if len(opts) > 1:
                return
            self._step(opts[0], idx)


def run_simulation(ccfa: Ccfa, config: SimConfig) -> Simulator:
    sim = Simulator(ccfa)
    if isinstance(config, Scripted):
        for d in config.script:
            sim.execute(d)
        sim.finish()
        return sim
    rng = random.Random(config.seed)
    dispatched = 0
    while dispatched < config.steps or sim.choice_pending:
        if sim.choice_pending:
            sim.execute(Choose(rng.randrange(len(sim.choices()))))
            continue
        enabled = sim.enabled_labels()
        if sim.pending and (not enabled or rng.random() >= config.defer_probability):
            sim.execute(Drain())
        elif enabled:
            sim.execute(Event(rng.choice(enabled)))
            sim.execute(Drain())
        else:
            break
        dispatched += 1
    return sim


def simulate(ccfa: Ccfa, config: SimConfig) -> Trace:
    """Run a script (or a seeded random session) and return the produced trace."""
    return run_simulation(ccfa, config).trace()


# ---------------------------------------------------------------------------
# replay


def replay_check(ccfa: Ccfa, trace: Trace, cap: int = 10**6) -> bool:
    """True iff some script makes the simulator produce ``trace``'s records."""
    m = Machine(ccfa)
    want = trace.symbols
    n = len(want)
    start = (0, ccfa.initial, (), None)
    seen = {start}
    stack = [start]
    while stack:
        pos, main, pending, run = stack.pop()
        succ = []
        if run is None:
            if pos == n:
                return True
            if pending and ccfa.transitions[pending[0]].label == want[pos]:
                succ.append((pos, main, pending[1:], m.message_run(pending[0])))
            for label in m.enabled_labels(main):
                succ.append((pos, main, pending, m.event_run(main, label)))
        else:
            for opt in m.options(run):
                if opt.kind == "take":
                    t = ccfa.transitions[opt.index]
                    if t.symbol is not None and (pos == n or t.symbol != want[pos]):
                        continue
                try:
                    nxt, sym, posted = m.apply(run, opt)
                except SimulationError:
                    continue
                new_main = run.state if nxt is None and not run.message else main
                new_pending = pending + (posted,) if posted is not None else pending
                succ.append((pos + (sym is not None), new_main, new_pending, nxt))
        for cfg in succ:
            if cfg not in seen:
                if len(seen) >= cap:
                    raise ReplayLimit(f"more than {cap} configurations explored")
                seen.add(cfg)
                stack.append(cfg)
    return False
