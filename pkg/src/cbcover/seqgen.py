"""Required callback sequences for each coverage criterion.

Every generator is a traversal of the CCFA.  ``enumerate_bounded_runs`` is a
deliberately naive path enumerator kept around as an independent oracle for
the traversals on small automata.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Sequence, Set, Tuple

from .ccfa import (
    Ccfa,
    ExternalEvent,
    Kind,
    Message,
    Silent,
    Symbol,
    classify_callbacks,
    entry,
    exit_,
    gui_callbacks,
    region_spans,
    strip_api_regions,
    strip_async_in_api,
)


class Criterion(str, Enum):
    EVENT_EVENT = "event-event"
    EVENT_API_SYNC = "event-api-sync"
    EVENT_API_ASYNC = "event-api-async"
    GUI_PAIR = "gui"


class EnumerationLimit(RuntimeError):
    """The bounded run enumerator produced more runs than its cap."""


@dataclass(frozen=True)
class RequiredSequence:
    criterion: Criterion
    symbols: Tuple[Symbol, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))

    @property
    def key(self) -> Tuple[str, ...]:
        return tuple(str(s) for s in self.symbols)

    def render(self) -> str:
        return f"{self.criterion.value}\t" + " -> ".join(self.key)

    @classmethod
    def parse(cls, line: str) -> "RequiredSequence":
        tag, sep, body = line.partition("\t")
        if not sep:
            raise ValueError(f"missing criterion tag in {line!r}")
        return cls(Criterion(tag), tuple(Symbol.parse(s.strip()) for s in body.split(" -> ")))


@dataclass(frozen=True)
class RequiredSet:
    """A deduplicated, canonically ordered set of required sequences."""

    criterion: Criterion
    sequences: Tuple[RequiredSequence, ...] = ()

    def __post_init__(self):
        uniq = {s.key: s for s in self.sequences}
        object.__setattr__(self, "sequences", tuple(uniq[k] for k in sorted(uniq)))

    def __iter__(self) -> Iterator[RequiredSequence]:
        return iter(self.sequences)

    def __len__(self) -> int:
        return len(self.sequences)

    def __contains__(self, item) -> bool:
        return item in self.sequences

    def render(self) -> str:
        return "".join(s.render() + "\n" for s in self.sequences)

    @classmethod
    def parse(cls, text: str, criterion: Criterion) -> "RequiredSet":
        seqs = [RequiredSequence.parse(line) for line in text.splitlines() if line.strip()]
        for s in seqs:
            if s.criterion is not criterion:
                raise ValueError(f"sequence tagged {s.criterion.value}, expected {criterion.value}")
        return cls(criterion, tuple(seqs))


def _make(criterion: Criterion, seqs: Iterable[Sequence[Symbol]]) -> RequiredSet:
    return RequiredSet(criterion, tuple(RequiredSequence(criterion, tuple(s)) for s in seqs))


# ---------------------------------------------------------------------------
# traversal helpers


def _forward_stops(ccfa: Ccfa, starts: Iterable[str], is_stop: Callable[[int], bool],
                   may_pass: Callable[[int], bool] = lambda j: True) -> Set[int]:
    """Transitions satisfying ``is_stop`` first reached from ``starts``.

    Each transition is used at most once per search, which also bounds the
    traversal of loops to a single turn.
    """
    used: Set[int] = set()
    found: Set[int] = set()
    todo = deque(starts)
    while todo:
        s = todo.popleft()
        for j in ccfa.outgoing(s):
            if j in used:
                continue
            used.add(j)
            if is_stop(j):
                found.add(j)
            elif may_pass(j):
                todo.append(ccfa.transitions[j].target)
    return found


def enclosing_entries(ccfa: Ccfa, state: str, accept: Callable[[str], bool]) -> Set[int]:
    """Entry transitions of the callbacks whose activation is open at ``state``.

    Walks backwards, skipping over complete callback blocks; an unmatched
    entry whose callback is rejected by ``accept`` is stepped over so the
    search continues outwards.
    """
    limit = len(ccfa.transitions) + 1
    found: Set[int] = set()
    seen = {(state, ())}
    todo = deque([(state, ())])
    while todo:
        s, pending = todo.popleft()
        for j in ccfa.incoming(s):
            t = ccfa.transitions[j]
            nxt = pending
            if t.is_entry:
                cb = t.label.callback
                if pending:
                    if pending[-1] != cb:
                        continue
                    nxt = pending[:-1]
                elif accept(cb):
                    found.add(j)
                    continue
            elif t.is_exit:
                if len(pending) >= limit:
                    continue
                nxt = pending + (t.label.callback,)
            key = (t.source, nxt)
            if key not in seen:
                seen.add(key)
                todo.append(key)
    return found


def _exit_targets(ccfa: Ccfa, callback: str) -> List[str]:
    return [ccfa.transitions[j].target for j in ccfa.exits_of(callback)]


# ---------------------------------------------------------------------------
# generators


def _event_pairs(ccfa: Ccfa, include_self_pairs: bool) -> Set[Tuple[str, str]]:
    kinds = classify_callbacks(ccfa)
    events = {cb for cb, k in kinds.items() if k is Kind.EVENT}
    g = strip_api_regions(ccfa)

    def is_event_entry(j: int) -> bool:
        t = g.transitions[j]
        return t.is_entry and t.label.callback in events

    pairs = set()
    for c1 in sorted(events):
        for j in _forward_stops(g, _exit_targets(g, c1), is_event_entry):
            c2 = g.transitions[j].label.callback
            if c2 != c1 or include_self_pairs:
                pairs.add((c1, c2))
    return pairs


def gen_event_event(ccfa: Ccfa, include_self_pairs: bool = False) -> RequiredSet:
    """Pairs of consecutive event callbacks, as ``[c1 entry, c1 exit, c2 entry]``."""
    pairs = _event_pairs(ccfa, include_self_pairs)
    return _make(Criterion.EVENT_EVENT, ((entry(a), exit_(a), entry(b)) for a, b in pairs))


def gen_gui_pairs(ccfa: Ccfa, include_self_pairs: bool = False) -> RequiredSet:
    """The GUI baseline: event-event pairs where both handlers answer GUI events."""
    gui = gui_callbacks(ccfa)
    pairs = {(a, b) for a, b in _event_pairs(ccfa, include_self_pairs) if a in gui and b in gui}
    return _make(Criterion.GUI_PAIR, ((entry(a), exit_(a), entry(b)) for a, b in pairs))


def gen_event_api_sync(ccfa: Ccfa) -> RequiredSet:
    """Caller/callee entries and consecutive synchronous callbacks inside API regions."""
    kinds = classify_callbacks(ccfa)
    g = strip_async_in_api(ccfa)
    api_sync = {cb for cb, k in kinds.items() if k is Kind.API_SYNC}

    def silent(j: int) -> bool:
        return isinstance(g.transitions[j].label, Silent)

    def is_sync_entry(j: int) -> bool:
        t = g.transitions[j]
        return t.is_entry and t.label.callback in api_sync

    def is_endpoint(j: int) -> bool:
        return g.transitions[j].symbol is not None

    seqs = set()
    for span in region_spans(g):
        o = g.transitions[span.open_index]
        firsts = {j for j in _forward_stops(g, [o.target], is_endpoint, silent) if is_sync_entry(j)}
        if not firsts:
            continue
        callers = enclosing_entries(g, o.source, lambda cb: kinds.get(cb) in (Kind.EVENT, Kind.API_SYNC))
        for c in callers:
            for f in firsts:
                seqs.add((g.transitions[c].label, g.transitions[f].label))

    for c1 in sorted(api_sync):
        for j in _forward_stops(g, _exit_targets(g, c1), is_endpoint, silent):
            if is_sync_entry(j):
                seqs.add((exit_(c1), g.transitions[j].label))
    return _make(Criterion.EVENT_API_SYNC, seqs)


def async_triples(ccfa: Ccfa) -> Set[Tuple[str, str, str]]:
    """``(caller, async callback, successor)`` triples behind the async criterion."""
    kinds = classify_callbacks(ccfa)
    g = strip_api_regions(ccfa)
    events = {cb for cb, k in kinds.items() if k is Kind.EVENT}

    def is_async_event_entry(j: int) -> bool:
        t = g.transitions[j]
        return (t.is_entry and t.is_async and isinstance(t.guard, ExternalEvent)
                and t.label.callback in events)

    triples = set()
    for j, t in enumerate(ccfa.transitions):
        if not (t.is_entry and isinstance(t.guard, Message)):
            continue
        c = t.label.callback
        for k in enclosing_entries(ccfa, t.source, lambda cb: cb in events):
            e = ccfa.transitions[k].label.callback
            for m in _forward_stops(g, _exit_targets(g, e), is_async_event_entry):
                triples.add((e, c, g.transitions[m].label.callback))
    return triples


def gen_event_api_async(ccfa: Ccfa) -> RequiredSet:
    """Both interleavings of each async callback with the caller's async successors."""
    seqs = []
    for e, c, s in async_triples(ccfa):
        seqs.append((entry(e), exit_(e), entry(c), exit_(c), entry(s)))
        seqs.append((entry(e), exit_(e), entry(s), exit_(s), entry(c)))
    return _make(Criterion.EVENT_API_ASYNC, seqs)


GENERATORS: Dict[Criterion, Callable[[Ccfa], RequiredSet]] = {
    Criterion.EVENT_EVENT: gen_event_event,
    Criterion.EVENT_API_SYNC: gen_event_api_sync,
    Criterion.EVENT_API_ASYNC: gen_event_api_async,
    Criterion.GUI_PAIR: gen_gui_pairs,
}


# ---------------------------------------------------------------------------
# oracle


def enumerate_bounded_runs(ccfa: Ccfa, max_symbols: int, cap: int = 10**6) -> Set[Tuple[Symbol, ...]]:
    """All symbol sequences of partial runs from the initial state.

    Runs hold between 1 and ``max_symbols`` endpoint symbols and use each
    transition at most twice, so every cycle is unrolled at most twice.
    """
    if max_symbols < 1:
        raise ValueError("max_symbols must be at least 1")
    runs: Set[Tuple[Symbol, ...]] = set()
    used = [0] * len(ccfa.transitions)
    produced = 0
    seq: List[Symbol] = []

    def walk(state: str) -> None:
        nonlocal produced
        for j in ccfa.outgoing(state):
            if used[j] >= 2:
                continue
            t = ccfa.transitions[j]
            used[j] += 1
            sym = t.symbol
            if sym is not None:
                seq.append(sym)
                produced += 1
                if produced > cap:
                    raise EnumerationLimit(f"more than {cap} runs enumerated")
                runs.add(tuple(seq))
                if len(seq) < max_symbols:
                    walk(t.target)
                seq.pop()
            else:
                walk(t.target)
            used[j] -= 1

    walk(ccfa.initial)
    return runs


def project_event_pairs(runs: Iterable[Sequence[Symbol]], events: FrozenSet[str],
                        include_self_pairs: bool = False) -> Set[Tuple[str, str]]:
    """Pairs of callbacks whose entries are consecutive event entries in some run."""
    pairs = set()
    for run in runs:
        prev = None
        for sym in run:
            if sym.callback not in events or sym.point.value != "entry":
                continue
            if prev is not None and (prev != sym.callback or include_self_pairs):
                pairs.add((prev, sym.callback))
            prev = sym.callback
    return pairs


def _symbol_distances(ccfa: Ccfa, start: str, may_pass: Callable[[int], bool]) -> Dict[str, int]:
    """Fewest endpoint symbols on a path from ``start`` to each state (0-1 BFS)."""
    dist = {start: 0}
    todo = deque([start])
    while todo:
        s = todo.popleft()
        for j in ccfa.outgoing(s):
            if not may_pass(j):
                continue
            t = ccfa.transitions[j]
            d = dist[s] + (t.symbol is not None)
            if d < dist.get(t.target, d + 1):
                dist[t.target] = d
                if t.symbol is None:
                    todo.appendleft(t.target)
                else:
                    todo.append(t.target)
    return dist


def pair_witness_bound(ccfa: Ccfa) -> int:
    """A run length sufficient to witness every consecutive-entry pair.

    Any pair ``(a, b)`` has a witness made of a shortest path to ``a``'s
    entry, ``a``'s exit, and a shortest entry-free path on to ``b``'s entry;
    the bound is the longest such combination.
    """
    reach = _symbol_distances(ccfa, ccfa.initial, lambda j: True)
    no_entry = lambda j: not ccfa.transitions[j].is_entry
    prefix = max((reach[t.source] for t in ccfa.transitions if t.is_entry and t.source in reach), default=0)
    hop = 0
    for t in ccfa.transitions:
        if t.is_exit:
            d = _symbol_distances(ccfa, t.target, no_entry)
            hop = max([hop] + [d[u.source] for u in ccfa.transitions if u.is_entry and u.source in d])
    return prefix + hop + 3
