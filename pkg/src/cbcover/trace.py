"""Execution traces of callback entry/exit points and sequence containment."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Collection, Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .ccfa import Kind, Point, Symbol
from .seqgen import Criterion, RequiredSequence, RequiredSet
from . import matching

log = logging.getLogger(__name__)


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    timestamp: int
    callback: str
    point: Point

    def __post_init__(self):
        if self.timestamp < 0:
            raise TraceError(f"negative timestamp {self.timestamp}")

    @property
    def symbol(self) -> Symbol:
        return Symbol(self.callback, self.point)

    def render(self) -> str:
        return f"({self.timestamp}, {self.callback}, {self.point.value.upper()})"


@dataclass(frozen=True)
class Trace:
    records: Tuple[TraceRecord, ...] = ()
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for i in range(1, len(self.records)):
            if self.records[i].timestamp < self.records[i - 1].timestamp:
                raise TraceError(f"timestamps decrease at record {i + 1}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def symbols(self) -> Tuple[Symbol, ...]:
        return tuple(r.symbol for r in self.records)

    def render(self) -> str:
        return "".join(r.render() + "\n" for r in self.records)

    def until(self, timestamp: int) -> "Trace":
        """The prefix of records stamped at or before ``timestamp``."""
        return Trace(tuple(r for r in self.records if r.timestamp <= timestamp), self.source)

    def rebased(self) -> "Trace":
        if not self.records:
            return self
        t0 = self.records[0].timestamp
        return Trace(tuple(TraceRecord(r.timestamp - t0, r.callback, r.point) for r in self.records),
                     self.source)


_LINE = re.compile(r"^\(\s*(\S+?)\s*,\s*(.+?)\s*,\s*([A-Za-z_]+)\s*\)$")


def parse_trace(document: str, source: str = "") -> Trace:
    """Parse ``(<t>, <signature>, <ENTRY|EXIT>)`` lines; blank lines are skipped."""
    records: List[TraceRecord] = []
    last = None
    for lineno, line in enumerate(document.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise TraceError(f"malformed trace record at line {lineno}: {line!r}")
        stamp, callback, point = m.groups()
        if not re.fullmatch(r"\d+", stamp):
            raise TraceError(f"bad timestamp {stamp!r} at line {lineno}")
        try:
            kind = Point(point.lower())
        except ValueError:
            raise TraceError(f"unknown point kind at line {lineno}: {point!r}") from None
        if point != point.upper():
            raise TraceError(f"unknown point kind at line {lineno}: {point!r}")
        t = int(stamp)
        if last is not None and t < last:
            raise TraceError(f"decreasing timestamp at line {lineno}: {t} after {last}")
        last = t
        records.append(TraceRecord(t, callback, kind))
    return Trace(tuple(records), source)


CRITERION_KEEP: Dict[Criterion, Optional[frozenset]] = {
    Criterion.EVENT_EVENT: frozenset({Kind.EVENT}),
    Criterion.GUI_PAIR: frozenset({Kind.EVENT}),
    Criterion.EVENT_API_ASYNC: frozenset({Kind.EVENT, Kind.API_ASYNC}),
    Criterion.EVENT_API_SYNC: None,  # matched on the raw trace
}


def filter_by_kind(trace: Trace, keep: Collection[Kind], kinds: Mapping[str, Kind]) -> Trace:
    """Keep the records whose callback kind is in ``keep``.

    Callbacks missing from ``kinds`` are dropped with a warning.
    """
    unknown: Set[str] = set()
    kept = []
    for r in trace.records:
        kind = kinds.get(r.callback)
        if kind is None:
            unknown.add(r.callback)
        elif kind in keep:
            kept.append(r)
    if unknown:
        log.warning("%s: dropped records of callbacks absent from the CCFA: %s",
                    trace.source or "<trace>", ", ".join(sorted(unknown)))
    return Trace(tuple(kept), trace.source)


def filter_for(criterion: Criterion, trace: Trace, kinds: Mapping[str, Kind]) -> Trace:
    keep = CRITERION_KEEP[criterion]
    return trace if keep is None else filter_by_kind(trace, keep, kinds)


def contains_sequence(trace: Trace, seq: RequiredSequence) -> bool:
    """True iff ``seq`` occurs as a contiguous run of records in ``trace``."""
    return matching.first_match_ends(trace.symbols, [seq.symbols])[0] >= 0


def covered_set(required: RequiredSet, traces: Iterable[Trace], kinds: Mapping[str, Kind]) -> Set[RequiredSequence]:
    """Union over ``traces`` of the required sequences each one covers."""
    seqs = list(required)
    covered: Set[RequiredSequence] = set()
    for trace in traces:
        todo = [s for s in seqs if s not in covered]
        if not todo:
            break
        filtered = filter_for(required.criterion, trace, kinds)
        ends = matching.first_match_ends(filtered.symbols, [s.symbols for s in todo])
        covered.update(s for s, end in zip(todo, ends) if end >= 0)
    return covered


def first_cover_times(required: RequiredSet, traces: Iterable[Trace], kinds: Mapping[str, Kind]) -> Dict[RequiredSequence, int]:
    """Earliest timestamp at which each covered sequence is completed by some trace."""
    seqs = list(required)
    best: Dict[RequiredSequence, int] = {}
    for trace in traces:
        filtered = filter_for(required.criterion, trace, kinds)
        ends = matching.first_match_ends(filtered.symbols, [s.symbols for s in seqs])
        for s, end in zip(seqs, ends):
            if end >= 0:
                t = filtered.records[end].timestamp
                if s not in best or t < best[s]:
                    best[s] = t
    return best
