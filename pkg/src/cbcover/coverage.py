"""Coverage ratios, windowed coverage time series and bug correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .ccfa import Kind
from .seqgen import Criterion, RequiredSequence, RequiredSet
from .trace import Trace, covered_set, first_cover_times


@dataclass(frozen=True)
class CoverageReport:
    criterion: Criterion
    total: int
    covered: Tuple[RequiredSequence, ...]
    uncovered: Tuple[RequiredSequence, ...]

    @property
    def vacuous(self) -> bool:
        return self.total == 0

    @property
    def ratio(self) -> float:
        return 1.0 if self.total == 0 else len(self.covered) / self.total

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "total": self.total,
            "covered": len(self.covered),
            "ratio": self.ratio,
            "vacuous": self.vacuous,
            "uncovered": [" -> ".join(s.key) for s in self.uncovered],
        }


def coverage_report(required: RequiredSet, traces: Iterable[Trace], kinds: Mapping[str, Kind]) -> CoverageReport:
    hit = covered_set(required, traces, kinds)
    return CoverageReport(
        required.criterion,
        len(required),
        tuple(s for s in required if s in hit),
        tuple(s for s in required if s not in hit),
    )


@dataclass(frozen=True)
class BugEvent:
    timestamp: int
    id: str

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"negative bug timestamp {self.timestamp}")


def parse_bugs(document: str) -> List[BugEvent]:
    """Parse ``<timestamp_ms> <bug-id>`` lines."""
    bugs = []
    for lineno, line in enumerate(document.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        stamp, _, ident = line.partition(" ")
        if not stamp.isdigit() or not ident.strip():
            raise ValueError(f"malformed bug event at line {lineno}: {line!r}")
        bugs.append(BugEvent(int(stamp), ident.strip()))
    return bugs


def first_occurrences(bugs: Iterable[BugEvent]) -> List[BugEvent]:
    first: Dict[str, BugEvent] = {}
    for b in sorted(bugs, key=lambda b: (b.timestamp, b.id)):
        first.setdefault(b.id, b)
    return sorted(first.values(), key=lambda b: (b.timestamp, b.id))


@dataclass(frozen=True)
class Snapshot:
    window_end: int  # ms
    ratios: Mapping[Criterion, float]


@dataclass(frozen=True)
class TimeSeries:
    window: float  # seconds
    snapshots: Tuple[Snapshot, ...]
    bugs: Tuple[BugEvent, ...] = ()
    totals: Mapping[Criterion, int] = field(default_factory=dict)

    @property
    def window_ms(self) -> int:
        return _window_ms(self.window)

    def window_of(self, timestamp: int) -> int:
        """1-based index of the window ``((k-1)w, kw]`` holding ``timestamp``."""
        return max(1, math.ceil(timestamp / self.window_ms))


def _window_ms(window: float) -> int:
    ms = int(round(window * 1000))
    if ms <= 0:
        raise ValueError("window must be positive")
    return ms


def time_series(required: Mapping[Criterion, RequiredSet], traces: Sequence[Trace],
                bugs: Iterable[BugEvent], window: float, kinds: Mapping[str, Kind]) -> TimeSeries:
    """Coverage over growing prefixes, one snapshot per window.

    Snapshot ``k`` counts every record stamped at or before ``k * window``.
    """
    w = _window_ms(window)
    bugs = first_occurrences(bugs)
    horizon = max([r.timestamp for t in traces for r in t.records[-1:]] + [b.timestamp for b in bugs] + [0])
    count = max(1, math.ceil(horizon / w))
    cover_times = {c: sorted(first_cover_times(req, traces, kinds).values()) for c, req in required.items()}
    totals = {c: len(req) for c, req in required.items()}
    snapshots = []
    for k in range(1, count + 1):
        end = k * w
        ratios = {}
        for c, times in cover_times.items():
            if totals[c] == 0:
                ratios[c] = 1.0
            else:
                ratios[c] = sum(1 for t in times if t <= end) / totals[c]
        snapshots.append(Snapshot(end, ratios))
    return TimeSeries(window, tuple(snapshots), tuple(bugs), totals)


def correlate_bugs(series: TimeSeries) -> Dict[Criterion, int]:
    """Per criterion, the number of bugs whose window raised that criterion's ratio.

    Vacuous criteria (nothing required) never correlate.
    """
    criteria = list(series.totals) or (list(series.snapshots[0].ratios) if series.snapshots else [])
    counts = {c: 0 for c in criteria}
    for bug in series.bugs:
        k = series.window_of(bug.timestamp)
        if k > len(series.snapshots):
            continue
        now = series.snapshots[k - 1].ratios
        before = series.snapshots[k - 2].ratios if k >= 2 else {}
        for c in criteria:
            if series.totals.get(c, 1) == 0:
                continue
            if now[c] > before.get(c, 0.0):
                counts[c] += 1
    return counts


# ---------------------------------------------------------------------------
# rendering


def format_ratio(total: int, ratio: float) -> str:
    """Two-decimal ratio, or "-" when the criterion requires nothing."""
    return "-" if total == 0 else f"{ratio:.2f}"


def render_coverage(report: CoverageReport) -> str:
    lines = [
        f"criterion  {report.criterion.value}",
        f"required   {report.total}",
        f"covered    {len(report.covered)}",
        f"ratio      {format_ratio(report.total, report.ratio)}",
    ]
    if report.uncovered:
        lines.append("uncovered:")
        lines.extend("  " + " -> ".join(s.key) for s in report.uncovered)
    return "\n".join(lines) + "\n"


def render_series(reports: Sequence[CoverageReport], series: TimeSeries,
                  correlations: Mapping[Criterion, int]) -> str:
    criteria = [r.criterion for r in reports]
    width = max(len(c.value) for c in criteria)
    out = ["final coverage:"]
    for r in reports:
        out.append(f"  {r.criterion.value:<{width}}  {format_ratio(r.total, r.ratio):>5}  ({len(r.covered)}/{r.total})")
    out.append("")
    out.append(f"snapshots (window {series.window:g} s):")
    out.append("  " + f"{'end_s':>8}  " + "  ".join(f"{c.value:>{max(5, len(c.value))}}" for c in criteria) + "  bugs")
    for k, snap in enumerate(series.snapshots, 1):
        bug_ids = [b.id for b in series.bugs if series.window_of(b.timestamp) == k]
        cells = "  ".join(f"{format_ratio(series.totals[c], snap.ratios[c]):>{max(5, len(c.value))}}" for c in criteria)
        out.append(f"  {snap.window_end / 1000:>8g}  {cells}  {','.join(bug_ids)}".rstrip())
    out.append("")
    out.append(f"bugs co-occurring with a coverage increase ({len(series.bugs)} bugs):")
    for c in criteria:
        out.append(f"  {c.value:<{width}}  {correlations.get(c, 0)}")
    return "\n".join(out) + "\n"


def series_to_dict(reports: Sequence[CoverageReport], series: TimeSeries,
                   correlations: Mapping[Criterion, int]) -> dict:
    return {
        "window": series.window,
        "criteria": [r.to_dict() for r in reports],
        "snapshots": [
            {"window_end": s.window_end, "ratios": {c.value: v for c, v in s.ratios.items()}}
            for s in series.snapshots
        ],
        "bugs": [{"timestamp": b.timestamp, "id": b.id, "window": series.window_of(b.timestamp)}
                 for b in series.bugs],
        "correlations": {c.value: n for c, n in correlations.items()},
    }
