"""Callback control flow automata: model, JSON format, checks and transforms.

A CCFA is a guarded automaton whose input symbols are the entry and exit
points of app callbacks.  Pairs of epsilon transitions bracket the callbacks
that a single framework API call may invoke ("regions").
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple, Union


class CcfaError(ValueError):
    """Raised for malformed CCFA documents or values."""


class ClassificationError(CcfaError):
    """A callback carries contradictory kind evidence."""


class Point(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"


class Bracket(str, Enum):
    OPEN = "open"
    CLOSE = "close"


class Delivery(str, Enum):
    SYNC = "sync"
    ASYNC = "async"


class Category(str, Enum):
    GUI = "gui"
    SENSOR = "sensor"
    SYSTEM = "system"
    OTHER = "other"


class Kind(str, Enum):
    EVENT = "event"
    API_SYNC = "api_sync"
    API_ASYNC = "api_async"


@dataclass(frozen=True, order=True)
class Symbol:
    """An endpoint symbol: the entry or exit point of one callback."""

    callback: str
    point: Point

    def __str__(self) -> str:
        return f"{self.callback}:{self.point.value}"

    @classmethod
    def parse(cls, text: str) -> "Symbol":
        callback, sep, point = text.rpartition(":")
        if not sep or not callback:
            raise ValueError(f"bad symbol {text!r}")
        return cls(callback, Point(point))


def entry(callback: str) -> Symbol:
    return Symbol(callback, Point.ENTRY)


def exit_(callback: str) -> Symbol:
    return Symbol(callback, Point.EXIT)


@dataclass(frozen=True)
class Epsilon:
    region: str
    bracket: Bracket


@dataclass(frozen=True)
class Silent:
    """Label of the bypass edges left behind by the strip transforms."""


SILENT = Silent()

Label = Union[Symbol, Epsilon, Silent]


@dataclass(frozen=True)
class ExternalEvent:
    label: str
    category: Category = Category.OTHER

    def __post_init__(self):
        if not self.label:
            raise CcfaError("external event guard needs a non-empty label")


@dataclass(frozen=True)
class ApiCall:
    callsite: str

    def __post_init__(self):
        if not self.callsite:
            raise CcfaError("api_call guard needs a non-empty callsite")


@dataclass(frozen=True)
class Message:
    callsite: str

    def __post_init__(self):
        if not self.callsite:
            raise CcfaError("message guard needs a non-empty callsite")


@dataclass(frozen=True)
class Always:
    pass


ALWAYS = Always()

Guard = Union[ExternalEvent, ApiCall, Message, Always]


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    label: Label
    guard: Guard = ALWAYS
    delivery: Delivery = Delivery.SYNC

    def __post_init__(self):
        if isinstance(self.label, (Epsilon, Silent)) and self.guard != ALWAYS:
            raise CcfaError(f"{self.describe()}: epsilon/silent transitions must be guarded by 'always'")
        if isinstance(self.label, Silent) and self.delivery is Delivery.ASYNC:
            raise CcfaError(f"{self.describe()}: silent transitions are synchronous")
        if isinstance(self.label, Symbol) and self.label.point is Point.EXIT and self.delivery is Delivery.ASYNC:
            raise CcfaError(f"{self.describe()}: an exit cannot be delivered asynchronously")

    @property
    def symbol(self) -> Optional[Symbol]:
        return self.label if isinstance(self.label, Symbol) else None

    @property
    def is_entry(self) -> bool:
        return isinstance(self.label, Symbol) and self.label.point is Point.ENTRY

    @property
    def is_exit(self) -> bool:
        return isinstance(self.label, Symbol) and self.label.point is Point.EXIT

    @property
    def is_async(self) -> bool:
        return self.delivery is Delivery.ASYNC

    def is_bracket(self, bracket: Bracket, region: Optional[str] = None) -> bool:
        lab = self.label
        return (isinstance(lab, Epsilon) and lab.bracket is bracket
                and (region is None or lab.region == region))

    def describe(self) -> str:
        lab = self.label
        if isinstance(lab, Symbol):
            text = str(lab)
        elif isinstance(lab, Epsilon):
            text = f"eps[{lab.region}:{lab.bracket.value}]"
        else:
            text = "silent"
        return f"{self.source} -> {self.target} ({text})"


@dataclass(frozen=True)
class Ccfa:
    states: Tuple[str, ...]
    initial: str
    transitions: Tuple[Transition, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if not self.states or not self.initial:
            raise CcfaError("initial state missing")
        if len(set(self.states)) != len(self.states):
            raise CcfaError("duplicate state ids")
        known = set(self.states)
        if self.initial not in known:
            raise CcfaError(f"initial state missing: {self.initial!r} is not a declared state")
        for i, t in enumerate(self.transitions):
            for end in (t.source, t.target):
                if end not in known:
                    raise CcfaError(f"transition {i} ({t.describe()}): dangling state reference {end!r}")

    @cached_property
    def _out(self) -> Dict[str, List[int]]:
        out: Dict[str, List[int]] = {s: [] for s in self.states}
        for i, t in enumerate(self.transitions):
            out[t.source].append(i)
        return out

    @cached_property
    def _in(self) -> Dict[str, List[int]]:
        inc: Dict[str, List[int]] = {s: [] for s in self.states}
        for i, t in enumerate(self.transitions):
            inc[t.target].append(i)
        return inc

    def outgoing(self, state: str) -> List[int]:
        """Indices of transitions leaving ``state``, in document order."""
        return self._out[state]

    def incoming(self, state: str) -> List[int]:
        return self._in[state]

    @cached_property
    def callbacks(self) -> Tuple[str, ...]:
        """Callback signatures in order of first appearance."""
        seen: Dict[str, None] = {}
        for t in self.transitions:
            if isinstance(t.label, Symbol):
                seen.setdefault(t.label.callback)
        return tuple(seen)

    def entries_of(self, callback: str) -> List[int]:
        return [i for i, t in enumerate(self.transitions)
                if t.is_entry and t.label.callback == callback]

    def exits_of(self, callback: str) -> List[int]:
        return [i for i, t in enumerate(self.transitions)
                if t.is_exit and t.label.callback == callback]

    def reachable_states(self) -> FrozenSet[str]:
        seen = {self.initial}
        todo = [self.initial]
        while todo:
            s = todo.pop()
            for i in self.outgoing(s):
                nxt = self.transitions[i].target
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return frozenset(seen)


# ---------------------------------------------------------------------------
# JSON format

_TOP_FIELDS = {"states", "initial", "transitions"}
_TRANSITION_FIELDS = {"from", "to", "label", "guard", "delivery"}
_GUARD_FIELDS = {
    "event": {"kind", "label", "category"},
    "api_call": {"kind", "callsite"},
    "message": {"kind", "callsite"},
    "always": {"kind"},
}


def _check_fields(obj, allowed, where: str, required=()) -> None:
    if not isinstance(obj, dict):
        raise CcfaError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise CcfaError(f"{where}: unknown field {unknown[0]!r}")
    for name in required:
        if name not in obj:
            raise CcfaError(f"{where}: missing field {name!r}")


def _enum(cls, value, where: str):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise CcfaError(f"{where}: bad value {value!r} (expected one of {choices})") from None


def _parse_label(obj, where: str) -> Label:
    if isinstance(obj, dict) and "epsilon" in obj:
        _check_fields(obj, {"epsilon"}, where)
        eps = obj["epsilon"]
        _check_fields(eps, {"region", "bracket"}, f"{where}.epsilon", ("region", "bracket"))
        if not isinstance(eps["region"], str) or not eps["region"]:
            raise CcfaError(f"{where}.epsilon: region must be a non-empty string")
        return Epsilon(eps["region"], _enum(Bracket, eps["bracket"], f"{where}.epsilon.bracket"))
    if isinstance(obj, dict) and "silent" in obj:
        _check_fields(obj, {"silent"}, where)
        if obj["silent"] is not True:
            raise CcfaError(f"{where}: 'silent' must be true")
        return SILENT
    _check_fields(obj, {"callback", "point"}, where, ("callback", "point"))
    if not isinstance(obj["callback"], str) or not obj["callback"]:
        raise CcfaError(f"{where}: callback must be a non-empty string")
    return Symbol(obj["callback"], _enum(Point, obj["point"], f"{where}.point"))


def _parse_guard(obj, where: str) -> Guard:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise CcfaError(f"{where}: guard needs a 'kind'")
    kind = obj["kind"]
    if kind not in _GUARD_FIELDS:
        raise CcfaError(f"{where}: unknown guard kind {kind!r}")
    _check_fields(obj, _GUARD_FIELDS[kind], where, tuple(sorted(_GUARD_FIELDS[kind] - {"category"})))
    if kind == "event":
        category = _enum(Category, obj.get("category", "other"), f"{where}.category")
        return ExternalEvent(obj["label"], category)
    if kind == "api_call":
        return ApiCall(obj["callsite"])
    if kind == "message":
        return Message(obj["callsite"])
    return ALWAYS


def parse_ccfa(document: str) -> Ccfa:
    """Parse a CCFA JSON document.

    Raises :class:`CcfaError` naming the offending element on any format
    violation, dangling state reference or epsilon region lacking one of
    its brackets.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise CcfaError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _check_fields(doc, _TOP_FIELDS, "document")
    states = doc.get("states") or []
    if not isinstance(states, list) or not all(isinstance(s, str) and s for s in states):
        raise CcfaError("document.states: expected a list of non-empty strings")
    initial = doc.get("initial")
    if not states or not initial:
        raise CcfaError("initial state missing")
    raw = doc.get("transitions", [])
    if not isinstance(raw, list):
        raise CcfaError("document.transitions: expected a list")
    transitions = []
    for i, obj in enumerate(raw):
        where = f"transitions[{i}]"
        _check_fields(obj, _TRANSITION_FIELDS, where, ("from", "to", "label"))
        label = _parse_label(obj["label"], f"{where}.label")
        guard = _parse_guard(obj.get("guard", {"kind": "always"}), f"{where}.guard")
        delivery = _enum(Delivery, obj.get("delivery", "sync"), f"{where}.delivery")
        try:
            transitions.append(Transition(obj["from"], obj["to"], label, guard, delivery))
        except CcfaError as exc:
            raise CcfaError(f"{where}: {exc}") from None
    ccfa = Ccfa(tuple(states), initial, tuple(transitions))
    _check_brackets_present(ccfa)
    return ccfa


def _check_brackets_present(ccfa: Ccfa) -> None:
    opened: Dict[str, int] = {}
    closed: Dict[str, int] = {}
    for i, t in enumerate(ccfa.transitions):
        if isinstance(t.label, Epsilon):
            book = opened if t.label.bracket is Bracket.OPEN else closed
            book.setdefault(t.label.region, i)
    for region, i in opened.items():
        if region not in closed:
            raise CcfaError(f"unmatched epsilon region {region!r}: open at transitions[{i}] has no close")
    for region, i in closed.items():
        if region not in opened:
            raise CcfaError(f"unmatched epsilon region {region!r}: close at transitions[{i}] has no open")


def _label_dict(label: Label) -> dict:
    if isinstance(label, Symbol):
        return {"callback": label.callback, "point": label.point.value}
    if isinstance(label, Epsilon):
        return {"epsilon": {"region": label.region, "bracket": label.bracket.value}}
    return {"silent": True}


def _guard_dict(guard: Guard) -> dict:
    if isinstance(guard, ExternalEvent):
        return {"kind": "event", "label": guard.label, "category": guard.category.value}
    if isinstance(guard, ApiCall):
        return {"kind": "api_call", "callsite": guard.callsite}
    if isinstance(guard, Message):
        return {"kind": "message", "callsite": guard.callsite}
    return {"kind": "always"}


def ccfa_to_dict(ccfa: Ccfa) -> dict:
    return {
        "states": list(ccfa.states),
        "initial": ccfa.initial,
        "transitions": [
            {"from": t.source, "to": t.target, "label": _label_dict(t.label),
             "guard": _guard_dict(t.guard), "delivery": t.delivery.value}
            for t in ccfa.transitions
        ],
    }


def dump_ccfa(ccfa: Ccfa) -> str:
    return json.dumps(ccfa_to_dict(ccfa), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class RegionSpan:
    """The transitions bracketed by one open epsilon transition."""

    open_index: int
    region: str
    interior: FrozenSet[int]
    closes: FrozenSet[int]
    reopened: FrozenSet[int] = frozenset()
    dead_ends: FrozenSet[str] = frozenset()


def region_spans(ccfa: Ccfa) -> List[RegionSpan]:
    spans = []
    for i, t in enumerate(ccfa.transitions):
        if not t.is_bracket(Bracket.OPEN):
            continue
        region = t.label.region
        interior, closes, reopened, dead = set(), set(), set(), set()
        seen = {t.target}
        todo = [t.target]
        while todo:
            s = todo.pop()
            out = ccfa.outgoing(s)
            if not out:
                dead.add(s)
            for j in out:
                u = ccfa.transitions[j]
                if u.is_bracket(Bracket.CLOSE, region):
                    closes.add(j)
                    continue
                if u.is_bracket(Bracket.OPEN, region):
                    reopened.add(j)
                    continue
                interior.add(j)
                if u.target not in seen:
                    seen.add(u.target)
                    todo.append(u.target)
        spans.append(RegionSpan(i, region, frozenset(interior), frozenset(closes),
                                frozenset(reopened), frozenset(dead)))
    return spans


def _interior_indices(ccfa: Ccfa) -> FrozenSet[int]:
    inside = set()
    for span in region_spans(ccfa):
        inside |= span.interior
    return frozenset(inside)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True, order=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.code}: {self.message}"


def _balance_diagnostics(ccfa: Ccfa) -> Iterator[Diagnostic]:
    limit = sum(1 for t in ccfa.transitions if t.is_entry) + 1
    seen = {(ccfa.initial, ())}
    todo = deque([(ccfa.initial, ())])
    reported = set()
    while todo:
        state, stack = todo.popleft()
        for j in ccfa.outgoing(state):
            t = ccfa.transitions[j]
            nxt = stack
            if t.is_entry:
                nxt = stack + (t.label.callback,)
                if len(nxt) > limit:
                    if ("nest", j) not in reported:
                        reported.add(("nest", j))
                        yield Diagnostic("error", "unbounded-nesting",
                                         f"transitions[{j}] ({t.describe()}) re-enters callbacks without bound")
                    continue
            elif t.is_exit:
                if not stack or stack[-1] != t.label.callback:
                    if ("exit", j) not in reported:
                        reported.add(("exit", j))
                        yield Diagnostic("error", "unbalanced-endpoint",
                                         f"transitions[{j}] ({t.describe()}) exits a callback that is not open on some path")
                    continue
                nxt = stack[:-1]
            key = (t.target, nxt)
            if key not in seen:
                seen.add(key)
                todo.append(key)


def validate_ccfa(ccfa: Ccfa) -> List[Diagnostic]:
    """Check the path-level CCFA invariants; returns one diagnostic per violation."""
    diags: List[Diagnostic] = []

    reach = ccfa.reachable_states()
    for s in ccfa.states:
        if s not in reach:
            diags.append(Diagnostic("warning", "unreachable-state", f"state {s!r} is unreachable from {ccfa.initial!r}"))

    for cb in ccfa.callbacks:
        if not ccfa.entries_of(cb):
            diags.append(Diagnostic("error", "missing-endpoint", f"callback {cb!r} has an exit but no entry"))
        if not ccfa.exits_of(cb):
            diags.append(Diagnostic("error", "missing-endpoint", f"callback {cb!r} has an entry but no exit"))

    opens = {t.label.region for t in ccfa.transitions if t.is_bracket(Bracket.OPEN)}
    closes = {t.label.region for t in ccfa.transitions if t.is_bracket(Bracket.CLOSE)}
    for region in sorted(opens ^ closes):
        diags.append(Diagnostic("error", "unmatched-epsilon-region", f"region {region!r} lacks an open or a close bracket"))

    spans = region_spans(ccfa)
    for span in spans:
        where = f"region {span.region!r} opened at transitions[{span.open_index}]"
        for j in sorted(span.reopened):
            diags.append(Diagnostic("error", "region-bracketing", f"{where} is reopened at transitions[{j}] before it closes"))
        for s in sorted(span.dead_ends):
            diags.append(Diagnostic("error", "region-bracketing", f"{where} never closes on paths ending at {s!r}"))
        for other in spans:
            if other.open_index in span.interior:
                diags.append(Diagnostic("warning", "nested-region",
                                        f"region {other.region!r} is nested inside {where}"))

    inside = _interior_indices(ccfa)
    for j, t in enumerate(ccfa.transitions):
        if t.is_entry and isinstance(t.guard, Message) and j not in inside:
            diags.append(Diagnostic("error", "message-outside-region",
                                    f"transitions[{j}] ({t.describe()}) is message-guarded outside any epsilon region"))

    diags.extend(_balance_diagnostics(ccfa))

    try:
        classify_callbacks(ccfa)
    except ClassificationError as exc:
        diags.append(Diagnostic("error", "kind-conflict", str(exc)))
    return diags


# ---------------------------------------------------------------------------
# Classification


def classify_callbacks(ccfa: Ccfa) -> Dict[str, Kind]:
    """Map every callback to Event, ApiSync or ApiAsync.

    Message-guarded entries make a callback ApiAsync even inside a region;
    otherwise an entry inside a region makes it ApiSync.
    """
    inside = _interior_indices(ccfa)
    message, in_region, external = set(), set(), set()
    for j, t in enumerate(ccfa.transitions):
        if not t.is_entry:
            continue
        cb = t.label.callback
        if isinstance(t.guard, Message):
            message.add(cb)
        elif j in inside:
            in_region.add(cb)
        elif isinstance(t.guard, ExternalEvent):
            external.add(cb)
    kinds: Dict[str, Kind] = {}
    for cb in sorted(ccfa.callbacks):
        if cb in message and cb in external:
            raise ClassificationError(f"callback {cb!r} is both message-guarded and event-guarded")
        if cb in in_region and cb in external and cb not in message:
            raise ClassificationError(f"callback {cb!r} is both invoked in an API region and event-guarded")
        if cb in message:
            kinds[cb] = Kind.API_ASYNC
        elif cb in in_region:
            kinds[cb] = Kind.API_SYNC
        else:
            kinds[cb] = Kind.EVENT
    return kinds


def gui_callbacks(ccfa: Ccfa) -> FrozenSet[str]:
    """Callbacks triggered by at least one GUI-category external event."""
    return frozenset(t.label.callback for t in ccfa.transitions
                     if t.is_entry and isinstance(t.guard, ExternalEvent)
                     and t.guard.category is Category.GUI)


# ---------------------------------------------------------------------------
# Transforms


def _rebuild(ccfa: Ccfa, removed: Iterable[int], added: Iterable[Transition]) -> Ccfa:
    removed = set(removed)
    kept = [t for i, t in enumerate(ccfa.transitions) if i not in removed]
    for t in added:
        if t not in kept:
            kept.append(t)
    touched_before = {s for i in removed for s in (ccfa.transitions[i].source, ccfa.transitions[i].target)}
    touched_after = {s for t in kept for s in (t.source, t.target)}
    states = tuple(s for s in ccfa.states
                   if s == ccfa.initial or s not in touched_before or s in touched_after)
    return Ccfa(states, ccfa.initial, tuple(kept))


def strip_api_regions(ccfa: Ccfa) -> Ccfa:
    """Cut every epsilon region out, bypassing it with a silent edge."""
    spans = region_spans(ccfa)
    if not spans:
        return ccfa
    removed, added = set(), []
    nested = {s.open_index for s in spans for other in spans if s.open_index in other.interior}
    for span in spans:
        if span.open_index in nested:
            continue
        o = ccfa.transitions[span.open_index]
        removed.add(span.open_index)
        removed |= span.interior
        removed |= span.closes
        for j in sorted(span.closes):
            added.append(Transition(o.source, ccfa.transitions[j].target, SILENT))
    return _rebuild(ccfa, removed, added)


def _block_after(ccfa: Ccfa, start: int) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    """Transitions of the callback block opened by entry ``start`` and its closing exits."""
    cb = ccfa.transitions[start].label.callback
    block, exits = set(), set()
    seen = {ccfa.transitions[start].target}
    todo = [ccfa.transitions[start].target]
    while todo:
        s = todo.pop()
        for j in ccfa.outgoing(s):
            t = ccfa.transitions[j]
            if j in block or j == start:
                continue
            if t.is_exit and t.label.callback == cb:
                exits.add(j)
                continue
            block.add(j)
            if t.target not in seen:
                seen.add(t.target)
                todo.append(t.target)
    return frozenset(block), frozenset(exits)


def message_block(ccfa: Ccfa, start: int) -> Tuple[FrozenSet[int], FrozenSet[str]]:
    """Inner transitions of a message-guarded callback and the states after its exits."""
    block, exits = _block_after(ccfa, start)
    return block, frozenset(ccfa.transitions[j].target for j in exits)


def strip_async_in_api(ccfa: Ccfa) -> Ccfa:
    """Remove message-guarded callback blocks, reconnecting the region path."""
    starts = [j for j, t in enumerate(ccfa.transitions) if t.is_entry and isinstance(t.guard, Message)]
    if not starts:
        return ccfa
    blocks = {j: _block_after(ccfa, j) for j in starts}
    removed, added = set(), []
    for j in starts:
        block, exits = blocks[j]
        if any(j in other[0] for k, other in blocks.items() if k != j):
            continue
        removed.add(j)
        removed |= block
        removed |= exits
        src = ccfa.transitions[j].source
        for k in sorted(exits):
            added.append(Transition(src, ccfa.transitions[k].target, SILENT))
    return _rebuild(ccfa, removed, added)


__all__ = [
    "ALWAYS", "SILENT", "Always", "ApiCall", "Bracket", "Category", "Ccfa", "CcfaError",
    "ClassificationError", "Delivery", "Diagnostic", "Epsilon", "ExternalEvent", "Kind",
    "Message", "Point", "RegionSpan", "Silent", "Symbol", "Transition", "ccfa_to_dict",
    "classify_callbacks", "dump_ccfa", "entry", "exit_", "gui_callbacks", "message_block",
    "parse_ccfa", "region_spans", "strip_api_regions", "strip_async_in_api", "validate_ccfa",
]
