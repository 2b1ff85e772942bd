import json

import pytest

from cbcover.ccfa import (
    ALWAYS,
    SILENT,
    ApiCall,
    Bracket,
    Ccfa,
    CcfaError,
    ClassificationError,
    Delivery,
    Epsilon,
    ExternalEvent,
    Kind,
    Message,
    Silent,
    Symbol,
    Transition,
    classify_callbacks,
    dump_ccfa,
    entry,
    exit_,
    gui_callbacks,
    parse_ccfa,
    region_spans,
    strip_api_regions,
    strip_async_in_api,
    validate_ccfa,
)
from helpers import FIXTURES, load

ALL_FIXTURES = ["fig2.json", "fig4.json", "fig5.json", "fig6.json", "fig6_second_async.json", "session.json"]


def doc(transitions, states=None, initial="q1"):
    if states is None:
        states = sorted({t["from"] for t in transitions} | {t["to"] for t in transitions} | {initial})
    return json.dumps({"states": states, "initial": initial, "transitions": transitions})


def sym(a, b, cb, point, **extra):
    return {"from": a, "to": b, "label": {"callback": cb, "point": point}, **extra}


def eps(a, b, region, bracket):
    return {"from": a, "to": b, "label": {"epsilon": {"region": region, "bracket": bracket}}}


def event(label, category="gui"):
    return {"kind": "event", "label": label, "category": category}


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_fixtures_parse_and_validate_clean(name):
    ccfa = load(name)
    assert validate_ccfa(ccfa) == []


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_dump_parse_round_trip(name):
    ccfa = load(name)
    again = parse_ccfa(dump_ccfa(ccfa))
    assert again == ccfa
    assert dump_ccfa(again) == dump_ccfa(ccfa)


def test_defaults_for_guard_and_delivery():
    ccfa = parse_ccfa(doc([sym("q1", "q2", "A.f()", "entry"), sym("q2", "q1", "A.f()", "exit")]))
    t = ccfa.transitions[0]
    assert t.guard == ALWAYS
    assert t.delivery is Delivery.SYNC


def test_syntax_error_reports_position():
    with pytest.raises(CcfaError, match=r"line 1, column \d+"):
        parse_ccfa('{"states": [')


def test_dangling_state_reference():
    with pytest.raises(CcfaError, match="dangling state reference 'q9'"):
        parse_ccfa(doc([sym("q1", "q9", "A.f()", "entry")], states=["q1"]))


def test_missing_initial_state():
    with pytest.raises(CcfaError, match="initial state missing"):
        parse_ccfa(json.dumps({"states": ["q1"], "transitions": []}))
    with pytest.raises(CcfaError, match="initial state missing"):
        parse_ccfa(json.dumps({"states": ["q1"], "initial": "q7", "transitions": []}))


def test_unknown_fields_rejected():
    bad = sym("q1", "q2", "A.f()", "entry", colour="red")
    with pytest.raises(CcfaError, match="unknown field 'colour'"):
        parse_ccfa(doc([bad]))
    with pytest.raises(CcfaError, match="unknown guard kind"):
        parse_ccfa(doc([sym("q1", "q2", "A.f()", "entry", guard={"kind": "timer"})]))


def test_unmatched_region_is_a_parse_error():
    with pytest.raises(CcfaError, match="unmatched epsilon region 'api'"):
        parse_ccfa(doc([eps("q1", "q2", "api", "open")]))


def test_transition_invariants():
    with pytest.raises(CcfaError):
        Transition("a", "b", Epsilon("r", Bracket.OPEN), ExternalEvent("x"))
    with pytest.raises(CcfaError):
        Transition("a", "b", exit_("A.f()"), delivery=Delivery.ASYNC)
    with pytest.raises(CcfaError):
        Transition("a", "b", SILENT, delivery=Delivery.ASYNC)


def test_symbol_text_round_trip():
    s = entry("CamAct$3.onPictureTaken(byte[],Camera)")
    assert str(s) == "CamAct$3.onPictureTaken(byte[],Camera):entry"
    assert Symbol.parse(str(s)) == s
    with pytest.raises(ValueError):
        Symbol.parse("no-point-here")


def test_classification_fig4():
    kinds = classify_callbacks(load("fig4.json"))
    assert kinds == {
        "A.onCreate()": Kind.EVENT,
        "A.onStart()": Kind.EVENT,
        "A.onStop()": Kind.EVENT,
        "CList.onClick()": Kind.EVENT,
        "L.onCreateLoader()": Kind.API_SYNC,
    }


def test_classification_fig6_message_callback_is_api_async():
    kinds = classify_callbacks(load("fig6.json"))
    assert kinds["CamAct$3.onPictureTaken()"] is Kind.API_ASYNC
    assert kinds["CaptureList.onClick()"] is Kind.EVENT
    assert kinds["CaptureList.onTab()"] is Kind.EVENT


def test_classification_fig2():
    kinds = classify_callbacks(load("fig2.json"))
    assert kinds["FDService.onCreate()"] is Kind.EVENT
    assert {kinds[c] for c in ("DBHelper.onCreate()", "DBHelper.onUpgrade()", "DBHelper.onOpen()")} == {Kind.API_SYNC}


def test_kind_conflict():
    ccfa = parse_ccfa(doc([
        sym("q1", "q2", "A.f()", "entry", guard=event("tap"), delivery="async"),
        eps("q2", "q3", "api", "open"),
        sym("q3", "q4", "B.g()", "entry", guard={"kind": "message", "callsite": "api"}, delivery="async"),
        sym("q4", "q5", "B.g()", "exit"),
        eps("q5", "q6", "api", "close"),
        sym("q6", "q1", "A.f()", "exit"),
        sym("q1", "q7", "B.g()", "entry", guard=event("tap2"), delivery="async"),
        sym("q7", "q1", "B.g()", "exit"),
    ]))
    with pytest.raises(ClassificationError, match="B.g"):
        classify_callbacks(ccfa)
    assert "kind-conflict" in {d.code for d in validate_ccfa(ccfa)}


def test_gui_callbacks():
    assert gui_callbacks(load("fig5.json")) == {"Button1.onClick()", "Button2.onClick()"}
    assert gui_callbacks(load("fig4.json")) == {"CList.onClick()"}


def codes(ccfa):
    return sorted(d.code for d in validate_ccfa(ccfa))


def test_validate_exit_without_entry():
    ccfa = parse_ccfa(doc([sym("q1", "q2", "A.f()", "exit")]))
    assert "missing-endpoint" in codes(ccfa)
    assert "unbalanced-endpoint" in codes(ccfa)


def test_validate_unreachable_state_is_a_warning():
    ccfa = parse_ccfa(doc([sym("q1", "q2", "A.f()", "entry"), sym("q2", "q1", "A.f()", "exit")],
                          states=["q1", "q2", "q3"]))
    diags = validate_ccfa(ccfa)
    assert [(d.severity, d.code) for d in diags] == [("warning", "unreachable-state")]


def test_validate_region_never_closes_on_a_path():
    ccfa = parse_ccfa(doc([
        sym("q1", "q2", "A.f()", "entry"),
        eps("q2", "q3", "api", "open"),
        eps("q3", "q4", "api", "close"),
        {"from": "q3", "to": "q5", "label": {"silent": True}},
        sym("q4", "q1", "A.f()", "exit"),
    ]))
    assert "region-bracketing" in codes(ccfa)


def test_validate_message_outside_region():
    ccfa = parse_ccfa(doc([
        sym("q1", "q2", "A.f()", "entry", guard={"kind": "message", "callsite": "h.post()"}, delivery="async"),
        sym("q2", "q1", "A.f()", "exit"),
    ]))
    assert codes(ccfa) == ["message-outside-region"]


def test_validate_nested_region_warns():
    ccfa = parse_ccfa(doc([
        sym("q1", "q2", "A.f()", "entry", guard=event("go"), delivery="async"),
        eps("q2", "q3", "outer", "open"),
        eps("q3", "q4", "inner", "open"),
        sym("q4", "q5", "B.g()", "entry", guard={"kind": "api_call", "callsite": "inner"}),
        sym("q5", "q6", "B.g()", "exit"),
        eps("q6", "q7", "inner", "close"),
        eps("q7", "q8", "outer", "close"),
        sym("q8", "q1", "A.f()", "exit"),
    ]))
    assert codes(ccfa) == ["nested-region"]
    # stripping treats the outer region as the unit
    stripped = strip_api_regions(ccfa)
    assert stripped.callbacks == ("A.f()",)


def test_validate_unbounded_recursion():
    ccfa = parse_ccfa(doc([sym("q1", "q1", "A.f()", "entry"), sym("q1", "q2", "A.f()", "exit")]))
    assert "unbounded-nesting" in codes(ccfa)


def test_region_spans_fig2():
    ccfa = load("fig2.json")
    (span,) = region_spans(ccfa)
    assert span.region == "getWritableDatabase()"
    inside = {ccfa.transitions[j].label.callback for j in span.interior if ccfa.transitions[j].symbol}
    assert inside == {"DBHelper.onCreate()", "DBHelper.onUpgrade()", "DBHelper.onOpen()"}


def test_strip_api_regions_fig4_bypasses_loader():
    g = strip_api_regions(load("fig4.json"))
    assert "L.onCreateLoader()" not in g.callbacks
    assert not any(isinstance(t.label, Epsilon) for t in g.transitions)
    silent = [t for t in g.transitions if isinstance(t.label, Silent)]
    assert len(silent) == 1
    assert validate_ccfa(g) == []


def test_strip_api_regions_is_identity_without_regions():
    ccfa = load("fig5.json")
    assert strip_api_regions(ccfa) is ccfa


def test_strip_async_in_api_keeps_region_drops_message_callback():
    g = strip_async_in_api(load("fig6.json"))
    assert "CamAct$3.onPictureTaken()" not in g.callbacks
    assert any(t.is_bracket(Bracket.OPEN) for t in g.transitions)
    assert any(isinstance(t.label, Silent) for t in g.transitions)
    assert validate_ccfa(g) == []


def test_transforms_only_remove():
    for name in ALL_FIXTURES:
        ccfa = load(name)
        for g in (strip_api_regions(ccfa), strip_async_in_api(ccfa)):
            assert set(g.callbacks) <= set(ccfa.callbacks)
            assert set(g.states) <= set(ccfa.states)


def test_reachable_and_callbacks_order():
    ccfa = load("fig4.json")
    assert ccfa.callbacks[0] == "A.onCreate()"
    assert ccfa.reachable_states() == frozenset(ccfa.states)


def test_ccfa_constructor_checks():
    with pytest.raises(CcfaError, match="duplicate"):
        Ccfa(("a", "a"), "a")
    t = Transition("a", "b", entry("X.f()"), ApiCall("x"))
    with pytest.raises(CcfaError, match="dangling"):
        Ccfa(("a",), "a", (t,))
    assert Message("m").callsite == "m"
    assert (FIXTURES / "fig4.json").exists()
