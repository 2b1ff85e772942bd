"""Property suites over the fixtures, simulated traces and random automata."""

from hypothesis import given, settings
from hypothesis import strategies as st

from cbcover.ccfa import Kind, Point, classify_callbacks, dump_ccfa, parse_ccfa, validate_ccfa
from cbcover.coverage import BugEvent, correlate_bugs, coverage_report, time_series
from cbcover.seqgen import GENERATORS, Criterion, RequiredSet, gen_event_event, gen_gui_pairs
from cbcover.simulate import RandomRun, replay_check, simulate
from cbcover.synth import MAX_STATES, MAX_TRANSITIONS, random_ccfa
from cbcover.trace import (
    CRITERION_KEEP,
    Trace,
    TraceRecord,
    covered_set,
    filter_by_kind,
    filter_for,
    parse_trace,
)
from helpers import FIXTURES, load

FIXTURE_CCFAS = ["fig2.json", "fig4.json", "fig5.json", "fig6.json", "fig6_second_async.json", "session.json"]
TRACE_FILES = ["fig4_trace.txt", "fig4_trace_events.txt", "empty.txt", "session.trace.txt"]

_cache = {}


def cached(name):
    if name not in _cache:
        ccfa = load(name)
        _cache[name] = (ccfa, classify_callbacks(ccfa), {c: GENERATORS[c](ccfa) for c in Criterion})
    return _cache[name]


fixture_names = st.sampled_from(FIXTURE_CCFAS)
seeds = st.integers(min_value=0, max_value=10_000)
defer = st.floats(min_value=0.0, max_value=1.0)
criteria = st.sampled_from(list(Criterion))


@given(fixture_names, st.lists(seeds, min_size=1, max_size=4), seeds, criteria)
@settings(max_examples=60, deadline=None)
def test_coverage_monotone_under_trace_union(name, base_seeds, extra_seed, criterion):
    ccfa, kinds, req = cached(name)
    traces = [simulate(ccfa, RandomRun(s, 10)) for s in base_seeds]
    more = traces + [simulate(ccfa, RandomRun(extra_seed, 10))]
    before = coverage_report(req[criterion], traces, kinds)
    after = coverage_report(req[criterion], more, kinds)
    assert set(before.covered) <= set(after.covered)
    assert before.ratio <= after.ratio


@given(fixture_names, seeds, st.integers(min_value=0, max_value=30), defer, criteria)
@settings(max_examples=60, deadline=None)
def test_ratio_bounds_and_partition(name, seed, steps, p, criterion):
    ccfa, kinds, req = cached(name)
    rep = coverage_report(req[criterion], [simulate(ccfa, RandomRun(seed, steps, p))], kinds)
    assert 0.0 <= rep.ratio <= 1.0
    assert set(rep.covered) | set(rep.uncovered) == set(req[criterion])
    assert not set(rep.covered) & set(rep.uncovered)
    if rep.total:
        assert rep.ratio == len(rep.covered) / rep.total


@given(fixture_names, seeds, criteria)
@settings(max_examples=60, deadline=None)
def test_filter_idempotent(name, seed, criterion):
    ccfa, kinds, _ = cached(name)
    t = simulate(ccfa, RandomRun(seed, 15))
    once = filter_for(criterion, t, kinds)
    assert filter_for(criterion, once, kinds) == once
    keep = CRITERION_KEEP[criterion]
    if keep is not None:
        assert all(kinds[r.callback] in keep for r in once)


@given(seeds, seeds, st.integers(min_value=0, max_value=25), defer, st.booleans())
@settings(max_examples=60, deadline=None)
def test_simulate_replay_round_trip(ccfa_seed, run_seed, steps, p, chained):
    ccfa = random_ccfa(ccfa_seed, chained)
    t = simulate(ccfa, RandomRun(run_seed, steps, p))
    assert replay_check(ccfa, t)
    assert [r.timestamp for r in t] == list(range(len(t)))


@given(fixture_names, seeds, st.integers(min_value=0, max_value=25), defer)
@settings(max_examples=40, deadline=None)
def test_simulate_replay_round_trip_fixtures(name, seed, steps, p):
    ccfa, _, _ = cached(name)
    assert replay_check(ccfa, simulate(ccfa, RandomRun(seed, steps, p)))


@given(st.sampled_from(FIXTURE_CCFAS))
@settings(max_examples=20, deadline=None)
def test_parse_serialize_round_trip_ccfa(name):
    text = (FIXTURES / name).read_text()
    ccfa = parse_ccfa(text)
    assert parse_ccfa(dump_ccfa(ccfa)) == ccfa


@given(st.sampled_from(TRACE_FILES))
@settings(max_examples=20, deadline=None)
def test_parse_serialize_round_trip_traces(name):
    t = parse_trace((FIXTURES / name).read_text())
    assert parse_trace(t.render()) == t


@given(fixture_names, criteria)
@settings(max_examples=30, deadline=None)
def test_parse_serialize_round_trip_sequences(name, criterion):
    _, _, req = cached(name)
    assert RequiredSet.parse(req[criterion].render(), criterion) == req[criterion]


@given(seeds, st.booleans())
@settings(max_examples=60, deadline=None)
def test_random_ccfas_are_valid_and_small(seed, chained):
    ccfa = random_ccfa(seed, chained)
    assert validate_ccfa(ccfa) == []
    assert len(ccfa.states) <= MAX_STATES and len(ccfa.transitions) <= MAX_TRANSITIONS
    assert random_ccfa(seed, chained) == ccfa


@given(seeds, st.booleans())
@settings(max_examples=60, deadline=None)
def test_generator_invariants_on_random_ccfas(seed, chained):
    ccfa = random_ccfa(seed, chained)
    gui = {s.key for s in gen_gui_pairs(ccfa)}
    assert gui <= {s.key for s in gen_event_event(ccfa)}
    assert len(GENERATORS[Criterion.EVENT_API_ASYNC](ccfa)) % 2 == 0


@given(fixture_names, st.lists(seeds, min_size=1, max_size=3),
       st.lists(st.tuples(st.integers(min_value=0, max_value=60), st.sampled_from("abc")), max_size=6),
       st.sampled_from([0.003, 0.005, 0.01]))
@settings(max_examples=40, deadline=None)
def test_time_series_monotone_and_correlation_bounded(name, run_seeds, bugs, window):
    ccfa, kinds, req = cached(name)
    traces = [simulate(ccfa, RandomRun(s, 8)) for s in run_seeds]
    series = time_series(req, traces, [BugEvent(t, b) for t, b in bugs], window, kinds)
    for a, b in zip(series.snapshots, series.snapshots[1:]):
        for c in Criterion:
            assert a.ratios[c] <= b.ratios[c]
    final = {c: coverage_report(req[c], traces, kinds).ratio for c in Criterion}
    assert series.snapshots[-1].ratios == final
    corr = correlate_bugs(series)
    assert all(0 <= n <= len(series.bugs) for n in corr.values())


@given(st.lists(st.tuples(st.sampled_from(["A.onCreate()", "A.onStart()", "A.onStop()",
                                           "CList.onClick()", "L.onCreateLoader()"]),
                          st.booleans()), max_size=30))
@settings(max_examples=60, deadline=None)
def test_filtered_coverage_subset_of_required(records):
    ccfa, kinds, req = cached("fig4.json")
    t = Trace(tuple(TraceRecord(i, cb, Point.ENTRY if e else Point.EXIT) for i, (cb, e) in enumerate(records)))
    for c in Criterion:
        assert covered_set(req[c], [t], kinds) <= set(req[c])
    events = filter_by_kind(t, {Kind.EVENT}, kinds)
    assert len(events) <= len(t)
