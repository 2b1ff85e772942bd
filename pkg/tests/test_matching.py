import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbcover import matching


def naive(stream, patterns):
    out = []
    for p in patterns:
        end = -1
        if p:
            for i in range(len(stream) - len(p) + 1):
                if list(stream[i:i + len(p)]) == list(p):
                    end = i + len(p) - 1
                    break
        out.append(end)
    return out


needs_ext = pytest.mark.skipif(matching.BACKEND != "cython", reason="compiled kernel not built")

streams = st.lists(st.sampled_from("abcde"), max_size=60)
pattern_lists = st.lists(st.lists(st.sampled_from("abcdef"), min_size=0, max_size=5), max_size=12)


def test_examples():
    stream = list("xabcabd")
    assert matching.first_match_ends(stream, [list("ab"), list("abd"), list("zz"), [], list("x")]) == [2, 6, -1, -1, 0]


def test_encode_marks_unused_symbols():
    codes, pats = matching.encode(list("qab"), [list("ab")])
    assert codes == [-1, 0, 1]
    assert pats == [[0, 1]]


@given(streams, pattern_lists)
@settings(max_examples=300, deadline=None)
def test_python_backend_matches_naive(stream, patterns):
    assert matching.first_match_ends_py(stream, patterns) == naive(stream, patterns)


@needs_ext
@given(streams, pattern_lists)
@settings(max_examples=300, deadline=None)
def test_backends_agree(stream, patterns):
    assert matching.first_match_ends_ext(stream, patterns) == matching.first_match_ends_py(stream, patterns)


@needs_ext
def test_backend_is_compiled_when_built():
    assert matching.BACKEND == "cython"


def test_duplicate_patterns_share_result():
    assert matching.first_match_ends(list("aab"), [list("ab"), list("ab")]) == [2, 2]


def test_fallback_selected_when_kernel_missing(monkeypatch):
    stream, patterns = list("abcabc"), [list("ca"), list("cc")]
    expected = matching.first_match_ends(stream, patterns)
    monkeypatch.setattr(matching, "_kernels", None)
    assert matching.first_match_ends(stream, patterns) == expected == [3, -1]
    with pytest.raises(RuntimeError):
        matching.first_match_ends_ext(stream, patterns)
