"""Earliest contiguous occurrences of symbol patterns in a symbol stream.

The compiled kernel is used when the extension was built; otherwise the
pure-Python implementation is selected at import.
"""

from typing import Dict, Hashable, List, Sequence

from . import _pymatch

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKEND = "cython" if _kernels is not None else "python"


def encode(stream: Sequence[Hashable], patterns: Sequence[Sequence[Hashable]]):
    """Map symbols to dense integer codes; symbols absent from every pattern become -1."""
    vocab: Dict[Hashable, int] = {}
    coded_patterns = [[vocab.setdefault(s, len(vocab)) for s in p] for p in patterns]
    coded_stream = [vocab.get(s, -1) for s in stream]
    return coded_stream, coded_patterns


def first_match_ends_py(stream, patterns) -> List[int]:
    return _pymatch.first_match_ends(*encode(stream, patterns))


def first_match_ends_ext(stream, patterns) -> List[int]:
    if _kernels is None:
        raise RuntimeError("compiled kernel not available")
    return _kernels.first_match_ends(*encode(stream, patterns))


def first_match_ends(stream, patterns) -> List[int]:
    """For each pattern, the index of the last element of its earliest occurrence, or -1."""
    impl = _kernels if _kernels is not None else _pymatch
    return impl.first_match_ends(*encode(stream, patterns))
