"""Pure-Python contiguous pattern matching over encoded symbol streams."""

from typing import Dict, List, Sequence, Tuple


def first_match_ends(codes: Sequence[int], patterns: Sequence[Sequence[int]]) -> List[int]:
    """Index of the last element of each pattern's earliest occurrence, or -1."""
    result = [-1] * len(patterns)
    wanted: Dict[Tuple[int, ...], List[int]] = {}
    for i, p in enumerate(patterns):
        if len(p) == 0:
            continue
        wanted.setdefault(tuple(p), []).append(i)
    n = len(codes)
    for length in sorted({len(k) for k in wanted}):
        keys = {k for k in wanted if len(k) == length}
        for end in range(length - 1, n):
            key = tuple(codes[end - length + 1:end + 1])
            if key in keys:
                for i in wanted[key]:
                    result[i] = end
                keys.discard(key)
                if not keys:
                    break
    return result
