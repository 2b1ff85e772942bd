"""Compare the compiled and pure-Python sequence matchers.

Builds a long simulated trace of a random automaton and matches every
required sequence of every criterion against it with both backends.

    python3 benchmarks/bench_matching.py --records 200000 --repeat 5
"""

import argparse
import random
import timeit

from cbcover import matching
from cbcover.ccfa import Point, Symbol


def workload(n_records, n_callbacks, n_patterns, seed):
    rng = random.Random(seed)
    callbacks = [f"C{i}.on{i}()" for i in range(n_callbacks)]
    stream = [Symbol(rng.choice(callbacks), rng.choice(list(Point))) for _ in range(n_records)]
    patterns = []
    for _ in range(n_patterns):
        # mostly realistic (taken from the stream), some absent
        if rng.random() < 0.8:
            length = rng.choice([2, 3, 5])
            start = rng.randrange(n_records - length)
            patterns.append(stream[start:start + length])
        else:
            patterns.append([Symbol("Missing.cb()", Point.ENTRY), Symbol(callbacks[0], Point.EXIT)])
    return stream, patterns


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--records", type=int, default=100_000)
    ap.add_argument("--callbacks", type=int, default=40)
    ap.add_argument("--patterns", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    stream, patterns = workload(args.records, args.callbacks, args.patterns, args.seed)
    print(f"stream {len(stream)} symbols, {len(patterns)} patterns, active backend: {matching.BACKEND}")
    py = min(timeit.repeat(lambda: matching.first_match_ends_py(stream, patterns), number=1, repeat=args.repeat))
    print(f"python  {py * 1000:9.1f} ms")
    if matching.BACKEND != "cython":
        print("cython  (extension not built)")
        return
    assert matching.first_match_ends_ext(stream, patterns) == matching.first_match_ends_py(stream, patterns)
    ext = min(timeit.repeat(lambda: matching.first_match_ends_ext(stream, patterns), number=1, repeat=args.repeat))
    print(f"cython  {ext * 1000:9.1f} ms")
    print(f"speedup {py / ext:9.1f}x  (end to end, including symbol encoding)")

    codes, coded = matching.encode(stream, patterns)
    kpy = min(timeit.repeat(lambda: matching._pymatch.first_match_ends(codes, coded), number=1, repeat=args.repeat))
    kext = min(timeit.repeat(lambda: matching._kernels.first_match_ends(codes, coded), number=1, repeat=args.repeat))
    print(f"kernel only: python {kpy * 1000:.1f} ms, cython {kext * 1000:.1f} ms, speedup {kpy / kext:.1f}x")


if __name__ == "__main__":
    main()
