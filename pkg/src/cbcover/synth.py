"""Seeded random CCFAs for property tests and benchmarks.

Generated automata are small (at most 12 states, 20 transitions and two API
regions) and built around *hub* states: every event callback is entered
asynchronously from a hub and returns to a hub.  The body of a callback may
call one framework API, represented as an epsilon region holding either
synchronous callbacks (possibly branching, possibly bypassed) or a single
message-posted callback.

With ``chained=True`` some callbacks return to an intermediate state that
synchronously starts another event callback, the way framework lifecycles
chain (``onCreate`` then ``onStart``).
"""

from __future__ import annotations

import random
from typing import List

from .ccfa import (
    ApiCall,
    Bracket,
    Category,
    Ccfa,
    Delivery,
    Epsilon,
    ExternalEvent,
    Message,
    Transition,
    entry,
    exit_,
)

MAX_STATES = 12
MAX_TRANSITIONS = 20
MAX_REGIONS = 2


class _Builder:
    def __init__(self):
        self.states: List[str] = []
        self.transitions: List[Transition] = []

    def state(self) -> str:
        s = f"q{len(self.states) + 1}"
        self.states.append(s)
        return s

    def add(self, *args, **kw) -> None:
        self.transitions.append(Transition(*args, **kw))

    def room(self, states: int, transitions: int) -> bool:
        return (len(self.states) + states <= MAX_STATES
                and len(self.transitions) + transitions <= MAX_TRANSITIONS)


def random_ccfa(seed: int, chained: bool = False) -> Ccfa:
    """A valid random CCFA; equal seeds give equal automata."""
    rng = random.Random(seed)
    b = _Builder()
    hubs = [b.state() for _ in range(rng.randint(1, 3))]
    reached = [hubs[0]]
    names = iter(f"C{i}.on{i}()" for i in range(100))
    regions = 0
    made = 0

    while True:
        unreached = [h for h in hubs if h not in reached]
        src = rng.choice(reached)
        dst = unreached[0] if unreached else rng.choice(hubs)

        body = "plain"
        if regions < MAX_REGIONS and rng.random() < 0.5:
            body = rng.choice(["sync", "sync", "message"])
        branch = body == "sync" and rng.random() < 0.4
        bypass = body == "sync" and rng.random() < 0.3
        chain = chained and rng.random() < 0.35
        need_s = {"plain": 1, "sync": 6 if branch else 5, "message": 5}[body] + (2 if chain else 0)
        need_t = {"plain": 2, "sync": 8 if branch else 6, "message": 6}[body] + (2 if chain else 0)
        need_t += int(bypass)
        if not b.room(need_s, need_t):
            if made >= 2 or not b.room(1, 2):
                break
            body, branch, bypass, chain = "plain", False, False, False

        cb = next(names)
        cat = rng.choice(list(Category))
        label = f"ev{made}"
        inside = b.state()
        b.add(src, inside, entry(cb), ExternalEvent(label, cat), Delivery.ASYNC)
        if body != "plain":
            region = f"api{regions}()"
            regions += 1
            r0 = b.state()
            b.add(inside, r0, Epsilon(region, Bracket.OPEN))
            r_end, after = b.state(), b.state()
            if body == "message":
                mid = b.state()
                m = next(names)
                b.add(r0, mid, entry(m), Message(f"post{regions}"), Delivery.ASYNC)
                b.add(mid, r_end, exit_(m))
            else:
                callees = [next(names)]
                if branch:
                    callees.append(next(names))
                for callee in callees:
                    mid = b.state()
                    b.add(r0, mid, entry(callee), ApiCall(region))
                    b.add(mid, r_end, exit_(callee))
                if bypass:
                    b.add(r0, after, Epsilon(region, Bracket.CLOSE))
            b.add(r_end, after, Epsilon(region, Bracket.CLOSE))
            inside = after
        if chain:
            link, nxt_inside = b.state(), b.state()
            b.add(inside, link, exit_(cb))
            follow = next(names)
            b.add(link, nxt_inside, entry(follow))
            b.add(nxt_inside, dst, exit_(follow))
        else:
            b.add(inside, dst, exit_(cb))
        if dst not in reached:
            reached.append(dst)
        made += 1
        if len(reached) == len(hubs) and rng.random() < 0.1:
            break

    # Hubs that were never connected are dropped (only possible when the budget ran out).
    used = {t.source for t in b.transitions} | {t.target for t in b.transitions} | {hubs[0]}
    states = tuple(s for s in b.states if s in used)
    return Ccfa(states, hubs[0], tuple(b.transitions))
