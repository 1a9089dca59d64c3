"""Independent reference checker for small instances.

Shares no evaluation code with :mod:`app.checker`. For every coalition
subformula it enumerates uniform profiles itself, builds the strategy-consistent
successor relation from the raw transition table, and enumerates lasso
paths (a stem plus a loop back into it). Path formulas are evaluated directly
on each ultimately periodic word.

Bounds: at most 6 states, 256 profiles per coalition and 2 temporal
operators per coalition body. With ``t`` temporal operators in the body each
state occurs at most ``max(1, t)`` times on an enumerated lasso.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator

from .checker import Semantics
from .errors import InputError, ResourceError
from .logic import (
    Always,
    And,
    Atom,
    Bottom,
    Coalition,
    Eventually,
    Formula,
    Next,
    Not,
    Or,
    Top,
    Until,
    count_nodes,
    TEMPORAL,
)
from .model import ICGS, State

MAX_STATES = 6
MAX_PROFILES = 256
MAX_TEMPORAL = 2


def _profiles(m: ICGS, coalition: tuple[str, ...]) -> Iterator[dict[str, dict[State, str]]]:
    slots = []
    for a in coalition:
        seen: set[State] = set()
        for s in m.states:
            block = tuple(sorted(m.class_index[a][s]))
            if block in seen:
                continue
            seen.add(block)
            slots.append((a, block, sorted(m.protocol[(s, a)])))
    total = 1
    for _, _, options in slots:
        total *= len(options)
    if total > MAX_PROFILES:
        raise ResourceError(f"oracle limited to {MAX_PROFILES} profiles, got {total}", MAX_PROFILES)
    for combo in itertools.product(*(options for _, _, options in slots)):
        profile: dict[str, dict[State, str]] = {a: {} for a in coalition}
        for (a, block, _), act in zip(slots, combo):
            for s in block:
                profile[a][s] = act
        yield profile


def _successors(m: ICGS, coalition: tuple[str, ...], profile) -> dict[State, list[State]]:
    succ: dict[State, list[State]] = {s: [] for s in m.states}
    for (s, joint), t in m.transition.items():
        if all(profile[a][s] == act for a, act in zip(m.agents, joint) if a in coalition):
            if t not in succ[s]:
                succ[s].append(t)
    return {s: sorted(ts) for s, ts in succ.items()}


def _lassos(succ: dict[State, list[State]], start: State, visits: int) -> Iterator[tuple[tuple[State, ...], int]]:
    """Lassos from ``start``: the path and the index its last state loops back to."""
    limit = visits * len(succ)
    path = [start]
    counts = {start: 1}

    def extend() -> Iterator[tuple[tuple[State, ...], int]]:
        last = path[-1]
        for t in succ[last]:
            for j, s in enumerate(path):
                if s == t:
                    yield tuple(path), j
            if counts.get(t, 0) < visits and len(path) < limit:
                path.append(t)
                counts[t] = counts.get(t, 0) + 1
                yield from extend()
                counts[t] -= 1
                path.pop()

    yield from extend()


def _evaluate_word(f: Formula, word: tuple[frozenset, ...], loop: int) -> bool:
    """Truth of ``f`` at position 0 of ``word[:loop] (word[loop:])^omega``."""
    n = len(word)
    nxt = [i + 1 if i + 1 < n else loop for i in range(n)]
    memo: dict[Formula, list[bool]] = {}

    def values(g: Formula) -> list[bool]:
        if g in memo:
            return memo[g]
        if isinstance(g, Atom):
            out = [g.name in letter for letter in word]
        elif isinstance(g, Top):
            out = [True] * n
        elif isinstance(g, Bottom):
            out = [False] * n
        elif isinstance(g, Not):
            out = [not x for x in values(g.arg)]
        elif isinstance(g, And):
            out = [x and y for x, y in zip(values(g.left), values(g.right))]
        elif isinstance(g, Or):
            out = [x or y for x, y in zip(values(g.left), values(g.right))]
        elif isinstance(g, Next):
            inner = values(g.arg)
            out = [inner[nxt[i]] for i in range(n)]
        elif isinstance(g, Eventually):
            out = values(Until(Top(), g.arg))
        elif isinstance(g, Always):
            out = [not x for x in values(Until(Top(), Not(g.arg)))]
        elif isinstance(g, Until):
            left, right = values(g.left), values(g.right)
            out = list(right)
            changed = True
            while changed:
                changed = False
                for i in range(n):
                    if not out[i] and left[i] and out[nxt[i]]:
                        out[i] = True
                        changed = True
        else:
            raise InputError(f"coalitions must be evaluated before path formulas: {g!r}")
        memo[g] = out
        return out

    return values(f)[0]


class _Oracle:
    def __init__(self, m: ICGS, semantics: Semantics):
        self.m = m
        self.semantics = semantics
        self.cache: dict[Formula, frozenset] = {}

    def sat(self, f: Formula) -> frozenset:
        if f in self.cache:
            return self.cache[f]
        m = self.m
        if isinstance(f, Atom):
            out = frozenset(s for s in m.states if f.name in m.labels[s])
        elif isinstance(f, Top):
            out = frozenset(m.states)
        elif isinstance(f, Bottom):
            out = frozenset()
        elif isinstance(f, Not):
            out = frozenset(m.states) - self.sat(f.arg)
        elif isinstance(f, And):
            out = self.sat(f.left) & self.sat(f.right)
        elif isinstance(f, Or):
            out = self.sat(f.left) | self.sat(f.right)
        elif isinstance(f, Coalition):
            out = self.coalition(f)
        else:
            raise InputError(f"{f} is not a state formula")
        self.cache[f] = out
        return out

    def _lift(self, f: Formula, names: dict[Formula, str]) -> Formula:
        """Replace coalition subformulas by marker atoms, evaluating them first."""
        if isinstance(f, Coalition):
            if f not in names:
                names[f] = f"@{len(names)}"
            return Atom(names[f])
        if isinstance(f, (Not, Next, Always, Eventually)):
            return type(f)(self._lift(f.arg, names))
        if isinstance(f, (And, Or, Until)):
            return type(f)(self._lift(f.left, names), self._lift(f.right, names))
        return f

    def coalition(self, f: Coalition) -> frozenset:
        m = self.m
        temporal = count_nodes(f.body, TEMPORAL) - sum(
            count_nodes(c.body, TEMPORAL) for c in _direct_coalitions(f.body)
        )
        if temporal > MAX_TEMPORAL:
            raise ResourceError(
                f"oracle limited to {MAX_TEMPORAL} temporal operators per coalition body", MAX_TEMPORAL
            )
        names: dict[Formula, str] = {}
        body = self._lift(f.body, names)
        marks = {s: frozenset(name for g, name in names.items() if s in self.sat(g)) for s in m.states}
        letters = {s: m.labels[s] | marks[s] for s in m.states}
        visits = max(1, temporal)

        result: set[State] = set()
        for profile in _profiles(m, f.agents):
            succ = _successors(m, f.agents, profile)
            memo: dict[tuple, bool] = {}

            def all_paths(start: State) -> bool:
                for path, loop in _lassos(succ, start, visits):
                    word = tuple(letters[s] for s in path)
                    key = (word, loop)
                    if key not in memo:
                        memo[key] = _evaluate_word(body, word, loop)
                    if not memo[key]:
                        return False
                return True

            winning = {s for s in m.states if all_paths(s)}
            for s in m.states:
                if self.semantics is Semantics.OBJECTIVE or not f.agents:
                    scope = {s}
                else:
                    scope = set().union(*(m.class_index[a][s] for a in f.agents))
                if scope <= winning:
                    result.add(s)
        return frozenset(result)


def _direct_coalitions(f: Formula) -> list[Coalition]:
    if isinstance(f, Coalition):
        return [f]
    found = []
    for attr in ("arg", "left", "right"):
        child = getattr(f, attr, None)
        if child is not None:
            found.extend(_direct_coalitions(child))
    return found


def oracle_check(m: ICGS, state: State, f: Formula, semantics: Semantics = Semantics.OBJECTIVE) -> bool:
    if len(m.states) > MAX_STATES:
        raise ResourceError(f"oracle limited to {MAX_STATES} states", MAX_STATES)
    if state not in m.states:
        raise InputError(f"unknown state {state!r}")
    return state in _Oracle(m, Semantics(semantics)).sat(f)


def perfect_information_check(m: ICGS, state: State, f: Formula) -> bool:
    """Classical state-based fixpoints; meaningful for identity partitions and ATL formulas."""

    def pre(coalition: tuple[str, ...], target: frozenset) -> frozenset:
        out = set()
        positions = [i for i, a in enumerate(m.agents) if a in coalition]
        for s in m.states:
            moves: dict[tuple, list[State]] = {}
            for (src, joint), t in m.transition.items():
                if src == s:
                    moves.setdefault(tuple(joint[i] for i in positions), []).append(t)
            if any(all(t in target for t in ts) for ts in moves.values()):
                out.add(s)
        return frozenset(out)

    def sat(g: Formula) -> frozenset:
        if isinstance(g, Atom):
            return frozenset(s for s in m.states if g.name in m.labels[s])
        if isinstance(g, Top):
            return frozenset(m.states)
        if isinstance(g, Bottom):
            return frozenset()
        if isinstance(g, Not):
            return frozenset(m.states) - sat(g.arg)
        if isinstance(g, And):
            return sat(g.left) & sat(g.right)
        if isinstance(g, Or):
            return sat(g.left) | sat(g.right)
        if isinstance(g, Coalition):
            body = g.body
            if isinstance(body, Next):
                return pre(g.agents, sat(body.arg))
            if isinstance(body, Always):
                inv = sat(body.arg)
                region = frozenset(m.states)
                while True:
                    shrunk = inv & pre(g.agents, region)
                    if shrunk == region:
                        return region
                    region = shrunk
            if isinstance(body, Until):
                left, right = sat(body.left), sat(body.right)
                region = frozenset()
                while True:
                    grown = right | (left & pre(g.agents, region))
                    if grown == region:
                        return region
                    region = grown
        raise InputError(f"{g} is outside the ATL fragment")

    return state in sat(f)
