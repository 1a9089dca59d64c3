"""ATL / ATL* model checking under uniform memoryless strategies.

A coalition picks one action per indistinguishability class of each member
(a :class:`StrategyProfile`); opponents are unrestricted. ``<<A>> psi`` holds
at ``s`` when some profile makes ``psi`` hold on every path that is
consistent with it:

* objective semantics: every path from ``s`` itself;
* subjective semantics: every path from every state some member of ``A``
  cannot tell apart from ``s``.

X, G and U bodies are decided per profile with local fixpoints over the
pruned successor relation; general ATL* bodies go through :mod:`app.ltl`.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
import os
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

from pydantic import BaseModel

from .errors import DialectError, InputError, ResourceError
from .logic import (
    Always,
    And,
    Atom,
    Bottom,
    Coalition,
    Dialect,
    Eventually,
    Formula,
    Next,
    Not,
    Or,
    Top,
    Until,
    check_dialect,
    is_state_formula,
    walk,
)
from .ltl import universal_states
from .model import ICGS, State
from .observability import inc_model_check, inc_profiles, inc_resource_error

logger = logging.getLogger(__name__)

MAX_PROFILES = int(os.getenv("MAX_PROFILES", "65536"))


class Semantics(str, Enum):
    OBJECTIVE = "objective"
    SUBJECTIVE = "subjective"


class CheckConfig(BaseModel):
    semantics: Semantics = Semantics.OBJECTIVE
    dialect: Dialect = Dialect.ATL
    workers: int = 1
    max_profiles: int = MAX_PROFILES


@dataclass(frozen=True)
class StrategyProfile:
    """``choices`` lists ``(agent, representative, action)`` in enumeration order."""

    choices: tuple[tuple[str, State, str], ...] = ()

    def action(self, m: ICGS, agent: str, state: State) -> str:
        rep = m.representative(agent, state)
        for a, r, act in self.choices:
            if a == agent and r == rep:
                return act
        raise KeyError((agent, state))

    def as_dict(self) -> dict[str, dict[State, str]]:
        out: dict[str, dict[State, str]] = {}
        for agent, rep, act in self.choices:
            out.setdefault(agent, {})[rep] = act
        return out

    def __str__(self) -> str:
        if not self.choices:
            return "{}"
        return ", ".join(f"{a}[{rep}]={act}" for a, rep, act in self.choices)


def _slots(m: ICGS, coalition: tuple[str, ...]) -> list[tuple[str, State, tuple[str, ...]]]:
    slots = []
    for a in sorted(coalition):
        for block in m.indist[a]:
            slots.append((a, block[0], m.protocol[(block[0], a)]))
    return slots


def count_profiles(m: ICGS, coalition: tuple[str, ...]) -> int:
    return math.prod(len(options) for _, _, options in _slots(m, coalition))


def uniform_strategies(m: ICGS, coalition: tuple[str, ...]) -> Iterator[StrategyProfile]:
    """Every uniform profile of ``coalition`` exactly once, in lexicographic order."""
    for a in coalition:
        if a not in m.agents:
            raise InputError(f"unknown agent {a!r} in coalition")
    slots = _slots(m, coalition)
    for combo in itertools.product(*(options for _, _, options in slots)):
        yield StrategyProfile(tuple((a, rep, act) for (a, rep, _), act in zip(slots, combo)))


def prune(m: ICGS, coalition: tuple[str, ...], profile: StrategyProfile) -> ICGS:
    """Restrict coalition members to their profile actions; others keep their protocol."""
    members = set(coalition)
    chosen = profile.as_dict()
    protocol = dict(m.protocol)
    for (s, a), allowed in m.protocol.items():
        if a in members:
            protocol[(s, a)] = (chosen[a][m.representative(a, s)],)
    transition = {
        (s, joint): t
        for (s, joint), t in m.transition.items()
        if all(act in protocol[(s, a)] for a, act in zip(m.agents, joint))
    }
    return dataclasses.replace(m, protocol=protocol, transition=transition)


def _pruned_successors(m: ICGS, coalition: tuple[str, ...], profile: StrategyProfile) -> dict[State, frozenset]:
    positions = [i for i, a in enumerate(m.agents) if a in set(coalition)]
    chosen = profile.as_dict()
    succ: dict[State, frozenset] = {}
    for s in m.states:
        required = {i: chosen[m.agents[i]][m.representative(m.agents[i], s)] for i in positions}
        succ[s] = frozenset(
            t for joint, t in m.edges.get(s, ()) if all(joint[i] == act for i, act in required.items())
        )
    return succ


def _pre(succ: dict[State, frozenset], target: frozenset) -> frozenset:
    return frozenset(s for s, ts in succ.items() if ts and ts <= target)


def _fresh(index: int) -> str:
    # '#' never occurs in identifiers
    return f"#{index}"


class Checker:
    """Bottom-up evaluator with memoised satisfying sets."""

    def __init__(self, m: ICGS, cfg: CheckConfig | None = None):
        self.m = m
        self.cfg = cfg or CheckConfig()
        self._cache: dict[Formula, frozenset] = {}

    # -- public ---------------------------------------------------------

    def holds(self, state: State, f: Formula) -> bool:
        if state not in self.m.states:
            raise InputError(f"unknown state {state!r}")
        return state in self.satisfying_states(f)

    def satisfying_states(self, f: Formula) -> frozenset:
        self._validate(f)
        return self._sat(f)

    def witness(self, state: State, f: Formula) -> StrategyProfile | None:
        """The least profile (enumeration order) that makes the top coalition hold at ``state``."""
        if not isinstance(f, Coalition):
            return None
        self._validate(f)
        for profile, winning in self._profiles(f):
            if self._covers(f.agents, state, winning):
                return profile
        return None

    # -- evaluation -----------------------------------------------------

    def _validate(self, f: Formula) -> None:
        check_dialect(f, self.cfg.dialect)
        if not is_state_formula(f):
            raise DialectError(f"{f} is a path formula; only state formulas can be checked")
        for node in walk(f):
            if isinstance(node, Atom) and node.name not in self.m.props and not node.name.startswith("#"):
                raise InputError(f"atom {node.name!r} is not declared in the model")
            if isinstance(node, Coalition):
                for a in node.agents:
                    if a not in self.m.agents:
                        raise InputError(f"unknown agent {a!r} in coalition")

    def _sat(self, f: Formula) -> frozenset:
        if f in self._cache:
            return self._cache[f]
        m = self.m
        if isinstance(f, Atom):
            result = frozenset(s for s in m.states if f.name in m.labels[s])
        elif isinstance(f, Top):
            result = frozenset(m.states)
        elif isinstance(f, Bottom):
            result = frozenset()
        elif isinstance(f, Not):
            result = frozenset(m.states) - self._sat(f.arg)
        elif isinstance(f, And):
            result = self._sat(f.left) & self._sat(f.right)
        elif isinstance(f, Or):
            result = self._sat(f.left) | self._sat(f.right)
        elif isinstance(f, Coalition):
            result = self._sat_coalition(f)
        else:
            raise DialectError(f"{f} is a path formula; only state formulas can be checked")
        self._cache[f] = result
        return result

    def _covers(self, coalition: tuple[str, ...], state: State, winning: frozenset) -> bool:
        if self.cfg.semantics is Semantics.OBJECTIVE or not coalition:
            return state in winning
        for a in coalition:
            if not set(self.m.class_index[a][state]) <= winning:
                return False
        return True

    def _sat_coalition(self, f: Coalition) -> frozenset:
        result: set = set()
        for _, winning in self._profiles(f):
            if self.cfg.semantics is Semantics.OBJECTIVE:
                result |= winning
            else:
                result.update(s for s in self.m.states if self._covers(f.agents, s, winning))
        return frozenset(result)

    def _profiles(self, f: Coalition) -> list[tuple[StrategyProfile, frozenset]]:
        """Winning region of every profile, in enumeration order."""
        total = count_profiles(self.m, f.agents)
        if total > self.cfg.max_profiles:
            inc_resource_error()
            raise ResourceError(
                f"coalition {list(f.agents)} has {total} uniform profiles, above the cap of "
                f"{self.cfg.max_profiles}",
                self.cfg.max_profiles,
            )
        inc_profiles(total)
        inc_model_check()
        body = self._prepare_body(f.body)
        profiles = list(uniform_strategies(self.m, f.agents))

        def evaluate(profile: StrategyProfile) -> frozenset:
            succ = _pruned_successors(self.m, f.agents, profile)
            return self._winning(succ, body)

        if self.cfg.workers > 1 and len(profiles) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                regions = list(pool.map(evaluate, profiles))
        else:
            regions = [evaluate(p) for p in profiles]
        return list(zip(profiles, regions))

    def _prepare_body(self, body: Formula):
        """Either ``(kind, operand sets)`` for X/G/U or ``("path", formula, labels)``."""
        if isinstance(body, Next) and is_state_formula(body.arg):
            return ("next", self._sat(body.arg))
        if isinstance(body, Always) and is_state_formula(body.arg):
            return ("always", self._sat(body.arg))
        if isinstance(body, Until) and is_state_formula(body.left) and is_state_formula(body.right):
            return ("until", self._sat(body.left), self._sat(body.right))
        if isinstance(body, Eventually) and is_state_formula(body.arg):
            return ("until", frozenset(self.m.states), self._sat(body.arg))
        if is_state_formula(body):
            return ("state", self._sat(body))
        return ("path", *self._abstract(body))

    def _abstract(self, body: Formula) -> tuple[Formula, dict[State, frozenset[str]]]:
        """Replace maximal state subformulas by fresh atoms and label the states with them."""
        sets: list[frozenset] = []
        seen: dict[Formula, str] = {}

        def visit(node: Formula) -> Formula:
            if is_state_formula(node):
                if node not in seen:
                    seen[node] = _fresh(len(sets))
                    sets.append(self._sat(node))
                return Atom(seen[node])
            if isinstance(node, (Not, Next, Always, Eventually)):
                return type(node)(visit(node.arg))
            if isinstance(node, (And, Or, Until)):
                return type(node)(visit(node.left), visit(node.right))
            raise DialectError(f"unexpected node {node!r} in a path formula")

        abstract = visit(body)
        labels = {
            s: frozenset(_fresh(i) for i, region in enumerate(sets) if s in region) for s in self.m.states
        }
        return abstract, labels

    def _winning(self, succ: dict[State, frozenset], body) -> frozenset:
        kind = body[0]
        if kind == "next":
            return _pre(succ, body[1])
        if kind == "always":
            region = body[1]
            while True:
                shrunk = region & _pre(succ, region)
                if shrunk == region:
                    return region
                region = shrunk
        if kind == "until":
            left, right = body[1], body[2]
            region = right
            while True:
                grown = right | (left & _pre(succ, region))
                if grown == region:
                    return region
                region = grown
        if kind == "state":
            return body[1]
        return universal_states(succ, body[2], body[1])


def _config(dialect: Dialect, cfg: CheckConfig | None) -> CheckConfig:
    if cfg is None:
        return CheckConfig(dialect=dialect)
    return cfg.model_copy(update={"dialect": dialect})


def check_atl(m: ICGS, state: State, f: Formula, cfg: CheckConfig | None = None) -> bool:
    return Checker(m, _config(Dialect.ATL, cfg)).holds(state, f)


def check_atlstar(m: ICGS, state: State, f: Formula, cfg: CheckConfig | None = None) -> bool:
    return Checker(m, _config(Dialect.ATLSTAR, cfg)).holds(state, f)


def check_path_universal(m_pruned: ICGS, state: State, psi: Formula) -> bool:
    """True iff every path of ``m_pruned`` from ``state`` satisfies ``psi``.

    ``psi`` must only use the model's propositions as atoms.
    """
    succ = {s: m_pruned.successors(s) for s in m_pruned.states}
    return state in universal_states(succ, m_pruned.labels, psi)


def check(m: ICGS, f: Formula, cfg: CheckConfig | None = None, states: list[State] | None = None):
    """Check ``f`` at ``states`` (default: every initial state, conjunctively).

    Returns ``(verdict, per-state verdicts, witness)``; the witness is the
    least profile for the first state when the verdict is true.
    """
    checker = Checker(m, cfg)
    targets = states if states else list(m.initial)
    per_state = {s: checker.holds(s, f) for s in targets}
    verdict = all(per_state.values())
    witness = checker.witness(targets[0], f) if verdict and targets else None
    logger.info("checked formula", extra={"formula": str(f), "verdict": verdict})
    return verdict, per_state, witness


def refine(m: ICGS, agent: str, state: State) -> ICGS:
    """Split ``state`` out of its class for ``agent`` (when it has one)."""
    blocks = []
    for block in m.indist[agent]:
        if state in block and len(block) > 1:
            blocks.append(tuple(s for s in block if s != state))
            blocks.append((state,))
        else:
            blocks.append(block)
    return m.with_indist(agent, blocks)
