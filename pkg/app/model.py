"""Explicit imperfect-information concurrent game structures (ICGS).

An :class:`ICGS` is an immutable value. Every collection is stored as a
sorted tuple (or a dict keyed by sorted identifiers) so that iteration order
is lexicographic and reproducible across runs. Joint actions are tuples that
follow the order of :attr:`ICGS.agents`.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import networkx as nx
from pydantic import BaseModel

from .errors import InputError, ProtocolError

logger = logging.getLogger(__name__)

State = str
Agent = str
Action = str
JointAction = tuple[Action, ...]


@dataclass(frozen=True)
class ICGS:
    agents: tuple[Agent, ...]
    actions: Mapping[Agent, tuple[Action, ...]]
    states: tuple[State, ...]
    initial: tuple[State, ...]
    protocol: Mapping[tuple[State, Agent], tuple[Action, ...]]
    transition: Mapping[tuple[State, JointAction], State]
    indist: Mapping[Agent, tuple[tuple[State, ...], ...]]
    labels: Mapping[State, frozenset[str]]
    props: tuple[str, ...]

    @classmethod
    def build(
        cls,
        *,
        agents: Iterable[Agent],
        actions: Mapping[Agent, Iterable[Action]],
        states: Iterable[State],
        initial: Iterable[State],
        transition: Mapping[tuple[State, Iterable[Action]], State],
        indist: Mapping[Agent, Iterable[Iterable[State]]] | None = None,
        protocol: Mapping[tuple[State, Agent], Iterable[Action]] | None = None,
        labels: Mapping[State, Iterable[str]] | None = None,
        props: Iterable[str] | None = None,
    ) -> "ICGS":
        """Normalise loosely typed input into a canonical ICGS.

        Missing protocol entries default to the agent's full action set and a
        missing indistinguishability entry defaults to the identity partition.
        When ``props`` is omitted the propositions are the union of all labels.
        Nothing is validated here; see :func:`validate_icgs`.
        """
        agents_t = tuple(sorted(agents))
        actions_d = {a: tuple(sorted(actions.get(a, ()))) for a in agents_t}
        states_t = tuple(sorted(states))
        initial_t = tuple(sorted(initial))

        proto: dict[tuple[State, Agent], tuple[Action, ...]] = {}
        given = protocol or {}
        for s in states_t:
            for a in agents_t:
                if (s, a) in given:
                    proto[(s, a)] = tuple(sorted(given[(s, a)]))
                else:
                    proto[(s, a)] = actions_d[a]

        partitions: dict[Agent, tuple[tuple[State, ...], ...]] = {}
        given_indist = indist or {}
        for a in agents_t:
            if a in given_indist:
                blocks = [tuple(sorted(block)) for block in given_indist[a]]
                partitions[a] = tuple(sorted((b for b in blocks if b), key=lambda b: b[0]))
            else:
                partitions[a] = tuple((s,) for s in states_t)

        label_map = {s: frozenset((labels or {}).get(s, ())) for s in states_t}
        for s, atoms in (labels or {}).items():
            if s not in label_map:
                # keep unknown states visible to validation
                label_map[s] = frozenset(atoms)
        if props is None:
            props_t = tuple(sorted(set().union(*label_map.values()))) if label_map else ()
        else:
            props_t = tuple(sorted(props))

        trans = {(s, tuple(joint)): t for (s, joint), t in transition.items()}
        return cls(
            agents=agents_t,
            actions=actions_d,
            states=states_t,
            initial=initial_t,
            protocol=proto,
            transition=dict(sorted(trans.items())),
            indist=partitions,
            labels=label_map,
            props=props_t,
        )

    @cached_property
    def class_index(self) -> dict[Agent, dict[State, tuple[State, ...]]]:
        """``class_index[a][s]`` is the block of ``indist[a]`` holding ``s``."""
        index: dict[Agent, dict[State, tuple[State, ...]]] = {}
        for a, blocks in self.indist.items():
            index[a] = {s: block for block in blocks for s in block}
        return index

    @cached_property
    def edges(self) -> dict[State, tuple[tuple[JointAction, State], ...]]:
        out: dict[State, list[tuple[JointAction, State]]] = {s: [] for s in self.states}
        for (s, joint), t in self.transition.items():
            out.setdefault(s, []).append((joint, t))
        return {s: tuple(sorted(pairs)) for s, pairs in out.items()}

    def representative(self, agent: Agent, state: State) -> State:
        return self.class_index[agent][state][0]

    def classes(self, agent: Agent) -> tuple[tuple[State, ...], ...]:
        return self.indist[agent]

    def successors(self, state: State) -> frozenset[State]:
        return frozenset(t for _, t in self.edges.get(state, ()))

    def transition_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.states)
        graph.add_edges_from((s, t) for (s, _), t in self.transition.items())
        return graph

    def reachable_states(self) -> frozenset[State]:
        graph = self.transition_graph()
        seen: set[State] = set()
        for s0 in self.initial:
            if s0 in graph:
                seen.add(s0)
                seen |= nx.descendants(graph, s0)
        return frozenset(seen)

    def with_identity_indist(self) -> "ICGS":
        return dataclasses.replace(
            self, indist={a: tuple((s,) for s in self.states) for a in self.agents}
        )

    def with_indist(self, agent: Agent, blocks: Iterable[Iterable[State]]) -> "ICGS":
        partitions = dict(self.indist)
        normalised = [tuple(sorted(b)) for b in blocks]
        partitions[agent] = tuple(sorted((b for b in normalised if b), key=lambda b: b[0]))
        return dataclasses.replace(self, indist=partitions)


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class Violation(BaseModel):
    code: str
    location: str
    message: str
    severity: Severity = Severity.ERROR


class ValidationReport(BaseModel):
    violations: list[Violation] = []

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == Severity.ERROR]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == Severity.WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        return "; ".join(f"{v.location}: {v.message}" for v in self.violations)


def _duplicates(items: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dup: list[str] = []
    for item in items:
        if item in seen and item not in dup:
            dup.append(item)
        seen.add(item)
    return dup


def validate_icgs(m: ICGS) -> ValidationReport:
    """Check every structural invariant of ``m``.

    Violations are returned as data, one entry per problem and location, in
    a deterministic order.
    """
    out: list[Violation] = []

    def add(code: str, location: str, message: str) -> None:
        out.append(Violation(code=code, location=location, message=message))

    for kind, items in (("agent", m.agents), ("state", m.states), ("prop", m.props)):
        for name in _duplicates(items):
            add("duplicate", f"{kind} {name}", f"{kind} {name!r} declared twice")
    for a in m.agents:
        for name in _duplicates(m.actions[a]):
            add("duplicate", f"actions {a}", f"action {name!r} declared twice")
        if not m.actions[a]:
            add("no-actions", f"actions {a}", f"agent {a!r} has no actions")

    state_set = set(m.states)
    if not m.initial:
        add("no-initial", "initial", "the set of initial states is empty")
    for s in m.initial:
        if s not in state_set:
            add("unknown-state", "initial", f"initial state {s!r} is not declared")

    for (s, a), allowed in m.protocol.items():
        loc = f"protocol {s} {a}"
        if not allowed:
            add("empty-protocol", loc, "protocol allows no action")
        for act in allowed:
            if act not in m.actions.get(a, ()):
                add("unknown-action", loc, f"action {act!r} is not an action of {a!r}")

    allowed_joints: set[tuple[State, JointAction]] = set()
    for s in m.states:
        for joint in joint_actions(m, s):
            allowed_joints.add((s, joint))
            if (s, joint) not in m.transition:
                add("missing-transition", f"trans {s} ({','.join(joint)})",
                    "no successor for protocol-allowed joint action")
    for (s, joint), t in m.transition.items():
        loc = f"trans {s} ({','.join(joint)})"
        if s not in state_set:
            add("unknown-state", loc, f"source state {s!r} is not declared")
            continue
        if len(joint) != len(m.agents):
            add("joint-arity", loc, f"expected {len(m.agents)} actions, got {len(joint)}")
            continue
        if (s, joint) not in allowed_joints:
            add("disallowed-transition", loc, "joint action is not allowed by the protocol")
        if t not in state_set:
            add("unknown-state", loc, f"target state {t!r} is not declared")

    for a in m.agents:
        blocks = m.indist.get(a, ())
        seen: dict[State, int] = {}
        for block in blocks:
            for s in block:
                seen[s] = seen.get(s, 0) + 1
                if s not in state_set:
                    add("unknown-state", f"indist {a}", f"state {s!r} is not declared")
        for s in m.states:
            count = seen.get(s, 0)
            if count != 1:
                add("not-a-partition", f"indist {a}",
                    f"state {s!r} belongs to {count} classes")
        for block in blocks:
            known = [s for s in block if s in state_set]
            protocols = {m.protocol.get((s, a)) for s in known}
            if len(protocols) > 1:
                add("non-uniform-protocol", f"indist {a} {{{' '.join(block)}}}",
                    "indistinguishable states have different protocols")

    prop_set = set(m.props)
    for s, atoms in m.labels.items():
        if s not in state_set:
            add("unknown-state", f"labels {s}", f"state {s!r} is not declared")
        for p in sorted(atoms - prop_set):
            add("undeclared-prop", f"labels {s}", f"proposition {p!r} is not declared")
    return ValidationReport(violations=out)


def equivalence_class(m: ICGS, agent: Agent, state: State) -> frozenset[State]:
    if agent not in m.indist:
        raise InputError(f"unknown agent {agent!r}")
    if state not in m.states:
        raise InputError(f"unknown state {state!r}")
    try:
        return frozenset(m.class_index[agent][state])
    except KeyError:
        raise InputError(f"state {state!r} is not covered by the partition of {agent!r}")


def joint_actions(m: ICGS, state: State) -> Iterator[JointAction]:
    """Protocol-allowed joint actions at ``state`` in lexicographic order."""
    return itertools.product(*(m.protocol[(state, a)] for a in m.agents))


def successor(m: ICGS, state: State, joint: Iterable[Action]) -> State:
    joint = tuple(joint)
    if state not in m.states:
        raise InputError(f"unknown state {state!r}")
    if len(joint) != len(m.agents):
        raise InputError(f"expected {len(m.agents)} actions, got {len(joint)}")
    for a, act in zip(m.agents, joint):
        if act not in m.protocol[(state, a)]:
            raise ProtocolError(f"action {act!r} of agent {a!r} is not allowed at {state!r}", a)
    try:
        return m.transition[(state, joint)]
    except KeyError:
        raise InputError(f"no transition from {state!r} under ({','.join(joint)})")


def close_partition(states: Iterable[State], blocks: Iterable[Iterable[State]]) -> tuple[tuple[State, ...], ...]:
    """Reflexive, symmetric and transitive closure of the relation the blocks generate."""
    graph = nx.Graph()
    graph.add_nodes_from(states)
    for block in blocks:
        block = list(block)
        graph.add_nodes_from(block)
        graph.add_edges_from(zip(block, block[1:]))
    closed = (tuple(sorted(component)) for component in nx.connected_components(graph))
    return tuple(sorted(closed, key=lambda b: b[0]))
