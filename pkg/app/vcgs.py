"""Guarded-command game structures with visibility control (vCGS).

Execution model:

* A :class:`GlobalState` is the set of true atoms plus the set of
  ``(atom, observer)`` visibility pairs. Owners always see their own atoms.
* Init phase: the environment's init commands fire first, then every other
  agent's init commands, evaluated after the environment's effects. An
  agent's init commands are grouped into write-conflict components and one
  enabled command fires per component (none if none is enabled).
* Forward round: the init phase closes with every agent that has an
  enabled update command named ``fwd`` firing it once. Unfolding starts from
  the states after this round, so that the first environment transition
  lands on the second tick.
* Update phase: synchronous. Every agent fires one enabled update command,
  or skips when none is enabled. Unassigned atoms and flags keep their value.
"""

from __future__ import annotations

import itertools
import logging
import os
from collections import Counter, deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import networkx as nx
from pydantic import BaseModel

from .errors import ContractError, InputError, ResourceError
from .logic import And, Atom, Bottom, Formula, Not, Or, Top, atoms_of
from .model import ICGS, Severity, ValidationReport, Violation
from .observability import inc_resource_error, inc_unfolded_states

logger = logging.getLogger(__name__)

UNFOLD_STATE_BOUND = int(os.getenv("UNFOLD_STATE_BOUND", "20000"))
SKIP = "skip"
FORWARD = "fwd"


class CommandKind(str, Enum):
    INIT = "init"
    UPDATE = "update"


@dataclass(frozen=True)
class GuardedCommand:
    name: str
    kind: CommandKind
    guard: Formula
    assignments: tuple[tuple[str, bool], ...] = ()
    visibility: tuple[tuple[str, str, bool], ...] = ()

    @property
    def footprint(self) -> frozenset:
        return frozenset(
            [("val", atom) for atom, _ in self.assignments]
            + [("vis", atom, observer) for atom, observer, _ in self.visibility]
        )


@dataclass(frozen=True)
class AgentSpec:
    name: str
    atoms: tuple[str, ...]
    commands: tuple[GuardedCommand, ...] = ()

    def init_commands(self) -> tuple[GuardedCommand, ...]:
        return tuple(c for c in self.commands if c.kind is CommandKind.INIT)

    def update_commands(self) -> tuple[GuardedCommand, ...]:
        return tuple(c for c in self.commands if c.kind is CommandKind.UPDATE)


@dataclass(frozen=True)
class VCGS:
    agents: tuple[AgentSpec, ...]
    props: tuple[str, ...] = ()
    environment: str | None = None

    @cached_property
    def by_name(self) -> dict[str, AgentSpec]:
        return {spec.name: spec for spec in self.agents}

    @cached_property
    def owner(self) -> dict[str, str]:
        """Owner of every declared atom. Propositions belong to the environment."""
        owners: dict[str, str] = {}
        for spec in self.agents:
            for atom in spec.atoms:
                owners.setdefault(atom, spec.name)
        if self.environment is not None:
            for p in self.props:
                owners.setdefault(p, self.environment)
        return owners

    @cached_property
    def agent_names(self) -> tuple[str, ...]:
        return tuple(sorted(spec.name for spec in self.agents))

    def spec(self, agent: str) -> AgentSpec:
        try:
            return self.by_name[agent]
        except KeyError:
            raise InputError(f"unknown agent {agent!r}")

    def command(self, agent: str, name: str) -> GuardedCommand:
        for cmd in self.spec(agent).commands:
            if cmd.name == name:
                return cmd
        raise InputError(f"agent {agent!r} has no command {name!r}")


@dataclass(frozen=True)
class GlobalState:
    valuation: frozenset[str] = field(default_factory=frozenset)
    visible: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    def sort_key(self) -> tuple:
        return (tuple(sorted(self.valuation)), tuple(sorted(self.visible)))

    def value(self, atom: str) -> bool:
        return atom in self.valuation

    def sees(self, atom: str, agent: str) -> bool:
        return (atom, agent) in self.visible


@dataclass(frozen=True)
class ObservationKey:
    agent: str
    visible_atoms: frozenset[str]
    true_atoms: frozenset[str]


def evaluate_guard(guard: Formula, valuation: frozenset[str]) -> bool:
    if isinstance(guard, Atom):
        return guard.name in valuation
    if isinstance(guard, Top):
        return True
    if isinstance(guard, Bottom):
        return False
    if isinstance(guard, Not):
        return not evaluate_guard(guard.arg, valuation)
    if isinstance(guard, And):
        return evaluate_guard(guard.left, valuation) and evaluate_guard(guard.right, valuation)
    if isinstance(guard, Or):
        return evaluate_guard(guard.left, valuation) or evaluate_guard(guard.right, valuation)
    raise InputError(f"guards must be propositional, got {type(guard).__name__}")


# ---------------------------------------------------------------------------
# Well-formedness
# ---------------------------------------------------------------------------

def visible_after_init(v: VCGS, agent: str) -> frozenset[str]:
    """Atoms ``agent`` may observe once the init phase is over (static approximation)."""
    seen = set(v.spec(agent).atoms)
    if agent == v.environment:
        seen.update(v.props)
    for spec in v.agents:
        for cmd in spec.init_commands():
            for atom, observer, value in cmd.visibility:
                if observer == agent and value:
                    seen.add(atom)
    return frozenset(seen)


def well_formedness(v: VCGS) -> ValidationReport:
    out: list[Violation] = []

    def add(code: str, location: str, message: str, severity: Severity = Severity.ERROR) -> None:
        out.append(Violation(code=code, location=location, message=message, severity=severity))

    names = [spec.name for spec in v.agents]
    for name, count in Counter(names).items():
        if count > 1:
            add("duplicate", f"agent {name}", f"agent {name!r} declared {count} times")
    if v.environment is not None and v.environment not in names:
        add("unknown-agent", "environment", f"environment {v.environment!r} is not an agent")

    declared: Counter = Counter()
    for spec in v.agents:
        declared.update(spec.atoms)
    if v.environment is not None:
        declared.update(v.props)
    for atom, count in sorted(declared.items()):
        if count > 1:
            add("ownership", f"atom {atom}", f"atom {atom!r} is declared by more than one owner")
    for p, count in Counter(v.props).items():
        if count > 1:
            add("duplicate", f"props {p}", f"proposition {p!r} declared twice")

    known = set(declared) | set(v.props)
    for spec in v.agents:
        owned = set(spec.atoms) | (set(v.props) if spec.name == v.environment else set())
        seen_names: set[str] = set()
        observable = visible_after_init(v, spec.name)
        for cmd in spec.commands:
            loc = f"agent {spec.name} command {cmd.name}"
            if cmd.name == SKIP:
                add("reserved", loc, f"{SKIP!r} is reserved for the implicit no-op")
            if cmd.name in seen_names:
                add("duplicate", loc, f"command name {cmd.name!r} used twice")
            seen_names.add(cmd.name)
            keys = [("val", a) for a, _ in cmd.assignments] + [
                ("vis", a, o) for a, o, _ in cmd.visibility
            ]
            for key, count in Counter(keys).items():
                if count > 1:
                    add("double-assignment", loc, f"{key[1]!r} assigned {count} times")
            for atom, _ in cmd.assignments:
                if atom not in owned:
                    add("ownership", loc, f"assigns atom {atom!r} it does not own")
            for atom, observer, _ in cmd.visibility:
                if atom not in owned:
                    add("ownership", loc, f"sets visibility of atom {atom!r} it does not own")
                if observer not in names:
                    add("unknown-agent", loc, f"unknown observer {observer!r}")
                elif observer == spec.name:
                    add("self-visibility", loc, "owners always observe their own atoms")
            for atom in sorted(atoms_of(cmd.guard)):
                if atom not in known:
                    add("undeclared-atom", loc, f"guard reads undeclared atom {atom!r}")
                elif spec.name != v.environment and atom not in observable:
                    add("unobservable-guard", loc,
                        f"guard reads {atom!r}, which {spec.name!r} cannot observe",
                        Severity.WARNING)
    return ValidationReport(violations=out)


def _require_well_formed(v: VCGS) -> None:
    report = well_formedness(v)
    for warning in report.warnings:
        logger.warning("vcgs lint", extra={"location": warning.location, "detail": warning.message})
    if not report.ok:
        raise InputError(f"malformed vCGS: {report.summary()}")


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------

def _apply(g: GlobalState, commands: Iterable[GuardedCommand]) -> GlobalState:
    valuation = set(g.valuation)
    visible = set(g.visible)
    for cmd in commands:
        for atom, value in cmd.assignments:
            if value:
                valuation.add(atom)
            else:
                valuation.discard(atom)
        for atom, observer, value in cmd.visibility:
            if value:
                visible.add((atom, observer))
            else:
                visible.discard((atom, observer))
    return GlobalState(frozenset(valuation), frozenset(visible))


def blank_state(v: VCGS) -> GlobalState:
    return GlobalState(frozenset(), frozenset((atom, owner) for atom, owner in v.owner.items()))


def _conflict_components(commands: tuple[GuardedCommand, ...]) -> list[tuple[GuardedCommand, ...]]:
    graph = nx.Graph()
    graph.add_nodes_from(range(len(commands)))
    for i, j in itertools.combinations(range(len(commands)), 2):
        if commands[i].footprint & commands[j].footprint:
            graph.add_edge(i, j)
    components = [sorted(c) for c in nx.connected_components(graph)]
    return [tuple(commands[i] for i in c) for c in sorted(components)]


def _init_choices(spec: AgentSpec, g: GlobalState) -> list[tuple[GuardedCommand, ...]]:
    options = []
    for component in _conflict_components(spec.init_commands()):
        enabled = [c for c in component if evaluate_guard(c.guard, g.valuation)]
        options.append(enabled or [None])
    return [tuple(c for c in combo if c is not None) for combo in itertools.product(*options)]


def _fire_init_phase(specs: list[AgentSpec], g: GlobalState) -> list[GlobalState]:
    per_agent = [_init_choices(spec, g) for spec in specs]
    results = []
    for combo in itertools.product(*per_agent):
        results.append(_apply(g, itertools.chain.from_iterable(combo)))
    return results


def initial_states(v: VCGS) -> list[GlobalState]:
    """All global states the init phase can produce, sorted and deduplicated."""
    start = blank_state(v)
    env = [s for s in v.agents if s.name == v.environment]
    others = [s for s in v.agents if s.name != v.environment]
    after_env = _fire_init_phase(env, start) if env else [start]
    found: set[GlobalState] = set()
    for g in after_env:
        found.update(_fire_init_phase(others, g))
    return sorted(found, key=GlobalState.sort_key)


def forward_round(v: VCGS, g: GlobalState) -> GlobalState:
    fired = [
        c
        for spec in v.agents
        for c in spec.update_commands()
        if c.name == FORWARD and evaluate_guard(c.guard, g.valuation)
    ]
    return _apply(g, fired)


def start_states(v: VCGS) -> list[GlobalState]:
    """The initial states after the closing forward round."""
    return sorted({forward_round(v, g) for g in initial_states(v)}, key=GlobalState.sort_key)


def enabled_commands(v: VCGS, g: GlobalState, agent: str) -> list[GuardedCommand]:
    return [c for c in v.spec(agent).update_commands() if evaluate_guard(c.guard, g.valuation)]


def step(v: VCGS, g: GlobalState, choice: Mapping[str, str | None]) -> GlobalState:
    """Fire the chosen update commands simultaneously.

    ``choice`` maps agents to a command name; a missing agent, ``None`` or
    ``"skip"`` means skip, which is only legal when nothing is enabled.
    """
    fired: list[GuardedCommand] = []
    for agent in choice:
        v.spec(agent)
    for agent in v.agent_names:
        name = choice.get(agent)
        enabled = enabled_commands(v, g, agent)
        if name is None or name == SKIP:
            if enabled:
                raise ContractError(
                    f"agent {agent!r} must fire one of {[c.name for c in enabled]}, not skip"
                )
            continue
        cmd = next((c for c in enabled if c.name == name), None)
        if cmd is None:
            raise ContractError(f"command {name!r} of agent {agent!r} is not enabled")
        fired.append(cmd)
    return _apply(g, fired)


def observation(v: VCGS, g: GlobalState, agent: str) -> ObservationKey:
    owned = {atom for atom, owner in v.owner.items() if owner == agent}
    seen = frozenset({atom for atom, observer in g.visible if observer == agent} | owned)
    return ObservationKey(agent, seen, frozenset(g.valuation & seen))


# ---------------------------------------------------------------------------
# Unfolding
# ---------------------------------------------------------------------------

class UnfoldStats(BaseModel):
    states: int
    edges: int
    initial: int
    phases: dict[str, int]
    refined_agents: list[str] = []


@dataclass(frozen=True)
class Exploration:
    icgs: ICGS
    globals: Mapping[str, GlobalState]
    stats: UnfoldStats


def _phase(v: VCGS, g: GlobalState) -> str:
    active = [a for a in v.agent_names if enabled_commands(v, g, a)]
    return "+".join(active) if active else "-"


def explore(v: VCGS, state_bound: int | None = None) -> Exploration:
    """Breadth-first unfolding of ``v`` into an explicit ICGS.

    States are named ``g<i>`` in discovery order. Each agent's actions are its
    update command names plus ``skip``; the protocol at a state is the set of
    enabled commands, or ``skip`` alone. The search starts from
    :func:`start_states`.
    """
    bound = UNFOLD_STATE_BOUND if state_bound is None else state_bound
    _require_well_formed(v)
    agents = v.agent_names
    starts = start_states(v)

    index: dict[GlobalState, int] = {}
    order: list[GlobalState] = []
    queue: deque[GlobalState] = deque()

    def visit(g: GlobalState) -> int:
        if g not in index:
            if len(order) >= bound:
                inc_resource_error()
                raise ResourceError(f"unfolding exceeds the state bound of {bound}", bound)
            index[g] = len(order)
            order.append(g)
            queue.append(g)
        return index[g]

    for g in starts:
        visit(g)

    raw_edges: dict[tuple[int, tuple[str, ...]], int] = {}
    protocols: dict[int, dict[str, tuple[str, ...]]] = {}
    while queue:
        g = queue.popleft()
        i = index[g]
        options = {a: tuple(c.name for c in enabled_commands(v, g, a)) or (SKIP,) for a in agents}
        protocols[i] = options
        for joint in itertools.product(*(options[a] for a in agents)):
            target = step(v, g, dict(zip(agents, joint)))
            raw_edges[(i, joint)] = visit(target)

    width = len(str(max(len(order) - 1, 0)))
    names = [f"g{i:0{width}d}" for i in range(len(order))]

    actions = {
        a: tuple(sorted({c.name for c in v.spec(a).update_commands()} | {SKIP})) for a in agents
    }
    protocol = {(names[i], a): tuple(sorted(opts[a])) for i, opts in protocols.items() for a in agents}
    transition = {(names[i], joint): names[j] for (i, joint), j in raw_edges.items()}

    indist: dict[str, list[list[str]]] = {}
    refined: list[str] = []
    for a in agents:
        by_key: dict[tuple, list[str]] = {}
        by_obs: dict[ObservationKey, set] = {}
        for i, g in enumerate(order):
            obs = observation(v, g, a)
            key = (obs, protocols[i][a])
            by_key.setdefault(key, []).append(names[i])
            by_obs.setdefault(obs, set()).add(protocols[i][a])
        if any(len(options) > 1 for options in by_obs.values()):
            refined.append(a)
            logger.warning(
                "observation does not determine enabled commands; partition refined",
                extra={"agent": a},
            )
        indist[a] = list(by_key.values())

    props = set(v.props)
    labels = {names[i]: frozenset(g.valuation & props) for i, g in enumerate(order)}
    icgs = ICGS.build(
        agents=agents,
        actions=actions,
        states=names,
        initial=[names[index[g]] for g in starts],
        transition=transition,
        indist=indist,
        protocol=protocol,
        labels=labels,
        props=v.props,
    )
    phases = Counter(_phase(v, g) for g in order)
    stats = UnfoldStats(
        states=len(order),
        edges=len({(i, j) for (i, _), j in raw_edges.items()}),
        initial=len(starts),
        phases=dict(sorted(phases.items())),
        refined_agents=refined,
    )
    inc_unfolded_states(len(order))
    logger.info("unfolded vcgs", extra={"states": stats.states, "edges": stats.edges})
    return Exploration(icgs=icgs, globals=dict(zip(names, order)), stats=stats)


def unfold(v: VCGS, state_bound: int | None = None) -> ICGS:
    return explore(v, state_bound).icgs
