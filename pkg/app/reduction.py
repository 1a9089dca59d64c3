"""Compile an ICGS into a vCGS whose unfolding simulates it.

Each model transition takes two ticks of the compiled game: the agents first
commit their actions into action atoms, then the environment reads them and
moves the state atoms. Atom names are namespaced::

    act.<agent>.<action>   turn.<agent>   st.<state>
    cls.<agent>.<representative>           turn.env

Model propositions are kept verbatim and owned by the environment.

With ``action_memory=reset`` an agent's ``fwd`` also clears its action
atoms, so an agent does not observe what it played in the previous round.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum

from pydantic import BaseModel, ConfigDict

from .errors import CompileError
from .logic import RESERVED, Atom, Not, Top, conjunction
from .model import ICGS, validate_icgs
from .vcgs import VCGS, AgentSpec, CommandKind, GuardedCommand

logger = logging.getLogger(__name__)

ENVIRONMENT = "env"
GUARD_KEYWORDS = frozenset({"T", "F", "vis", "agent", "atoms", "init", "update", "props", "environment"})


class LabelMode(str, Enum):
    SOURCE = "label-source"
    TARGET = "label-target"


class InitialLabelMode(str, Enum):
    NONE = "none"
    LABEL_INITIAL = "label-initial"


class ProtocolMode(str, Enum):
    FULL = "full"
    RESTRICT = "restrict"


class ActionMemory(str, Enum):
    KEEP = "keep"
    RESET = "reset"


class ReductionConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    label_mode: LabelMode = LabelMode.SOURCE
    initial_label_mode: InitialLabelMode = InitialLabelMode.NONE
    protocol_mode: ProtocolMode = ProtocolMode.FULL
    action_memory: ActionMemory = ActionMemory.KEEP

    def describe(self) -> str:
        return "/".join(
            m.value for m in (self.label_mode, self.initial_label_mode, self.protocol_mode, self.action_memory)
        )


def act_atom(agent: str, action: str) -> str:
    return f"act.{agent}.{action}"


def turn_atom(agent: str) -> str:
    return f"turn.{agent}"


def state_atom(state: str) -> str:
    return f"st.{state}"


def class_atom(agent: str, representative: str) -> str:
    return f"cls.{agent}.{representative}"


@dataclass(frozen=True)
class AtomUniverse:
    agent_atoms: dict[str, tuple[str, ...]]
    env_atoms: tuple[str, ...]
    props: tuple[str, ...]


def build_atom_universe(m: ICGS) -> AtomUniverse:
    """Atoms owned by each agent (its actions and turn) and by the environment."""
    if ENVIRONMENT in m.agents:
        raise CompileError(f"agent name {ENVIRONMENT!r} is reserved for the environment")
    agent_atoms = {
        a: tuple(act_atom(a, act) for act in m.actions[a]) + (turn_atom(a),) for a in m.agents
    }
    env_atoms = (
        tuple(state_atom(s) for s in m.states)
        + tuple(class_atom(a, block[0]) for a in m.agents for block in m.indist[a])
        + (turn_atom(ENVIRONMENT),)
    )
    seen: dict[str, str] = {}
    for owner, atoms in [*agent_atoms.items(), (ENVIRONMENT, env_atoms), ("props", m.props)]:
        for atom in atoms:
            if atom in seen:
                raise CompileError(
                    f"atom {atom!r} generated for {owner!r} collides with one of {seen[atom]!r}"
                )
            seen[atom] = owner
    for kind, names in (("agent", m.agents), ("proposition", m.props)):
        for name in names:
            if name in RESERVED or name in GUARD_KEYWORDS:
                raise CompileError(f"{kind} {name!r} is a reserved word")
    return AtomUniverse(agent_atoms=agent_atoms, env_atoms=env_atoms, props=m.props)


def build_init_commands(m: ICGS, cfg: ReductionConfig) -> dict[str, list[GuardedCommand]]:
    """Init commands per owner: agents first, then the environment."""
    if not m.initial:
        raise CompileError("the model has no initial state")
    out: dict[str, list[GuardedCommand]] = {}
    for a in m.agents:
        others = [b for b in m.agents if b != a]
        hidden = tuple(
            (atom, b, False) for atom in (*(act_atom(a, x) for x in m.actions[a]), turn_atom(a)) for b in others
        )
        reps = sorted({m.representative(a, s0) for s0 in m.initial})
        out[a] = [
            GuardedCommand(
                name=f"init.{rep}",
                kind=CommandKind.INIT,
                guard=Atom(class_atom(a, rep)),
                assignments=((turn_atom(a), False),),
                visibility=hidden,
            )
            for rep in reps
        ]

    visibility = [(state_atom(s0), b, False) for s0 in m.initial for b in m.agents]
    visibility += [(class_atom(b, block[0]), b, True) for b in m.agents for block in m.indist[b]]
    env = [
        GuardedCommand(
            name="init.vis", kind=CommandKind.INIT, guard=Top(), visibility=tuple(visibility)
        )
    ]
    for s0 in m.initial:
        assignments = [(state_atom(s), s == s0) for s in m.states]
        assignments += [
            (class_atom(b, block[0]), s0 in block) for b in m.agents for block in m.indist[b]
        ]
        if cfg.initial_label_mode is InitialLabelMode.LABEL_INITIAL:
            assignments += [(p, p in m.labels[s0]) for p in m.props]
        env.append(
            GuardedCommand(
                name=f"init.st.{s0}",
                kind=CommandKind.INIT,
                guard=Top(),
                assignments=tuple(assignments),
            )
        )
    out[ENVIRONMENT] = env
    return out


def build_agent_update_commands(m: ICGS, agent: str, cfg: ReductionConfig) -> list[GuardedCommand]:
    commands = []
    for block in m.indist[agent]:
        rep = block[0]
        if cfg.protocol_mode is ProtocolMode.RESTRICT:
            choices = m.protocol[(rep, agent)]
        else:
            choices = m.actions[agent]
        for chosen in choices:
            assignments = tuple((act_atom(agent, x), x == chosen) for x in m.actions[agent])
            commands.append(
                GuardedCommand(
                    name=f"act.{chosen}.{rep}",
                    kind=CommandKind.UPDATE,
                    guard=conjunction([Atom(turn_atom(agent)), Atom(class_atom(agent, rep))]),
                    assignments=assignments + ((turn_atom(agent), False),),
                )
            )
    forward = [(turn_atom(agent), True)]
    if cfg.action_memory is ActionMemory.RESET:
        # the environment reads the action atoms before this tick clears them
        forward += [(act_atom(agent, x), False) for x in m.actions[agent]]
    commands.append(
        GuardedCommand(
            name="fwd",
            kind=CommandKind.UPDATE,
            guard=Not(Atom(turn_atom(agent))),
            assignments=tuple(forward),
        )
    )
    return commands


def build_env_update_commands(m: ICGS, cfg: ReductionConfig) -> list[GuardedCommand]:
    turn_env = turn_atom(ENVIRONMENT)
    commands = [
        GuardedCommand(
            name="fwd",
            kind=CommandKind.UPDATE,
            guard=Not(Atom(turn_env)),
            assignments=((turn_env, True),),
        )
    ]
    for s in m.states:
        for joint in itertools.product(*(m.actions[a] for a in m.agents)):
            target = m.transition.get((s, joint))
            if target is None:
                continue
            guard = conjunction(
                [Atom(turn_env), Atom(state_atom(s))]
                + [Atom(act_atom(a, x)) for a, x in zip(m.agents, joint)]
            )
            target_classes = {class_atom(b, m.representative(b, target)) for b in m.agents}
            shown = m.labels[target] if cfg.label_mode is LabelMode.TARGET else m.labels[s]
            assignments = [(turn_env, False), (state_atom(target), True)]
            assignments += [(atom, True) for atom in sorted(target_classes)]
            assignments += [(p, True) for p in m.props if p in shown]
            assignments += [(p, False) for p in m.props if p not in shown]
            assignments += [(state_atom(u), False) for u in m.states if u != target]
            assignments += [
                (class_atom(b, block[0]), False)
                for b in m.agents
                for block in m.indist[b]
                if class_atom(b, block[0]) not in target_classes
            ]
            commands.append(
                GuardedCommand(
                    name=".".join(["tr", s, *joint]),
                    kind=CommandKind.UPDATE,
                    guard=guard,
                    assignments=tuple(assignments),
                )
            )
    return commands


def compile_icgs(m: ICGS, cfg: ReductionConfig | None = None) -> VCGS:
    """Build the vCGS of ``m``. Model agents come first in name order, ``env`` last."""
    cfg = cfg or ReductionConfig()
    report = validate_icgs(m)
    if not report.ok:
        raise CompileError(f"invalid model: {report.summary()}")
    universe = build_atom_universe(m)
    inits = build_init_commands(m, cfg)

    specs = []
    for a in m.agents:
        commands = inits[a] + build_agent_update_commands(m, a, cfg)
        specs.append(AgentSpec(name=a, atoms=universe.agent_atoms[a], commands=tuple(commands)))
    env_commands = inits[ENVIRONMENT] + build_env_update_commands(m, cfg)
    specs.append(AgentSpec(name=ENVIRONMENT, atoms=universe.env_atoms, commands=tuple(env_commands)))

    for spec in specs:
        names = [c.name for c in spec.commands]
        if len(names) != len(set(names)):
            raise CompileError(f"generated command names of {spec.name!r} collide")
    v = VCGS(agents=tuple(specs), props=m.props, environment=ENVIRONMENT)
    logger.info("compiled model", extra={"config": cfg.describe(), "atoms": size_report(v).total_atoms})
    return v


class SizeReport(BaseModel):
    atoms: dict[str, int]
    props: int
    commands: dict[str, dict[str, int]]

    @property
    def total_atoms(self) -> int:
        return sum(self.atoms.values())

    def updates(self, owner: str) -> int:
        return self.commands.get(owner, {}).get(CommandKind.UPDATE.value, 0)

    def inits(self, owner: str) -> int:
        return self.commands.get(owner, {}).get(CommandKind.INIT.value, 0)


def size_report(v: VCGS) -> SizeReport:
    atoms = {spec.name: len(spec.atoms) for spec in v.agents}
    commands = {
        spec.name: {
            CommandKind.INIT.value: len(spec.init_commands()),
            CommandKind.UPDATE.value: len(spec.update_commands()),
        }
        for spec in v.agents
    }
    return SizeReport(atoms=atoms, props=len(v.props), commands=commands)


def closed_form_size(m: ICGS) -> SizeReport:
    """Sizes a full-protocol compilation of ``m`` must have."""
    atoms = {a: len(m.actions[a]) + 1 for a in m.agents}
    atoms[ENVIRONMENT] = len(m.states) + sum(len(m.indist[a]) for a in m.agents) + 1
    commands = {
        a: {
            CommandKind.INIT.value: len({m.representative(a, s0) for s0 in m.initial}),
            CommandKind.UPDATE.value: len(m.actions[a]) * len(m.indist[a]) + 1,
        }
        for a in m.agents
    }
    commands[ENVIRONMENT] = {
        CommandKind.INIT.value: 1 + len(m.initial),
        CommandKind.UPDATE.value: len(m.states) * math.prod(len(m.actions[a]) for a in m.agents) + 1,
    }
    return SizeReport(atoms=atoms, props=len(m.props), commands=commands)
