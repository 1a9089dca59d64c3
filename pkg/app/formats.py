"""Text formats for explicit models (ICGS) and guarded-command games (vCGS).

ICGS files are line oriented; ``#`` starts a comment::

    agents: a e
    actions a: L R
    states: q0 q1
    initial: q0
    props: win
    labels q1: win
    indist a: {q0 q1}
    protocol q0 a: L
    trans q0 (L,l) -> q1

vCGS files hold one block per agent::

    environment: env;
    props: p;
    agent a {
      atoms: act.a.L turn.a;
      init init.s0: cls.a.s0 ~> turn.a := F, vis(act.a.L, b) := F;
      update fwd: !turn.a ~> turn.a := T;
    }
"""

from __future__ import annotations

import logging
from pathlib import Path

from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedInput

from .errors import InputError, ModelSyntaxError
from .logic import And, Atom, Bottom, Formula, Not, Or, Top
from .model import ICGS, close_partition
from .vcgs import VCGS, AgentSpec, CommandKind, GuardedCommand

logger = logging.getLogger(__name__)

ICGS_GRAMMAR = r"""
start: item*

?item: agents | actions | states | initial | props | labels | indist | protocol | trans

agents: "agents" ":" ID*
actions: "actions" ID ":" ID*
states: "states" ":" ID*
initial: "initial" ":" ID*
props: "props" ":" ID*
labels: "labels" ID ":" ID*
indist: "indist" ID ":" block*
block: "{" ID* "}"
protocol: "protocol" ID ID ":" ID*
trans: "trans" ID "(" joint? ")" "->" ID
joint: ID ("," ID)*

ID: /[A-Za-z0-9_][A-Za-z0-9_.@]*/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

VCGS_GRAMMAR = r"""
start: environment? props? agent*

environment: "environment" ":" ID ";"
props: "props" ":" ID* ";"
agent: "agent" ID "{" atoms command* "}"
atoms: "atoms" ":" ID* ";"
command: kind ID ":" guard "~>" assignments ";"
!kind: "init" | "update"
assignments: (assignment ("," assignment)*)?
?assignment: ID ":=" truth                    -> value_assign
           | "vis" "(" ID "," ID ")" ":=" truth -> vis_assign
!truth: "T" | "F"

?guard: g_or
?g_or: g_and
     | g_or "|" g_and      -> g_disj
?g_and: g_not
      | g_and "&" g_not    -> g_conj
?g_not: g_atom
      | "!" g_not          -> g_neg
?g_atom: ID                -> g_var
       | "T"               -> g_true
       | "F"               -> g_false
       | "(" g_or ")"

ID: /[A-Za-z0-9_][A-Za-z0-9_.@]*/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_ICGS_PARSER = Lark(ICGS_GRAMMAR, parser="lalr")
_VCGS_PARSER = Lark(VCGS_GRAMMAR, parser="lalr")


def _syntax_error(kind: str, exc: UnexpectedInput) -> ModelSyntaxError:
    line = getattr(exc, "line", None)
    column = getattr(exc, "column", None)
    if line is None or line < 1:
        return ModelSyntaxError(f"unexpected end of {kind} input")
    return ModelSyntaxError(f"unexpected input in {kind} file", line, column)


def _names(tree: Tree) -> list[str]:
    return [str(c) for c in tree.children if isinstance(c, Token)]


# ---------------------------------------------------------------------------
# ICGS
# ---------------------------------------------------------------------------

def loads_icgs(text: str) -> ICGS:
    try:
        tree = _ICGS_PARSER.parse(text)
    except UnexpectedInput as exc:
        raise _syntax_error("model", exc) from exc

    agents: list[str] = []
    actions: dict[str, list[str]] = {}
    states: list[str] = []
    initial: list[str] = []
    props: list[str] | None = None
    labels: dict[str, list[str]] = {}
    blocks: dict[str, list[list[str]]] = {}
    protocol: dict[tuple[str, str], list[str]] = {}
    transition: dict[tuple[str, tuple[str, ...]], str] = {}

    for item in tree.children:
        names = _names(item)
        kind = item.data
        if kind == "agents":
            agents.extend(names)
        elif kind == "actions":
            actions.setdefault(names[0], []).extend(names[1:])
        elif kind == "states":
            states.extend(names)
        elif kind == "initial":
            initial.extend(names)
        elif kind == "props":
            props = (props or []) + names
        elif kind == "labels":
            labels.setdefault(names[0], []).extend(names[1:])
        elif kind == "indist":
            agent = str(item.children[0])
            blocks.setdefault(agent, []).extend(_names(b) for b in item.children[1:])
        elif kind == "protocol":
            protocol[(names[0], names[1])] = names[2:]
        elif kind == "trans":
            source, target = names[0], names[-1]
            joint = next((c for c in item.children if isinstance(c, Tree)), None)
            key = (source, tuple(_names(joint)) if joint is not None else ())
            if key in transition:
                raise InputError(f"duplicate transition for {source} ({','.join(key[1])})")
            transition[key] = target

    for agent in blocks:
        if agent not in agents:
            raise InputError(f"indist for unknown agent {agent!r}")
    indist = {}
    for agent, given in blocks.items():
        closed = close_partition(states, given)
        normalised = sorted((tuple(sorted(b)) for b in given if b), key=lambda b: b[0])
        if list(closed) != normalised:
            logger.warning(
                "indistinguishability closed to a partition",
                extra={"agent": agent, "classes": len(closed)},
            )
        indist[agent] = closed

    return ICGS.build(
        agents=agents,
        actions=actions,
        states=states,
        initial=initial,
        transition=transition,
        indist=indist,
        protocol=protocol,
        labels=labels,
        props=props,
    )


def dumps_icgs(m: ICGS) -> str:
    lines = [
        f"agents: {' '.join(m.agents)}".rstrip(),
        *(f"actions {a}: {' '.join(m.actions[a])}".rstrip() for a in m.agents),
        f"states: {' '.join(m.states)}".rstrip(),
        f"initial: {' '.join(m.initial)}".rstrip(),
        f"props: {' '.join(m.props)}".rstrip(),
    ]
    for s in m.states:
        if m.labels.get(s):
            lines.append(f"labels {s}: {' '.join(sorted(m.labels[s]))}")
    for a in m.agents:
        blocks = " ".join("{" + " ".join(b) + "}" for b in m.indist[a])
        lines.append(f"indist {a}: {blocks}".rstrip())
    for (s, a), allowed in m.protocol.items():
        if tuple(allowed) != tuple(m.actions[a]):
            lines.append(f"protocol {s} {a}: {' '.join(allowed)}".rstrip())
    for (s, joint), t in m.transition.items():
        lines.append(f"trans {s} ({','.join(joint)}) -> {t}")
    return "\n".join(lines) + "\n"


def load_icgs(path: str | Path) -> ICGS:
    return loads_icgs(read_text(path))


def save_icgs(m: ICGS, path: str | Path) -> None:
    Path(path).write_text(dumps_icgs(m))


# ---------------------------------------------------------------------------
# vCGS
# ---------------------------------------------------------------------------

def _guard(tree) -> Formula:
    if isinstance(tree, Token):
        return Atom(str(tree))
    kind = tree.data
    if kind == "g_var":
        return Atom(str(tree.children[0]))
    if kind == "g_true":
        return Top()
    if kind == "g_false":
        return Bottom()
    if kind == "g_neg":
        return Not(_guard(tree.children[0]))
    if kind == "g_conj":
        return And(_guard(tree.children[0]), _guard(tree.children[1]))
    if kind == "g_disj":
        return Or(_guard(tree.children[0]), _guard(tree.children[1]))
    raise ModelSyntaxError(f"unexpected guard node {kind!r}")


def _command(tree: Tree) -> GuardedCommand:
    kind_tree, name, guard_tree, assignments_tree = tree.children
    values: list[tuple[str, bool]] = []
    visibility: list[tuple[str, str, bool]] = []
    for node in assignments_tree.children:
        tokens = [str(t) if isinstance(t, Token) else str(t.children[0]) for t in node.children]
        if node.data == "value_assign":
            values.append((tokens[0], tokens[1] == "T"))
        else:
            visibility.append((tokens[0], tokens[1], tokens[2] == "T"))
    return GuardedCommand(
        name=str(name),
        kind=CommandKind(str(kind_tree.children[0])),
        guard=_guard(guard_tree),
        assignments=tuple(values),
        visibility=tuple(visibility),
    )


def loads_vcgs(text: str) -> VCGS:
    try:
        tree = _VCGS_PARSER.parse(text)
    except UnexpectedInput as exc:
        raise _syntax_error("vcgs", exc) from exc
    environment = None
    props: list[str] = []
    specs = []
    for item in tree.children:
        if item.data == "environment":
            environment = str(item.children[0])
        elif item.data == "props":
            props.extend(_names(item))
        elif item.data == "agent":
            name, atoms_tree, *commands = item.children
            specs.append(
                AgentSpec(
                    name=str(name),
                    atoms=tuple(_names(atoms_tree)),
                    commands=tuple(_command(c) for c in commands),
                )
            )
    return VCGS(agents=tuple(specs), props=tuple(props), environment=environment)


_OR, _AND, _NOT = 1, 2, 3


def format_guard(g: Formula) -> str:
    def prec(f: Formula) -> int:
        return _OR if isinstance(f, Or) else _AND if isinstance(f, And) else _NOT

    def wrap(f: Formula, minimum: int) -> str:
        text = format_guard(f)
        return f"({text})" if prec(f) < minimum else text

    if isinstance(g, Atom):
        return g.name
    if isinstance(g, Top):
        return "T"
    if isinstance(g, Bottom):
        return "F"
    if isinstance(g, Not):
        return f"!{wrap(g.arg, _NOT)}"
    if isinstance(g, And):
        return f"{wrap(g.left, _AND)} & {wrap(g.right, _NOT)}"
    if isinstance(g, Or):
        return f"{wrap(g.left, _OR)} | {wrap(g.right, _AND)}"
    raise InputError(f"guards must be propositional, got {type(g).__name__}")


def _flag(value: bool) -> str:
    return "T" if value else "F"


def dumps_vcgs(v: VCGS) -> str:
    lines = []
    if v.environment is not None:
        lines.append(f"environment: {v.environment};")
    lines.append(f"props: {' '.join(v.props)};")
    for spec in v.agents:
        lines.append("")
        lines.append(f"agent {spec.name} {{")
        lines.append(f"  atoms: {' '.join(spec.atoms)};")
        for cmd in spec.commands:
            effects = [f"{atom} := {_flag(value)}" for atom, value in cmd.assignments]
            effects += [f"vis({atom}, {observer}) := {_flag(value)}" for atom, observer, value in cmd.visibility]
            lines.append(
                f"  {cmd.kind.value} {cmd.name}: {format_guard(cmd.guard)} ~> {', '.join(effects)};"
            )
        lines.append("}")
    return "\n".join(lines) + "\n"


def load_vcgs(path: str | Path) -> VCGS:
    return loads_vcgs(read_text(path))


def save_vcgs(v: VCGS, path: str | Path) -> None:
    Path(path).write_text(dumps_vcgs(v))


def looks_like_vcgs(path: str | Path, text: str) -> bool:
    if str(path).endswith(".vcgs"):
        return True
    lines = (line.strip() for line in text.splitlines())
    return any(line.startswith("environment:") or line.startswith("agent ") for line in lines)


def read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
