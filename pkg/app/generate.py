"""Seeded random models and formulas for smoke runs and cross-validation."""

from __future__ import annotations

import itertools
import random
from enum import Enum

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
)
from .model import ICGS

AGENT_NAMES = ("a", "b", "c")
ACTION_NAMES = ("L", "R", "S")
PROPS = ("p", "q")

MAX_STATES = 8
MAX_AGENTS = len(AGENT_NAMES)
MAX_ACTIONS = len(ACTION_NAMES)


class LabelStyle(str, Enum):
    RANDOM = "random"
    CONSTANT = "constant"
    EMPTY = "empty"


class FormulaShape(str, Enum):
    NEXT = "next"
    ALWAYS = "always"
    UNTIL = "until"
    NESTED = "nested"


SHAPES = tuple(FormulaShape)


def random_icgs(
    rng: random.Random,
    *,
    states: int = 3,
    agents: int = 1,
    actions: int = 2,
    classes: int | None = None,
    labels: LabelStyle = LabelStyle.RANDOM,
) -> ICGS:
    """A full-protocol model with a random total transition table.

    Every agent's partition has at most ``classes`` blocks (default: one per
    state). ``s0`` is the only initial state.
    """
    if not 1 <= states <= MAX_STATES:
        raise ValueError(f"states must be between 1 and {MAX_STATES}")
    if not 0 <= agents <= MAX_AGENTS:
        raise ValueError(f"agents must be between 0 and {MAX_AGENTS}")
    if not 1 <= actions <= MAX_ACTIONS:
        raise ValueError(f"actions must be between 1 and {MAX_ACTIONS}")
    classes = states if classes is None else max(1, min(classes, states))

    state_names = [f"s{i}" for i in range(states)]
    agent_names = list(AGENT_NAMES[:agents])
    action_sets = {a: list(ACTION_NAMES[:actions]) for a in agent_names}

    transition = {}
    for s in state_names:
        for joint in itertools.product(*(action_sets[a] for a in agent_names)):
            transition[(s, joint)] = rng.choice(state_names)

    indist = {}
    for a in agent_names:
        blocks: dict[int, list[str]] = {}
        for s in state_names:
            blocks.setdefault(rng.randrange(classes), []).append(s)
        indist[a] = list(blocks.values())

    if labels is LabelStyle.RANDOM:
        label_map = {s: [p for p in PROPS if rng.random() < 0.5] for s in state_names}
    elif labels is LabelStyle.CONSTANT:
        shared = [p for p in PROPS if rng.random() < 0.5] or [PROPS[0]]
        label_map = {s: list(shared) for s in state_names}
    else:
        label_map = {}

    return ICGS.build(
        agents=agent_names,
        actions=action_sets,
        states=state_names,
        initial=["s0"],
        transition=transition,
        indist=indist,
        labels=label_map,
        props=PROPS,
    )


def random_coalition(rng: random.Random, agents: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(a for a in agents if rng.random() < 0.5)


def random_propositional(rng: random.Random, props: tuple[str, ...], depth: int = 1) -> Formula:
    if depth <= 0 or rng.random() < 0.4:
        roll = rng.random()
        if roll < 0.1:
            return Top()
        if roll < 0.15:
            return Bottom()
        return Atom(rng.choice(props))
    op = rng.choice(("not", "and", "or"))
    if op == "not":
        return Not(random_propositional(rng, props, depth - 1))
    left = random_propositional(rng, props, depth - 1)
    right = random_propositional(rng, props, depth - 1)
    return And(left, right) if op == "and" else Or(left, right)


def shaped_formula(
    rng: random.Random, shape: FormulaShape, agents: tuple[str, ...], props: tuple[str, ...]
) -> Formula:
    """An ATL formula of temporal depth at most two with the requested top shape."""
    base = random_propositional(rng, props)
    coalition = random_coalition(rng, agents)
    if shape is FormulaShape.NEXT:
        return Coalition(coalition, Next(base))
    if shape is FormulaShape.ALWAYS:
        return Coalition(coalition, Always(base))
    if shape is FormulaShape.UNTIL:
        return Coalition(coalition, Until(base, random_propositional(rng, props)))
    inner_shape = rng.choice((FormulaShape.NEXT, FormulaShape.ALWAYS, FormulaShape.UNTIL))
    inner = shaped_formula(rng, inner_shape, agents, props)
    if rng.random() < 0.3:
        inner = Not(inner)
    return Coalition(coalition, Next(inner))


def random_formula(
    rng: random.Random,
    agents: tuple[str, ...],
    props: tuple[str, ...],
    *,
    dialect: Dialect = Dialect.ATL,
    depth: int = 3,
) -> Formula:
    """A random state formula of the given nesting depth."""
    if depth <= 0:
        return random_propositional(rng, props, 0)
    roll = rng.random()
    if roll < 0.25:
        return random_propositional(rng, props, 1)
    if roll < 0.4:
        return Not(random_formula(rng, agents, props, dialect=dialect, depth=depth - 1))
    if roll < 0.5:
        op = And if rng.random() < 0.5 else Or
        return op(
            random_formula(rng, agents, props, dialect=dialect, depth=depth - 1),
            random_formula(rng, agents, props, dialect=dialect, depth=depth - 1),
        )
    coalition = random_coalition(rng, agents)
    if Dialect(dialect) is Dialect.ATLSTAR:
        return Coalition(coalition, random_path(rng, agents, props, depth - 1))
    arg = random_formula(rng, agents, props, dialect=dialect, depth=depth - 1)
    kind = rng.choice(("next", "always", "until"))
    if kind == "next":
        return Coalition(coalition, Next(arg))
    if kind == "always":
        return Coalition(coalition, Always(arg))
    right = random_formula(rng, agents, props, dialect=dialect, depth=depth - 1)
    return Coalition(coalition, Until(arg, right))


def random_path(
    rng: random.Random, agents: tuple[str, ...], props: tuple[str, ...], depth: int, temporal: int = 2
) -> Formula:
    """A path formula with at most ``temporal`` temporal operators."""
    if depth <= 0 or temporal <= 0 or rng.random() < 0.2:
        if depth > 0 and rng.random() < 0.3:
            return random_formula(rng, agents, props, dialect=Dialect.ATLSTAR, depth=depth - 1)
        return random_propositional(rng, props, 1)
    kind = rng.choice(("next", "always", "eventually", "until", "not", "and"))
    if kind == "next":
        return Next(random_path(rng, agents, props, depth - 1, temporal - 1))
    if kind == "always":
        return Always(random_path(rng, agents, props, depth - 1, temporal - 1))
    if kind == "eventually":
        return Eventually(random_path(rng, agents, props, depth - 1, temporal - 1))
    if kind == "until":
        budget = temporal - 1
        left_budget = rng.randint(0, budget)
        return Until(
            random_path(rng, agents, props, depth - 1, left_budget),
            random_path(rng, agents, props, depth - 1, budget - left_budget),
        )
    if kind == "not":
        return Not(random_path(rng, agents, props, depth - 1, temporal))
    left_budget = rng.randint(0, temporal)
    return And(
        random_path(rng, agents, props, depth - 1, left_budget),
        random_path(rng, agents, props, depth - 1, temporal - left_budget),
    )
