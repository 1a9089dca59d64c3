#!/usr/bin/env python3
"""Count the reachable global states of a vCGS with a standalone search.

Cross-checks ``python -m app unfold``: only the file parser is shared with
the package, the firing rules are re-implemented here.
"""

import argparse
import itertools
import pathlib
import sys
from collections import deque

import networkx as nx

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

from app.formats import load_vcgs  # noqa: E402
from app.logic import And, Atom, Bottom, Not, Or, Top  # noqa: E402

# (true atoms, visible (atom, observer) pairs)
State = tuple[frozenset, frozenset]


def holds(guard, true_atoms: frozenset) -> bool:
    if isinstance(guard, Top):
        return True
    if isinstance(guard, Bottom):
        return False
    if isinstance(guard, Atom):
        return guard.name in true_atoms
    if isinstance(guard, Not):
        return not holds(guard.arg, true_atoms)
    if isinstance(guard, And):
        return holds(guard.left, true_atoms) and holds(guard.right, true_atoms)
    if isinstance(guard, Or):
        return holds(guard.left, true_atoms) or holds(guard.right, true_atoms)
    raise ValueError(f"not a guard: {guard}")


def fire(state: State, commands) -> State:
    true_atoms, visible = set(state[0]), set(state[1])
    for cmd in commands:
        for atom, value in cmd.assignments:
            (true_atoms.add if value else true_atoms.discard)(atom)
        for atom, observer, value in cmd.visibility:
            (visible.add if value else visible.discard)((atom, observer))
    return frozenset(true_atoms), frozenset(visible)


def init_selections(commands, true_atoms: frozenset) -> list[tuple]:
    """One enabled command per write-conflict group, or none if none is enabled."""
    overlap = nx.Graph()
    overlap.add_nodes_from(range(len(commands)))
    for i, j in itertools.combinations(range(len(commands)), 2):
        if commands[i].footprint & commands[j].footprint:
            overlap.add_edge(i, j)
    groups = []
    for component in nx.connected_components(overlap):
        enabled = [commands[i] for i in sorted(component) if holds(commands[i].guard, true_atoms)]
        groups.append(enabled or [None])
    return [tuple(c for c in pick if c is not None) for pick in itertools.product(*groups)]


def init_phase(specs, state: State) -> set[State]:
    per_agent = [init_selections(spec.init_commands(), state[0]) for spec in specs]
    return {fire(state, itertools.chain.from_iterable(pick)) for pick in itertools.product(*per_agent)}


def count_states(v) -> tuple[int, int]:
    """Return ``(initial, reachable)`` global state counts."""
    owners = {}
    for spec in v.agents:
        for atom in spec.atoms:
            owners.setdefault(atom, spec.name)
    for p in v.props:
        owners.setdefault(p, v.environment)
    blank: State = (frozenset(), frozenset((atom, owner) for atom, owner in owners.items() if owner))

    env = [spec for spec in v.agents if spec.name == v.environment]
    others = [spec for spec in v.agents if spec.name != v.environment]
    starts: set[State] = set()
    settled: set[State] = set()
    for g in init_phase(env, blank) if env else {blank}:
        settled |= init_phase(others, g)
    # the init phase closes with one round of enabled "fwd" commands
    for g in settled:
        forward = [c for spec in v.agents for c in spec.update_commands() if c.name == "fwd" and holds(c.guard, g[0])]
        starts.add(fire(g, forward))

    seen = set(starts)
    queue = deque(starts)
    while queue:
        g = queue.popleft()
        options = []
        for spec in v.agents:
            enabled = [c for c in spec.update_commands() if holds(c.guard, g[0])]
            options.append(enabled or [None])
        for pick in itertools.product(*options):
            h = fire(g, [c for c in pick if c is not None])
            if h not in seen:
                seen.add(h)
                queue.append(h)
    return len(starts), len(seen)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description="Count reachable global states of a vCGS")
    parser.add_argument("vcgs", help="vCGS file")
    args = parser.parse_args(argv)

    initial, reachable = count_states(load_vcgs(args.vcgs))
    print(f"initial: {initial}")
    print(f"reachable: {reachable}")


if __name__ == "__main__":
    main()
