"""Path-formula checking on explicit graphs.

The universal question "do all paths from ``s`` satisfy ``psi``" is answered
by searching for a path that satisfies ``!psi`` in the product of the graph
with the formula's tableau. A product node is a pair ``(state, K)`` where
``K`` fixes the truth of every elementary next-formula. Until-obligations
become generalised Buchi acceptance sets, and a path exists iff the node can
reach a non-trivial strongly connected component meeting every set.

Atoms are read from a labelling ``state -> set of atom names``; the formula
must be built from atoms, constants, boolean connectives and X, G, F, U.
"""

from __future__ import annotations

import itertools
from collections.abc import Hashable, Mapping

import networkx as nx

from .logic import (
    Always,
    And,
    Atom,
    Bottom,
    Eventually,
    Formula,
    Next,
    Not,
    Or,
    Top,
    Until,
    walk,
)

Node = Hashable
Successors = Mapping[Node, frozenset]
Labels = Mapping[Node, frozenset[str]]


def _core(f: Formula) -> Formula:
    """Rewrite G and F into U, leaving X, U and the boolean layer."""
    if isinstance(f, (Atom, Top, Bottom)):
        return f
    if isinstance(f, Not):
        return Not(_core(f.arg))
    if isinstance(f, And):
        return And(_core(f.left), _core(f.right))
    if isinstance(f, Or):
        return Or(_core(f.left), _core(f.right))
    if isinstance(f, Next):
        return Next(_core(f.arg))
    if isinstance(f, Until):
        return Until(_core(f.left), _core(f.right))
    if isinstance(f, Eventually):
        return Until(Top(), _core(f.arg))
    if isinstance(f, Always):
        return Not(Until(Top(), Not(_core(f.arg))))
    raise TypeError(f"{type(f).__name__} is not allowed in a path formula here")


class _Tableau:
    def __init__(self, chi: Formula):
        self.chi = _core(chi)
        untils: dict[Until, None] = {}
        nexts: dict[Formula, None] = {}
        for node in walk(self.chi):
            if isinstance(node, Until):
                untils[node] = None
            elif isinstance(node, Next):
                nexts[node.arg] = None
        self.untils = list(untils)
        # elementary obligations: "X g" for every next body g and "X (g U h)"
        self.elementary: list[Formula] = list(dict.fromkeys([*nexts, *untils]))
        self.slot = {g: i for i, g in enumerate(self.elementary)}

    def holds(self, f: Formula, labels: frozenset[str], k: tuple[bool, ...]) -> bool:
        if isinstance(f, Atom):
            return f.name in labels
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Not):
            return not self.holds(f.arg, labels, k)
        if isinstance(f, And):
            return self.holds(f.left, labels, k) and self.holds(f.right, labels, k)
        if isinstance(f, Or):
            return self.holds(f.left, labels, k) or self.holds(f.right, labels, k)
        if isinstance(f, Next):
            return k[self.slot[f.arg]]
        if isinstance(f, Until):
            if self.holds(f.right, labels, k):
                return True
            return self.holds(f.left, labels, k) and k[self.slot[f]]
        raise TypeError(type(f).__name__)


def exists_path(successors: Successors, labels: Labels, chi: Formula) -> frozenset:
    """States from which some infinite path satisfies ``chi``.

    Every state is expected to have at least one successor.
    """
    tableau = _Tableau(chi)
    vectors = list(itertools.product((False, True), repeat=len(tableau.elementary)))
    graph = nx.DiGraph()
    predecessors: dict[Node, list[Node]] = {}
    for s, succ in successors.items():
        for t in succ:
            predecessors.setdefault(t, []).append(s)

    for t in successors:
        label_t = labels.get(t, frozenset())
        for k_t in vectors:
            graph.add_node((t, k_t))
            required = tuple(tableau.holds(g, label_t, k_t) for g in tableau.elementary)
            for s in predecessors.get(t, ()):
                graph.add_edge((s, required), (t, k_t))

    def accepting(node, until: Until) -> bool:
        s, k = node
        label_s = labels.get(s, frozenset())
        return tableau.holds(until.right, label_s, k) or not tableau.holds(until, label_s, k)

    fair: set = set()
    for component in nx.strongly_connected_components(graph):
        if len(component) == 1:
            (only,) = component
            if not graph.has_edge(only, only):
                continue
        if all(any(accepting(n, u) for n in component) for u in tableau.untils):
            fair |= component

    good: set = set()
    if fair:
        sink = ("__fair__", None)
        reverse = graph.reverse(copy=True)
        reverse.add_node(sink)
        reverse.add_edges_from((sink, n) for n in fair)
        good = nx.descendants(reverse, sink)

    result = set()
    for s in successors:
        label_s = labels.get(s, frozenset())
        for k in vectors:
            if (s, k) in good and tableau.holds(tableau.chi, label_s, k):
                result.add(s)
                break
    return frozenset(result)


def universal_states(successors: Successors, labels: Labels, psi: Formula) -> frozenset:
    """States all of whose paths satisfy ``psi``."""
    bad = exists_path(successors, labels, Not(psi))
    return frozenset(s for s in successors if s not in bad)
