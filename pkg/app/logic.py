"""ATL / ATL* formulas: syntax tree, parser, printer and transformations.

Concrete syntax (highest precedence first)::

    !f   X f   G f   F f   <<a,b>> f      unary, right-nested
    f U g                                  right associative
    f & g                                  left associative
    f | g                                  left associative

``true`` and ``false`` are the constants. Atoms and agent names match
``[A-Za-z0-9_][A-Za-z0-9_.@]*``; the words ``X G F U true false`` are
reserved.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass
from enum import Enum

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from .errors import DialectError, FormulaSyntaxError


class Dialect(str, Enum):
    ATL = "atl"
    ATLSTAR = "atl*"


class Formula:
    """Base class of all formula nodes."""

    def __str__(self) -> str:
        return print_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Coalition(Formula):
    agents: tuple[str, ...]
    body: Formula

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(sorted(set(self.agents))))


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


TEMPORAL = (Next, Always, Eventually, Until)
RESERVED = frozenset({"X", "G", "F", "U", "true", "false"})

GRAMMAR = r"""
?start: disj

?disj: conj
     | disj "|" conj        -> or_

?conj: until
     | conj "&" until       -> and_

?until: unary
      | unary "U" until     -> until

?unary: primary
      | "!" unary           -> not_
      | "X" unary           -> next_
      | "G" unary           -> always
      | "F" unary           -> eventually
      | coalition unary     -> coalition_

?primary: ID                -> atom
        | "true"            -> top
        | "false"           -> bottom
        | "(" disj ")"

coalition: "<<" ">>"
         | "<<" ID ("," ID)* ">>"

ID: /[A-Za-z0-9_][A-Za-z0-9_.@]*/

%import common.WS
%ignore WS
"""


@v_args(inline=True)
class _ToFormula(Transformer):
    def atom(self, token):
        return Atom(str(token))

    def top(self):
        return Top()

    def bottom(self):
        return Bottom()

    def not_(self, arg):
        return Not(arg)

    def and_(self, left, right):
        return And(left, right)

    def or_(self, left, right):
        return Or(left, right)

    def until(self, left, right):
        return Until(left, right)

    def next_(self, arg):
        return Next(arg)

    def always(self, arg):
        return Always(arg)

    def eventually(self, arg):
        return Eventually(arg)

    def coalition(self, *tokens):
        return tuple(str(t) for t in tokens)

    def coalition_(self, agents, body):
        return Coalition(agents, body)


_PARSER = Lark(GRAMMAR, parser="lalr")


def _position(exc: UnexpectedInput) -> tuple[int | None, int | None]:
    line = getattr(exc, "line", None)
    column = getattr(exc, "column", None)
    if line is None or line < 1:
        return None, None
    return line, column


def parse_formula(text: str, dialect: Dialect | str = Dialect.ATL) -> Formula:
    """Parse ``text`` and check it against ``dialect``.

    In the ATL dialect ``F f`` is read as ``true U f``; in ATL* it stays a
    primitive operator.
    """
    dialect = Dialect(dialect)
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as exc:
        line, column = _position(exc)
        raise FormulaSyntaxError(f"cannot parse formula {text!r}", line, column) from exc
    try:
        formula = _ToFormula().transform(tree)
    except VisitError as exc:  # pragma: no cover - transformer is total
        raise FormulaSyntaxError(str(exc.orig_exc)) from exc
    if dialect is Dialect.ATL:
        formula = desugar_eventually(formula)
    check_dialect(formula, dialect)
    return formula


# ---------------------------------------------------------------------------
# Structure helpers
# ---------------------------------------------------------------------------

def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Next, Always, Eventually)):
        return (f.arg,)
    if isinstance(f, (And, Or, Until)):
        return (f.left, f.right)
    if isinstance(f, Coalition):
        return (f.body,)
    return ()


def rebuild(f: Formula, new_children: tuple[Formula, ...]) -> Formula:
    if isinstance(f, (Not, Next, Always, Eventually)):
        return type(f)(new_children[0])
    if isinstance(f, (And, Or, Until)):
        return type(f)(new_children[0], new_children[1])
    if isinstance(f, Coalition):
        return Coalition(f.agents, new_children[0])
    return f


def transform(f: Formula, rule: Callable[[Formula], Formula]) -> Formula:
    """Rewrite bottom-up: children first, then ``rule`` on the rebuilt node."""
    return rule(rebuild(f, tuple(transform(c, rule) for c in children(f))))


def walk(f: Formula) -> Iterable[Formula]:
    """Pre-order traversal (every occurrence, duplicates included)."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def count_nodes(f: Formula, kind: type | tuple[type, ...]) -> int:
    return sum(1 for node in walk(f) if isinstance(node, kind))


def count_coalition_next(f: Formula) -> int:
    return sum(1 for node in walk(f) if isinstance(node, Coalition) and isinstance(node.body, Next))


def atoms_of(f: Formula) -> frozenset[str]:
    return frozenset(node.name for node in walk(f) if isinstance(node, Atom))


def agents_of(f: Formula) -> frozenset[str]:
    found: set[str] = set()
    for node in walk(f):
        if isinstance(node, Coalition):
            found.update(node.agents)
    return frozenset(found)


def temporal_depth(f: Formula) -> int:
    own = 1 if isinstance(f, TEMPORAL) else 0
    return own + max((temporal_depth(c) for c in children(f)), default=0)


def is_state_formula(f: Formula) -> bool:
    if isinstance(f, (Atom, Top, Bottom, Coalition)):
        return True
    if isinstance(f, (Not, And, Or)):
        return all(is_state_formula(c) for c in children(f))
    return False


def is_propositional(f: Formula) -> bool:
    return all(isinstance(node, (Atom, Top, Bottom, Not, And, Or)) for node in walk(f))


def desugar_eventually(f: Formula) -> Formula:
    def rule(node: Formula) -> Formula:
        if isinstance(node, Eventually):
            return Until(Top(), node.arg)
        return node

    return transform(f, rule)


def check_dialect(f: Formula, dialect: Dialect | str) -> None:
    """Raise :class:`DialectError` unless ``f`` is well formed in ``dialect``.

    ATL requires a state formula whose every coalition body is exactly one of
    ``X f``, ``G f`` or ``f U g`` over state formulas. ATL* accepts any tree.
    """
    if Dialect(dialect) is Dialect.ATLSTAR:
        return
    _check_atl_state(f)


def _check_atl_state(f: Formula) -> None:
    if isinstance(f, (Atom, Top, Bottom)):
        return
    if isinstance(f, (Not, And, Or)):
        for c in children(f):
            _check_atl_state(c)
        return
    if isinstance(f, Coalition):
        body = f.body
        if isinstance(body, (Next, Always)):
            _check_atl_state(body.arg)
            return
        if isinstance(body, Until):
            _check_atl_state(body.left)
            _check_atl_state(body.right)
            return
        raise DialectError(
            f"coalition body {print_formula(body)!r} must be X, G or U over state formulas"
        )
    raise DialectError(
        f"temporal operator in {print_formula(f)!r} is not guarded by a coalition"
    )


def dialect_of(f: Formula) -> Dialect:
    try:
        _check_atl_state(f)
    except DialectError:
        return Dialect.ATLSTAR
    return Dialect.ATL


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

_OR, _AND, _UNTIL, _UNARY = 1, 2, 3, 4


def _precedence(f: Formula) -> int:
    if isinstance(f, Or):
        return _OR
    if isinstance(f, And):
        return _AND
    if isinstance(f, Until):
        return _UNTIL
    return _UNARY


def _wrap(f: Formula, minimum: int) -> str:
    text = print_formula(f)
    return f"({text})" if _precedence(f) < minimum else text


def print_formula(f: Formula) -> str:
    """Render ``f`` with the fewest parentheses that parse back to ``f``."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Or):
        return f"{_wrap(f.left, _OR)} | {_wrap(f.right, _AND)}"
    if isinstance(f, And):
        return f"{_wrap(f.left, _AND)} & {_wrap(f.right, _UNTIL)}"
    if isinstance(f, Until):
        return f"{_wrap(f.left, _UNARY)} U {_wrap(f.right, _UNTIL)}"
    if isinstance(f, Not):
        return f"!{_wrap(f.arg, _UNARY)}"
    if isinstance(f, Next):
        return f"X {_wrap(f.arg, _UNARY)}"
    if isinstance(f, Always):
        return f"G {_wrap(f.arg, _UNARY)}"
    if isinstance(f, Eventually):
        return f"F {_wrap(f.arg, _UNARY)}"
    if isinstance(f, Coalition):
        return f"<<{','.join(f.agents)}>> {_wrap(f.body, _UNARY)}"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Transformations
# ---------------------------------------------------------------------------

def duplicate_next(f: Formula, dialect: Dialect | str) -> Formula:
    """Double every next step so the formula reads correctly on the reduced game.

    ATL*: each ``X g`` becomes ``X X g'``. ATL: each ``<<A>> X g`` becomes
    ``<<A>> X <<A>> X g'``; ``G`` and ``U`` bodies keep their operator.
    """
    if Dialect(dialect) is Dialect.ATLSTAR:
        def rule(node: Formula) -> Formula:
            if isinstance(node, Next):
                return Next(Next(node.arg))
            return node
    else:
        def rule(node: Formula) -> Formula:
            if isinstance(node, Coalition) and isinstance(node.body, Next):
                return Coalition(node.agents, Next(Coalition(node.agents, Next(node.body.arg))))
            return node

    return transform(f, rule)


def subformula_closure(f: Formula) -> list[Formula]:
    """Distinct subformulas, children before parents."""
    ordered: dict[Formula, None] = {}

    def visit(node: Formula) -> None:
        if node in ordered:
            return
        for c in children(node):
            visit(c)
        ordered[node] = None

    visit(f)
    return list(ordered)


def conjunction(items: Iterable[Formula]) -> Formula:
    result: Formula | None = None
    for item in items:
        result = item if result is None else And(result, item)
    return result if result is not None else Top()


def disjunction(items: Iterable[Formula]) -> Formula:
    result: Formula | None = None
    for item in items:
        result = item if result is None else Or(result, item)
    return result if result is not None else Bottom()
