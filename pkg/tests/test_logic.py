import sys
import pathlib

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.errors import DialectError, FormulaSyntaxError
from app.generate import random_formula
from app.logic import (
    Always,
    And,
    Atom,
    Bottom,
    Coalition,
    Dialect,
    Eventually,
    Next,
    Not,
    Or,
    Top,
    Until,
    count_coalition_next,
    count_nodes,
    dialect_of,
    duplicate_next,
    parse_formula,
    print_formula,
    subformula_closure,
    temporal_depth,
)

p, q = Atom("p"), Atom("q")


def test_parse_nested_coalitions():
    f = parse_formula("<<a>> X <<a>> X win")
    assert f == Coalition(("a",), Next(Coalition(("a",), Next(Atom("win")))))


def test_coalition_agents_are_sorted_and_deduplicated():
    f = parse_formula("<<b,a,b>> G p")
    assert f.agents == ("a", "b")
    assert parse_formula("<<>> X p") == Coalition((), Next(p))


def test_precedence_and_associativity():
    assert parse_formula("p | q & p", Dialect.ATLSTAR) == Or(p, And(q, p))
    assert parse_formula("p & q & p", Dialect.ATLSTAR) == And(And(p, q), p)
    assert parse_formula("p U q U p", Dialect.ATLSTAR) == Until(p, Until(q, p))
    assert parse_formula("!p U q", Dialect.ATLSTAR) == Until(Not(p), q)
    assert parse_formula("X p & q", Dialect.ATLSTAR) == And(Next(p), q)


def test_eventually_is_desugared_in_atl_only():
    assert parse_formula("<<a>> F p") == Coalition(("a",), Until(Top(), p))
    assert parse_formula("<<a>> F p", Dialect.ATLSTAR) == Coalition(("a",), Eventually(p))


def test_syntax_error_reports_position():
    with pytest.raises(FormulaSyntaxError) as exc:
        parse_formula("<<a>> X (p & & q)")
    assert exc.value.line == 1
    with pytest.raises(FormulaSyntaxError):
        parse_formula("<<a X p")


@pytest.mark.parametrize(
    "text",
    [
        "<<a>> X X p",
        "<<a>> (X p & X q)",
        "X p",
        "<<a>> p",
        "<<a>> !X p",
    ],
)
def test_atl_rejects_path_shapes(text):
    with pytest.raises(DialectError):
        parse_formula(text, Dialect.ATL)
    # the same text is fine in ATL* unless it is a bare path formula
    if not text.startswith("X"):
        parse_formula(text, Dialect.ATLSTAR)


def test_dialect_error_is_not_a_syntax_error():
    with pytest.raises(DialectError) as exc:
        parse_formula("<<a>> X X p")
    assert not isinstance(exc.value, FormulaSyntaxError)


def test_dialect_of():
    assert dialect_of(parse_formula("<<a>> G p")) is Dialect.ATL
    assert dialect_of(parse_formula("<<a>> G F p", Dialect.ATLSTAR)) is Dialect.ATLSTAR


def test_print_uses_minimal_parentheses():
    assert print_formula(And(p, And(q, p))) == "p & (q & p)"
    assert print_formula(And(And(p, q), p)) == "p & q & p"
    assert print_formula(Until(And(p, q), p)) == "(p & q) U p"
    assert print_formula(Not(Until(p, q))) == "!(p U q)"
    assert print_formula(Coalition(("a", "b"), Next(Top()))) == "<<a,b>> X true"
    assert str(Coalition(("a",), Always(Bottom()))) == "<<a>> G false"


def test_duplicate_next_atl():
    f = parse_formula("<<a>> X <<b>> (p U q)")
    g = duplicate_next(f, Dialect.ATL)
    assert print_formula(g) == "<<a>> X <<a>> X <<b>> (p U q)"
    assert count_coalition_next(g) == 2 * count_coalition_next(f)
    assert dialect_of(g) is Dialect.ATL


def test_duplicate_next_atlstar():
    f = parse_formula("<<a>> (X p U X X q)", Dialect.ATLSTAR)
    g = duplicate_next(f, Dialect.ATLSTAR)
    assert count_nodes(g, Next) == 2 * count_nodes(f, Next)
    assert g == Coalition(("a",), Until(Next(Next(p)), Next(Next(Next(Next(q))))))


def test_duplicate_next_keeps_always_and_until():
    f = parse_formula("<<a>> G p & <<a>> (p U q)")
    assert duplicate_next(f, Dialect.ATL) == f


def test_subformula_closure_is_post_order():
    f = parse_formula("<<a>> X (p & p)")
    closure = subformula_closure(f)
    assert closure == [p, And(p, p), Next(And(p, p)), f]


def test_temporal_depth():
    assert temporal_depth(parse_formula("<<a>> X <<a>> G p")) == 2
    assert temporal_depth(p) == 0


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

leaves = st.sampled_from([Atom("p"), Atom("q"), Atom("r_1"), Top(), Bottom()])
coalitions = st.lists(st.sampled_from(["a", "b", "c"]), max_size=3)


def _extend(children):
    return st.one_of(
        children.map(Not),
        children.map(Next),
        children.map(Always),
        children.map(Eventually),
        st.tuples(children, children).map(lambda t: And(*t)),
        st.tuples(children, children).map(lambda t: Or(*t)),
        st.tuples(children, children).map(lambda t: Until(*t)),
        st.tuples(coalitions, children).map(lambda t: Coalition(tuple(t[0]), t[1])),
    )


formulas = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=200)
@given(formulas)
def test_print_then_parse_is_identity(f):
    assert parse_formula(print_formula(f), Dialect.ATLSTAR) == f


@settings(max_examples=100)
@given(formulas)
def test_duplicate_next_doubles_next_operators(f):
    g = duplicate_next(f, Dialect.ATLSTAR)
    assert count_nodes(g, Next) == 2 * count_nodes(f, Next)
    assert duplicate_next(f, Dialect.ATLSTAR) == g


@pytest.mark.parametrize("dialect", list(Dialect))
def test_duplicate_next_on_generated_formulas(dialect):
    for index in range(500):
        rng = random.Random(f"dup:{dialect.value}:{index}")
        f = random_formula(rng, ("a", "b"), ("p", "q"), dialect=dialect, depth=rng.randint(1, 4))
        g = duplicate_next(f, dialect)
        if dialect is Dialect.ATLSTAR:
            assert count_nodes(g, Next) == 2 * count_nodes(f, Next), str(f)
        else:
            assert count_coalition_next(g) == 2 * count_coalition_next(f), str(f)
        for kind in (Always, Until):
            assert count_nodes(g, kind) == count_nodes(f, kind), str(f)
