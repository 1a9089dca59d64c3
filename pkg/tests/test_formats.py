import sys
import pathlib

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

import logging

import pytest

from app.errors import InputError, ModelSyntaxError
from app.formats import (
    dumps_icgs,
    dumps_vcgs,
    format_guard,
    load_icgs,
    loads_icgs,
    loads_vcgs,
    looks_like_vcgs,
    read_text,
    save_icgs,
)
from app.logic import And, Atom, Not, Or
from app.reduction import compile_icgs


@pytest.mark.parametrize("name", ["worked.icgs", "gadget.icgs"])
def test_data_files_are_canonical(data_dir, name):
    text = (data_dir / name).read_text()
    assert dumps_icgs(loads_icgs(text)) == text


def test_comments_and_free_layout(data_dir):
    m = load_icgs(data_dir / "coalition.icgs")
    assert m.agents == ("a", "b")
    assert m.labels["win"] == frozenset({"p"})
    assert m.protocol[("s0", "b")] == ("L", "R")


def test_save_and_load(tmp_path, gadget):
    path = tmp_path / "gadget.icgs"
    save_icgs(gadget, path)
    assert load_icgs(path) == gadget


def test_vcgs_text_survives_a_reload(worked, gadget):
    for m in (worked, gadget):
        v = compile_icgs(m)
        text = dumps_vcgs(v)
        assert loads_vcgs(text) == v
        assert dumps_vcgs(loads_vcgs(text)) == text


def test_icgs_syntax_error_has_position():
    with pytest.raises(ModelSyntaxError) as exc:
        loads_icgs("agents: a\nstates s0\n")
    assert exc.value.line == 2


def test_vcgs_syntax_error():
    with pytest.raises(ModelSyntaxError):
        loads_vcgs("agent a { atoms: x; update go: x ~> x = T; }")


def test_duplicate_transition():
    with pytest.raises(InputError):
        loads_icgs("agents: a\nactions a: x\nstates: s\ninitial: s\ntrans s (x) -> s\ntrans s (x) -> s\n")


def test_indist_for_unknown_agent():
    with pytest.raises(InputError):
        loads_icgs("agents: a\nactions a: x\nstates: s\ninitial: s\nindist b: {s}\ntrans s (x) -> s\n")


def test_overlapping_blocks_are_closed_with_a_warning(caplog):
    text = (
        "agents: a\nactions a: x\nstates: s t u\ninitial: s\n"
        "indist a: {s t} {t u}\n"
        "trans s (x) -> t\ntrans t (x) -> u\ntrans u (x) -> s\n"
    )
    with caplog.at_level(logging.WARNING):
        m = loads_icgs(text)
    assert m.indist["a"] == (("s", "t", "u"),)
    assert any("closed to a partition" in r.getMessage() for r in caplog.records)


def test_missing_indist_is_identity():
    m = loads_icgs("agents: a\nactions a: x\nstates: s t\ninitial: s\ntrans s (x) -> t\ntrans t (x) -> s\n")
    assert m.indist["a"] == (("s",), ("t",))
    assert m.props == ()


def test_format_guard():
    g = And(Or(Atom("x"), Atom("y")), Not(And(Atom("x"), Atom("z"))))
    assert format_guard(g) == "(x | y) & !(x & z)"


def test_looks_like_vcgs(data_dir):
    assert looks_like_vcgs("model.vcgs", "")
    assert looks_like_vcgs("model.txt", (data_dir / "worked.vcgs").read_text())
    assert not looks_like_vcgs("model.icgs", (data_dir / "worked.icgs").read_text())


def test_read_text_wraps_os_errors(tmp_path):
    with pytest.raises(InputError):
        read_text(tmp_path / "missing.icgs")
