import sys
import pathlib

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

import dataclasses

import pytest

from app.errors import InputError, ProtocolError
from app.model import (
    ICGS,
    Severity,
    close_partition,
    equivalence_class,
    joint_actions,
    successor,
    validate_icgs,
)


def _codes(m):
    return [v.code for v in validate_icgs(m).violations]


def test_worked_example_is_valid(worked):
    report = validate_icgs(worked)
    assert report.ok
    assert report.violations == []


def test_build_sorts_and_fills_defaults():
    m = ICGS.build(
        agents=["b", "a"],
        actions={"a": ["R", "L"], "b": ["x"]},
        states=["t", "s"],
        initial=["s"],
        transition={("s", ("L", "x")): "t"},
    )
    assert m.agents == ("a", "b")
    assert m.actions["a"] == ("L", "R")
    assert m.states == ("s", "t")
    assert m.protocol[("t", "a")] == ("L", "R")
    assert m.indist["a"] == (("s",), ("t",))
    assert m.props == ()


def test_missing_transition_reported():
    m = ICGS.build(
        agents=["a"],
        actions={"a": ["L", "R"]},
        states=["s"],
        initial=["s"],
        transition={("s", ("L",)): "s"},
    )
    report = validate_icgs(m)
    assert not report.ok
    assert [v.location for v in report.errors] == ["trans s (R)"]
    assert report.errors[0].code == "missing-transition"


def test_non_uniform_protocol_reported(worked):
    protocol = dict(worked.protocol)
    protocol[("s1", "a")] = ("L",)
    broken = dataclasses.replace(worked, protocol=protocol)
    codes = _codes(broken)
    assert "non-uniform-protocol" in codes
    # the now disallowed transition is reported too
    assert "disallowed-transition" in codes


def test_empty_initial_and_unknown_state(worked):
    assert "no-initial" in _codes(dataclasses.replace(worked, initial=()))
    assert "unknown-state" in _codes(dataclasses.replace(worked, initial=("zz",)))


def test_overlapping_blocks_are_not_a_partition(worked):
    broken = dataclasses.replace(worked, indist={"a": (("s0", "s1"), ("s1",))})
    violations = validate_icgs(broken).errors
    assert [v.code for v in violations] == ["not-a-partition"]
    assert "'s1'" in violations[0].message


def test_undeclared_label(worked):
    labels = dict(worked.labels)
    labels["s1"] = frozenset({"q"})
    codes = _codes(dataclasses.replace(worked, labels=labels))
    assert codes == ["undeclared-prop"]


def test_severity_defaults_to_error(worked):
    broken = dataclasses.replace(worked, initial=())
    assert all(v.severity is Severity.ERROR for v in validate_icgs(broken).violations)


def test_equivalence_class(worked):
    assert equivalence_class(worked, "a", "s1") == frozenset({"s0", "s1"})
    with pytest.raises(InputError):
        equivalence_class(worked, "zz", "s0")
    with pytest.raises(InputError):
        equivalence_class(worked, "a", "zz")


def test_joint_actions_follow_protocol(gadget):
    assert list(joint_actions(gadget, "q0")) == [("L", "l"), ("L", "r")]
    assert list(joint_actions(gadget, "q1")) == [("L", "l"), ("R", "l")]


def test_successor(gadget):
    assert successor(gadget, "q0", ("L", "r")) == "q2"
    with pytest.raises(ProtocolError) as exc:
        successor(gadget, "q0", ("R", "l"))
    assert exc.value.agent == "a"
    with pytest.raises(InputError):
        successor(gadget, "nowhere", ("L", "l"))
    with pytest.raises(InputError):
        successor(gadget, "q0", ("L",))


def test_close_partition_merges_overlaps():
    closed = close_partition(["s0", "s1", "s2", "s3"], [["s0", "s1"], ["s1", "s2"]])
    assert closed == (("s0", "s1", "s2"), ("s3",))


def test_reachable_states(gadget, worked):
    assert gadget.reachable_states() == frozenset(gadget.states)
    assert worked.reachable_states() == frozenset({"s0", "s1"})


def test_identity_and_refined_partitions(worked):
    assert worked.with_identity_indist().indist["a"] == (("s0",), ("s1",))
    refined = worked.with_indist("a", [["s1"], ["s0"]])
    assert refined.indist["a"] == (("s0",), ("s1",))
    assert refined.representative("a", "s1") == "s1"
