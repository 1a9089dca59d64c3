import sys
import pathlib

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

import random

import pytest

from app.errors import ContractError, InputError, ResourceError
from app.formats import loads_vcgs
from app.logic import Atom, Not, Top
from app.generate import random_icgs
from app.reduction import compile_icgs
from app.vcgs import (
    VCGS,
    AgentSpec,
    CommandKind,
    GlobalState,
    GuardedCommand,
    blank_state,
    enabled_commands,
    explore,
    initial_states,
    observation,
    start_states,
    step,
    unfold,
    well_formedness,
)
from app.xval import is_faithful, macro_quotient, model_state, observation_partition_matches
from scripts.enumerate_states import count_states

TOGGLE = """
environment: env;
props: p;

agent env {
  atoms: ;
  init start: T ~> p := F;
  update flip: !p ~> p := T;
  update back: p ~> p := F;
}

agent a {
  atoms: x;
  init show: T ~> vis(x, env) := T;
  update set: !x ~> x := T;
}
"""


def _codes(v):
    return [violation.code for violation in well_formedness(v).violations]


def test_initial_states_and_step():
    v = loads_vcgs(TOGGLE)
    (g0,) = initial_states(v)
    assert g0.valuation == frozenset()
    assert g0.sees("x", "env")
    assert g0.sees("p", "env")
    assert not g0.sees("p", "a")
    g1 = step(v, g0, {"env": "flip", "a": "set"})
    assert g1.valuation == frozenset({"p", "x"})
    # nothing is enabled for a any more, so it skips
    assert enabled_commands(v, g1, "a") == []
    g2 = step(v, g1, {"env": "back"})
    assert g2.valuation == frozenset({"x"})


def test_step_contract():
    v = loads_vcgs(TOGGLE)
    (g0,) = initial_states(v)
    with pytest.raises(ContractError):
        step(v, g0, {"env": "flip"})
    with pytest.raises(ContractError):
        step(v, g0, {"env": "back", "a": "set"})
    with pytest.raises(InputError):
        step(v, g0, {"nobody": "set"})


def test_observation_depends_on_visibility():
    v = loads_vcgs(TOGGLE)
    (g0,) = initial_states(v)
    h = GlobalState(frozenset({"p"}), g0.visible)
    # a cannot see p, the environment can
    assert observation(v, g0, "a") == observation(v, h, "a")
    assert observation(v, g0, "env") != observation(v, h, "env")


def test_unfold_toggle():
    exploration = explore(loads_vcgs(TOGGLE))
    stats = exploration.stats
    assert stats.initial == 1
    assert stats.states == 3
    assert stats.edges == 3
    assert exploration.icgs.agents == ("a", "env")
    assert exploration.icgs.actions["a"] == ("set", "skip")
    assert sum(stats.phases.values()) == stats.states


def test_unfold_bound():
    with pytest.raises(ResourceError) as exc:
        unfold(loads_vcgs(TOGGLE), state_bound=2)
    assert exc.value.bound == 2


def test_lint():
    bad = VCGS(
        agents=(
            AgentSpec(
                name="a",
                atoms=("x",),
                commands=(
                    GuardedCommand("skip", CommandKind.UPDATE, Top(), (("x", True),)),
                    GuardedCommand("steal", CommandKind.UPDATE, Atom("y"), (("y", True),)),
                    GuardedCommand("twice", CommandKind.UPDATE, Top(), (("x", True), ("x", False))),
                    GuardedCommand("self", CommandKind.INIT, Top(), (), (("x", "a", True),)),
                ),
            ),
            AgentSpec(name="b", atoms=("y",), commands=()),
        )
    )
    codes = _codes(bad)
    assert "reserved" in codes
    assert "ownership" in codes
    assert "double-assignment" in codes
    assert "self-visibility" in codes
    assert "unobservable-guard" in codes
    with pytest.raises(InputError):
        explore(bad)


def test_undeclared_guard_atom():
    v = VCGS(agents=(AgentSpec("a", ("x",), (GuardedCommand("go", CommandKind.UPDATE, Not(Atom("zz"))),)),))
    assert "undeclared-atom" in _codes(v)


def test_blank_state_owner_visibility():
    v = loads_vcgs(TOGGLE)
    assert blank_state(v) == GlobalState(frozenset(), frozenset({("x", "a"), ("p", "env")}))


# ---------------------------------------------------------------------------
# Compiled games
# ---------------------------------------------------------------------------

def test_worked_example_unfolds_faithfully(worked):
    v = compile_icgs(worked)
    exploration = explore(v)
    assert exploration.stats.initial == 1
    assert is_faithful(worked, exploration)
    assert observation_partition_matches(v, worked, exploration, "a")
    assert set(macro_quotient(exploration).edges) == {
        ("s0", "s1"), ("s0", "s0"), ("s1", "s0"), ("s1", "s1")
    }


def test_gadget_unfolds_faithfully(gadget):
    v = compile_icgs(gadget)
    exploration = explore(v)
    assert is_faithful(gadget, exploration)
    for agent in gadget.agents:
        assert observation_partition_matches(v, gadget, exploration, agent)


def test_independent_enumeration_agrees(worked, gadget, coalition_model):
    for m in (worked, gadget, coalition_model):
        v = compile_icgs(m)
        stats = explore(v).stats
        assert count_states(v) == (stats.initial, stats.states)
    v = loads_vcgs(TOGGLE)
    assert count_states(v) == (1, explore(v).stats.states)


def test_worked_example_initial_state(worked):
    v = compile_icgs(worked)
    (g0,) = initial_states(v)
    assert "st.s0" in g0.valuation
    assert "cls.a.s0" in g0.valuation
    assert g0.sees("cls.a.s0", "a")
    assert "turn.a" not in g0.valuation
    assert "turn.env" not in g0.valuation
    assert [c.name for c in enabled_commands(v, g0, "a")] == ["fwd"]
    obs = observation(v, g0, "a")
    assert "st.s0" not in obs.visible_atoms
    assert "cls.a.s0" in obs.true_atoms


def test_forward_round_closes_init(worked):
    v = compile_icgs(worked)
    (start,) = start_states(v)
    assert {"turn.a", "turn.env"} <= start.valuation
    assert not any(atom.startswith("act.") for atom in start.valuation)
    assert enabled_commands(v, start, "env") == []
    assert start.visible == initial_states(v)[0].visible


def test_first_transition_lands_on_second_tick(worked):
    v = compile_icgs(worked)
    (g0,) = start_states(v)
    g1 = step(v, g0, {"a": "act.L.s0"})
    assert model_state(g1) == "s0"
    assert [c.name for c in enabled_commands(v, g1, "a")] == ["fwd"]
    assert [c.name for c in enabled_commands(v, g1, "env")] == ["tr.s0.L"]
    g2 = step(v, g1, {"a": "fwd", "env": "tr.s0.L"})
    assert model_state(g2) == "s1"
    # same phase as the start: the agent chooses again
    assert [c.name for c in enabled_commands(v, g2, "a")] == ["act.L.s0", "act.R.s0"]


def test_unfolding_keeps_one_state_atom_and_fixed_visibility(worked, gadget):
    for m in (worked, gadget):
        v = compile_icgs(m)
        exploration = explore(v)
        (visible,) = {g.visible for g in start_states(v)}
        for g in exploration.globals.values():
            assert sum(atom.startswith("st.") for atom in g.valuation) == 1
            assert g.visible == visible


def test_random_models_unfold_faithfully():
    for index in range(50):
        rng = random.Random(f"unfold:{index}")
        states = rng.randint(1, 4)
        m = random_icgs(
            rng, states=states, agents=rng.randint(1, 2), actions=rng.randint(1, 2), classes=rng.randint(1, states)
        )
        v = compile_icgs(m)
        exploration = explore(v)
        assert is_faithful(m, exploration), index
        for agent in m.agents:
            assert observation_partition_matches(v, m, exploration, agent), (index, agent)
