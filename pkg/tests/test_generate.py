import sys
import pathlib

sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent))

import random

import pytest

from app.formats import dumps_icgs
from app.generate import SHAPES, FormulaShape, LabelStyle, random_icgs, shaped_formula
from app.logic import Coalition, Dialect, Next, check_dialect, temporal_depth


@pytest.mark.parametrize("kwargs", [{"states": 0}, {"states": 9}, {"agents": 4}, {"actions": 0}])
def test_rejects_out_of_range_sizes(kwargs):
    with pytest.raises(ValueError):
        random_icgs(random.Random(0), **kwargs)


def test_same_seed_same_model():
    first = random_icgs(random.Random(42), states=4, agents=2)
    second = random_icgs(random.Random(42), states=4, agents=2)
    assert dumps_icgs(first) == dumps_icgs(second)


def test_models_are_total_with_one_initial_state():
    m = random_icgs(random.Random(1), states=3, agents=2, actions=2, classes=1)
    assert m.initial == ("s0",)
    assert len(m.transition) == 3 * 4
    assert all(len(m.indist[a]) == 1 for a in m.agents)


def test_label_styles():
    empty = random_icgs(random.Random(3), labels=LabelStyle.EMPTY)
    assert all(not empty.labels[s] for s in empty.states)
    constant = random_icgs(random.Random(3), labels=LabelStyle.CONSTANT)
    assert len({constant.labels[s] for s in constant.states}) == 1
    assert constant.labels["s0"]


@pytest.mark.parametrize("shape", SHAPES)
def test_shaped_formulas_are_atl(shape):
    rng = random.Random(8)
    for _ in range(20):
        f = shaped_formula(rng, shape, ("a", "b"), ("p", "q"))
        check_dialect(f, Dialect.ATL)
        assert isinstance(f, Coalition)
        assert temporal_depth(f) <= 2
        if shape is FormulaShape.NEXT:
            assert isinstance(f.body, Next)
