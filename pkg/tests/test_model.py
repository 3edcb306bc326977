from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load
from modelgen import models
from refcheck.model import (
    AlgebraicLoop,
    Block,
    DanglingWire,
    DuplicateDriver,
    DuplicateId,
    InvalidBlock,
    Kind,
    Model,
    ModelClass,
    NoOutport,
    UnconnectedInput,
    Wire,
    classify,
    classify_kinds,
    execution_order,
    validate,
)


def test_minimal_model_is_valid():
    vm = load("""
        model m
        block c Constant value=1
        block y Outport
        wire c.0 -> y.0
    """)
    assert vm.outports == ["y"]
    assert classify(vm) is ModelClass.UNSAMPLED


def test_gain_self_loop_is_algebraic():
    with pytest.raises(AlgebraicLoop) as err:
        load("""
            model m
            block g Gain k=2
            block y Outport
            wire g.0 -> g.0
            wire g.0 -> y.0
        """)
    assert err.value.cycle[0] == "g"


def test_loop_through_integrator_is_valid():
    vm = load("""
        model m
        block u Inport
        block s Sum signs=+-
        block x Integrator init=0
        block y Outport
        wire u.0 -> s.0
        wire x.0 -> s.1
        wire s.0 -> x.0
        wire x.0 -> y.0
    """)
    assert classify(vm) is ModelClass.CONTINUOUS


def test_longer_algebraic_loop_reports_its_blocks():
    with pytest.raises(AlgebraicLoop) as err:
        load("""
            model m
            block u Inport
            block s Sum signs=++
            block g Gain k=1/2
            block y Outport
            wire u.0 -> s.0
            wire g.0 -> s.1
            wire s.0 -> g.0
            wire g.0 -> y.0
        """)
    assert set(err.value.cycle) == {"s", "g"}


def test_loop_through_delay_is_valid():
    vm = load("""
        model acc
        block u Inport
        block s Sum signs=++
        block d UnitDelay init=0
        block y Outport
        wire u.0 -> s.0
        wire d.0 -> s.1
        wire s.0 -> d.0
        wire s.0 -> y.0
    """)
    assert classify(vm) is ModelClass.DISCRETE


@pytest.mark.parametrize(
    "blocks, wires, error",
    [
        ([Block.of("c", "Constant", value=1), Block.of("y", "Outport")], [Wire(("c", 0), ("y", 9))], DanglingWire),
        ([Block.of("c", "Constant", value=1), Block.of("y", "Outport")], [Wire(("q", 0), ("y", 0))], DanglingWire),
        ([Block.of("c", "Constant", value=1), Block.of("y", "Outport")], [Wire(("c", 1), ("y", 0))], DanglingWire),
        ([Block.of("c", "Constant", value=1), Block.of("y", "Outport")], [], UnconnectedInput),
        (
            [Block.of("c", "Constant", value=1), Block.of("d", "Constant", value=2), Block.of("y", "Outport")],
            [Wire(("c", 0), ("y", 0)), Wire(("d", 0), ("y", 0))],
            DuplicateDriver,
        ),
        ([Block.of("c", "Constant", value=1), Block.of("c", "Outport")], [Wire(("c", 0), ("c", 0))], DuplicateId),
        ([Block.of("c", "Constant", value=1)], [], NoOutport),
        ([Block.of("s", "Sum", signs="+"), Block.of("y", "Outport")], [Wire(("s", 0), ("y", 0))], InvalidBlock),
    ],
)
def test_validation_errors(blocks, wires, error):
    with pytest.raises(error):
        validate(Model("m", tuple(blocks), tuple(wires)))


def test_classify_examples():
    assert classify_kinds([Kind.CONSTANT, Kind.GAIN, Kind.OUTPORT]) is ModelClass.UNSAMPLED
    assert classify_kinds([Kind.INPORT, Kind.UNIT_DELAY, Kind.OUTPORT]) is ModelClass.DISCRETE
    assert classify_kinds([Kind.CLOCK, Kind.UNARY_FN, Kind.INTEGRATOR, Kind.OUTPORT]) is ModelClass.CONTINUOUS
    assert classify_kinds([Kind.UNIT_DELAY, Kind.INTEGRATOR, Kind.OUTPORT]) is ModelClass.HYBRID


def test_execution_order_chain():
    vm = load("""
        model m
        block o Outport
        block g Gain k=3
        block c Constant value=2
        wire c.0 -> g.0
        wire g.0 -> o.0
    """)
    assert execution_order(vm) == ["c", "g", "o"]


def test_execution_order_ties_are_lexicographic():
    vm = load("""
        model m
        block b1 Constant value=1
        block a1 Constant value=1
        block b2 Outport
        block a2 Outport
        wire b1.0 -> b2.0
        wire a1.0 -> a2.0
    """)
    assert execution_order(vm) == ["a1", "a2", "b1", "b2"]


def test_integrator_precedes_its_feedback_gain():
    vm = load("""
        model decay
        block x Integrator init=1
        block g Gain k=-1
        block y Outport
        wire x.0 -> g.0
        wire g.0 -> x.0
        wire x.0 -> y.0
    """)
    order = execution_order(vm)
    assert order.index("x") < order.index("g")


def test_model_equality_ignores_declaration_order():
    b = (Block.of("c", "Constant", value=Fraction(1, 3)), Block.of("y", "Outport"))
    w = (Wire(("c", 0), ("y", 0)),)
    assert Model("m", b, w) == Model("m", b[::-1], w)
    assert hash(Model("m", b, w)) == hash(Model("m", b[::-1], w))


@settings(max_examples=150, deadline=None)
@given(models())
def test_validate_is_idempotent(model):
    vm = validate(model)
    again = validate(vm.model)
    assert again.annotations() == vm.annotations()
    assert execution_order(again) == execution_order(vm)


@settings(max_examples=150, deadline=None)
@given(models())
def test_execution_order_respects_feedthrough(model):
    vm = validate(model)
    order = execution_order(vm)
    assert sorted(order) == sorted(b.id for b in model.blocks)
    pos = {b: i for i, b in enumerate(order)}
    for w in model.wires:
        if vm.blocks[w.dst[0]].kind.has_feedthrough:
            assert pos[w.src[0]] < pos[w.dst[0]]


@settings(max_examples=100, deadline=None)
@given(models(), st.randoms(use_true_random=False))
def test_classify_depends_only_on_kind_multiset(model, rng):
    kinds = [b.kind for b in model.blocks]
    shuffled = list(kinds)
    rng.shuffle(shuffled)
    assert classify(validate(model)) is classify_kinds(shuffled)
    counts = Counter(kinds)
    expected = {
        (False, False): ModelClass.UNSAMPLED,
        (True, False): ModelClass.DISCRETE,
        (False, True): ModelClass.CONTINUOUS,
        (True, True): ModelClass.HYBRID,
    }[(counts[Kind.UNIT_DELAY] > 0, counts[Kind.INTEGRATOR] > 0)]
    assert classify(model) is expected
