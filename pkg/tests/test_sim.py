import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load
from modelgen import CLASSES, random_model, random_scenarios
from refcheck.model import ModelClass, UnsupportedModelError, validate
from refcheck.sim import (
    ConstantInput,
    NumericOverflow,
    SampleTimeMismatch,
    ScenarioError,
    SeededNoise,
    SineInput,
    SolverConfig,
    StepInput,
    Trace,
    default_scenario,
    initial_state,
    output_phase,
    simulate,
    update_phase,
)
from refcheck.solvers import Method, euler_step, rk4_step

GAIN_CHAIN = """
    model m
    block c Constant value=2
    block g Gain k=3
    block y Outport
    wire c.0 -> g.0
    wire g.0 -> y.0
"""


def test_constant_through_gain():
    vm = load(GAIN_CHAIN)
    for t in (0.0, 1.5, 100.0):
        assert output_phase(vm, {}, {}, t)["y"] == 6.0


def test_delay_emits_init_before_update():
    vm = load("""
        model m
        block u Inport
        block d UnitDelay init=5
        block y Outport
        wire u.0 -> d.0
        wire d.0 -> y.0
    """)
    out = output_phase(vm, initial_state(vm), {"u": ConstantInput(7)}, 0.0)
    assert out["y"] == 5.0
    assert update_phase(vm, initial_state(vm), out, 1.0)["d"] == 7.0


def test_sum_signs():
    vm = load("""
        model m
        block a Constant value=4
        block b Constant value=1
        block s Sum signs=+-
        block y Outport
        wire a.0 -> s.0
        wire b.0 -> s.1
        wire s.0 -> y.0
    """)
    assert output_phase(vm, {}, {}, 0.0)["y"] == 3.0


def _integrator_of(src_block: str) -> str:
    return f"""
        model m
        {src_block}
        block x Integrator init=0
        block y Outport
        wire src.0 -> x.0
        wire x.0 -> y.0
    """


def test_euler_update_on_constant_input():
    vm = load(_integrator_of("block src Constant value=1"))
    state = initial_state(vm)
    out = output_phase(vm, state, {}, 0.0)
    assert update_phase(vm, state, out, 0.5, method=Method.EULER)["x"] == 0.5


def test_rk4_is_exact_for_linear_integrand():
    vm = load(_integrator_of("block src Clock"))
    state = initial_state(vm)
    out = output_phase(vm, state, {}, 0.0)
    assert update_phase(vm, state, out, 1.0, method=Method.RK4, t=0.0)["x"] == 0.5


def test_cos_integrator_matches_sin(cos_integrator):
    trace = simulate(cos_integrator, {}, SolverConfig("rk4", 1e-3, 1.0))
    assert trace.times[-1] == 1.0
    assert abs(trace.final("y") - math.sin(1.0)) <= 1e-10


def test_unrolled_delay_with_step_input():
    vm = load("""
        model m
        block u Inport
        block d UnitDelay init=9
        block y Outport
        wire u.0 -> d.0
        wire d.0 -> y.0
    """)
    trace = simulate(vm, {"u": StepInput(0, 0, 1)}, SolverConfig("euler", 1.0, 4.0))
    assert trace.values["y"] == [9.0, 1.0, 1.0, 1.0, 1.0]


@pytest.mark.parametrize("h, t_end", [(1.0, 3.0), (0.1, 2.0), (0.25, 0.3)])
def test_constant_model_is_constant(h, t_end):
    vm = load("""
        model m
        block c Constant value=-7/3
        block y Outport
        wire c.0 -> y.0
    """)
    trace = simulate(vm, {}, SolverConfig("rk4", h, t_end))
    assert set(trace.values["y"]) == {-7 / 3}
    assert len(trace) == math.ceil(t_end / h - 1e-9) + 1


def test_time_grid_is_not_accumulated():
    cfg = SolverConfig("euler", 0.1, 1000.0, t0=3.0)
    assert cfg.steps == 9970
    assert cfg.time(9969) == 3.0 + 9969 * 0.1
    assert cfg.time(cfg.steps) == pytest.approx(1000.0, abs=1e-9)


def test_solver_config_rejects_bad_values():
    with pytest.raises(ValueError):
        SolverConfig("rk4", 0.0, 1.0)
    with pytest.raises(ValueError):
        SolverConfig("rk4", 0.1, 0.0)
    with pytest.raises(ValueError):
        SolverConfig("midpoint", 0.1, 1.0)


def test_hybrid_is_rejected():
    vm = load("""
        model m
        block c Constant value=1
        block d UnitDelay init=0
        block x Integrator init=0
        block y Outport
        wire c.0 -> d.0
        wire d.0 -> x.0
        wire x.0 -> y.0
    """)
    with pytest.raises(UnsupportedModelError):
        simulate(vm, {}, SolverConfig())


def test_discrete_needs_matching_step():
    vm = load("""
        model m
        block c Constant value=1
        block d UnitDelay init=0
        block y Outport
        wire c.0 -> d.0
        wire d.0 -> y.0
        sample_time 0.5
    """)
    with pytest.raises(SampleTimeMismatch):
        simulate(vm, {}, SolverConfig("euler", 0.1, 1.0))
    assert simulate(vm, {}, SolverConfig("euler", 0.5, 1.0)).values["y"] == [0.0, 1.0, 1.0]


def test_blow_up_is_reported():
    vm = load("""
        model m
        block x Integrator init=1
        block p Product arity=2
        block y Outport
        wire x.0 -> p.0
        wire x.0 -> p.1
        wire p.0 -> x.0
        wire x.0 -> y.0
    """)
    with pytest.raises(NumericOverflow) as err:
        simulate(vm, {}, SolverConfig("euler", 0.1, 10.0))
    assert 1.0 <= err.value.time <= 10.0


def test_scenario_must_cover_inports_exactly():
    vm = load("""
        model m
        block u Inport
        block y Outport
        wire u.0 -> y.0
    """)
    with pytest.raises(ScenarioError):
        simulate(vm, {}, SolverConfig("rk4", 1.0, 2.0))
    with pytest.raises(ScenarioError):
        simulate(vm, {"u": ConstantInput(1), "v": ConstantInput(2)}, SolverConfig("rk4", 1.0, 2.0))


def test_input_generators():
    assert StepInput(1.0, -1.0, 2.0).at(0.999, 0) == -1.0
    assert StepInput(1.0, -1.0, 2.0).at(1.0, 0) == 2.0
    assert SineInput(2.0, 3.0, 0.5).at(1.0, 0) == 2.0 * math.sin(3.5)
    noise = SeededNoise(42, 0.5)
    vals = [noise.at(0.0, k) for k in range(200)]
    assert all(-0.5 <= v <= 0.5 for v in vals)
    assert len(set(vals)) > 190
    assert noise.at(0.0, 3) == noise.at(17.0, 3) == SeededNoise(42, 0.5).at(0.0, 3)
    assert SeededNoise(43, 0.5).at(0.0, 3) != noise.at(0.0, 3)
    with pytest.raises(ValueError):
        SeededNoise(-1)
    with pytest.raises(ValueError):
        SeededNoise(2**64)


def test_default_scenario_uses_distinct_seeds():
    sc = default_scenario(["v", "u"])
    assert sc["u"].seed == 0xC0FFEE and sc["v"].seed == 0xC0FFEE + 1


def test_csv_export(cos_integrator):
    trace = simulate(cos_integrator, {}, SolverConfig("euler", 0.1, 0.3))
    text = trace.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,y"
    assert len(lines) == 5
    back = Trace.from_csv(text)
    assert back.times == trace.times and back.values == trace.values


def test_steppers_on_exponential():
    f = lambda t, x: {"x": x["x"]}
    assert euler_step(f, 0.0, {"x": 1.0}, 0.1) == {"x": 1.1}
    rk = rk4_step(f, 0.0, {"x": 1.0}, 0.1)["x"]
    assert rk == pytest.approx(1 + 0.1 + 0.1**2 / 2 + 0.1**3 / 6 + 0.1**4 / 24, abs=1e-15)


def test_euler_oscillator_amplitude_growth(oscillator):
    # Euler on x'' = -x multiplies the phase-space radius by sqrt(1 + h^2) per step.
    h, n = 1e-3, 10000
    trace = simulate(oscillator, {}, SolverConfig("euler", h, n * h), observe_all=True)
    radius = math.hypot(trace.final("x"), trace.final("v"))
    assert radius == pytest.approx((1 + h * h) ** (n / 2), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([ModelClass.UNSAMPLED, ModelClass.DISCRETE]), st.randoms(use_true_random=False))
def test_discrete_traces_do_not_depend_on_method(cls, rng):
    vm = validate(random_model(rng, cls))
    h = float(vm.sample_time)
    for sc in random_scenarios(rng, vm.inports, 2):
        a = simulate(vm, sc, SolverConfig("euler", h, 10 * h))
        b = simulate(vm, sc, SolverConfig("rk4", h, 10 * h))
        assert a.values == b.values


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(CLASSES), st.randoms(use_true_random=False))
def test_simulate_is_deterministic(cls, rng):
    vm = validate(random_model(rng, cls))
    h = float(vm.sample_time) if cls is not ModelClass.CONTINUOUS else 0.05
    sc = random_scenarios(random.Random(0), vm.inports, 1)[0]
    cfg = SolverConfig("rk4", h, 10 * h)
    a, b = simulate(vm, sc, cfg, observe_all=True), simulate(vm, sc, cfg, observe_all=True)
    assert a.times == b.times and a.values == b.values
    assert all(t == cfg.time(k) for k, t in enumerate(a.times))
