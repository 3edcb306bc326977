"""Equation view of a model: each outport as an expression over inputs, time and state.

Delay chains become ``Shift`` nodes carrying their initial values; each
integrator becomes an ``IntState`` atom whose derivative is kept in
``state_defs``. :func:`eval_equations` replays the equations on the
simulator's time grid, which lets tests confront the two representations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from refcheck.expr import Add, Apply, Env, Expr, IntState, Mul, Rat, Time, Var, delay, evaluate, max_delay, show
from refcheck.model import Kind, ModelClass, UnsupportedModelError, ValidatedModel, classify
from refcheck.normal import normalize, show_normal
from refcheck.sim import (
    NumericOverflow,
    SampleTimeMismatch,
    Scenario,
    SolverConfig,
    Trace,
    check_scenario,
)
from refcheck.solvers import STEPPERS


@dataclass(frozen=True)
class EquationSystem:
    cls: ModelClass
    outputs: Mapping[str, Expr]
    # integrator id -> (initial value, derivative); empty unless continuous
    state_defs: Mapping[str, tuple[Fraction, Expr]] = field(default_factory=dict)
    inports: tuple[str, ...] = ()
    sample_time: Fraction = Fraction(1)

    @property
    def max_delay(self) -> int:
        return max((max_delay(e) for e in self.outputs.values()), default=0)

    def to_text(self, normalized: bool = False) -> str:
        fmt = (lambda e: show_normal(normalize(e))) if normalized else show
        lines = [f"{sid}' = {fmt(deriv)}" for sid, (_, deriv) in sorted(self.state_defs.items())]
        lines += [f"{name} = {fmt(e)}" for name, e in sorted(self.outputs.items())]
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.to_text()


def _block_expr(vm: ValidatedModel, bid: str, cache: dict, active: set) -> Expr:
    if bid in cache:
        return cache[bid]
    if bid in active:
        raise UnsupportedModelError(f"feedback loop through unit delay {bid!r} has no finite delay-chain equation")
    active.add(bid)
    block = vm.blocks[bid]
    kind = block.kind
    ins = [_block_expr(vm, src, cache, active) for src in vm.inputs_of(bid)] if kind is not Kind.INTEGRATOR else []
    if kind is Kind.INPORT:
        e = Var(bid)
    elif kind is Kind.CONSTANT:
        e = Rat(block["value"])
    elif kind is Kind.CLOCK:
        e = Time()
    elif kind is Kind.GAIN:
        e = Mul((Rat(block["k"]), ins[0]))
    elif kind is Kind.SUM:
        e = Add(tuple(x if s == "+" else Mul((Rat(-1), x)) for s, x in zip(block["signs"], ins)))
    elif kind is Kind.PRODUCT:
        e = Mul(tuple(ins))
    elif kind is Kind.UNARY_FN:
        e = Apply(block["op"], ins[0])
    elif kind is Kind.UNIT_DELAY:
        e = delay(ins[0], block["init"])
    elif kind is Kind.OUTPORT:
        e = ins[0]
    else:
        e = IntState(bid)
    active.discard(bid)
    cache[bid] = e
    return e


def extract(vm: ValidatedModel) -> EquationSystem:
    """Build the outport equations (and integrator definitions) of a validated model."""
    cls = classify(vm)
    if cls is ModelClass.HYBRID:
        raise UnsupportedModelError("hybrid models (unit delays and integrators together) are not supported")
    cache: dict[str, Expr] = {}
    state_defs: dict[str, tuple[Fraction, Expr]] = {}
    for iid in vm.ids_of(Kind.INTEGRATOR):
        cache[iid] = IntState(iid)
    for iid in vm.ids_of(Kind.INTEGRATOR):
        src = vm.inputs_of(iid)[0]
        state_defs[iid] = (vm.blocks[iid]["init"], _block_expr(vm, src, cache, set()))
    outputs = {name: _block_expr(vm, name, cache, set()) for name in vm.outports}
    return EquationSystem(cls, outputs, state_defs, tuple(vm.inports), vm.sample_time)


def _guard(t: float, where: str):
    def check(v):
        if not math.isfinite(v):
            raise NumericOverflow(t, where)

    return check


def eval_equations(eqs: EquationSystem, scenario: Scenario, cfg: SolverConfig) -> Trace:
    """Sample the equations on ``cfg``'s grid, in floating point, like :func:`refcheck.sim.simulate`."""
    if eqs.cls is ModelClass.HYBRID:
        raise UnsupportedModelError("hybrid models are not supported")
    if eqs.cls is ModelClass.DISCRETE and not math.isclose(cfg.h, float(eqs.sample_time), rel_tol=1e-12):
        raise SampleTimeMismatch(f"discrete model needs h == sample_time ({float(eqs.sample_time)!r}), got h={cfg.h!r}")
    check_scenario(list(eqs.inports), scenario)

    def var(name: str, k: int) -> float:
        return float(scenario[name].at(cfg.time(k), k))

    names = sorted(eqs.outputs)
    trace = Trace([], {n: [] for n in names})
    n_steps = cfg.steps

    if eqs.cls is not ModelClass.CONTINUOUS:
        for k in range(n_steps + 1):
            t = cfg.time(k)
            env = Env(var, cfg.time)
            trace.times.append(t)
            for name in names:
                env.guard = _guard(t, name)
                trace.values[name].append(evaluate(eqs.outputs[name], env, k))
        return trace

    step = STEPPERS[cfg.method]
    state = {sid: float(init) for sid, (init, _) in sorted(eqs.state_defs.items())}
    for k in range(n_steps + 1):
        t = cfg.time(k)
        major = k

        def env_at(ts: float, x: Mapping[str, float]) -> Env:
            return Env(lambda name, _k: float(scenario[name].at(ts, major)), lambda _k: ts, x, guard=_guard(ts, "equations"))

        env = env_at(t, state)
        trace.times.append(t)
        for name in names:
            trace.values[name].append(evaluate(eqs.outputs[name], env, k))
        if k == n_steps:
            break

        def deriv(ts: float, x: Mapping[str, float]) -> dict[str, float]:
            e = env_at(ts, x)
            return {sid: evaluate(d, e, major) for sid, (_, d) in eqs.state_defs.items()}

        state = step(deriv, t, state, cfg.h, deriv(t, state))
        for sid, v in state.items():
            if not math.isfinite(v):
                raise NumericOverflow(t + cfg.h, sid)
    return trace
