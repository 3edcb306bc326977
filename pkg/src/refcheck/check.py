"""Equivalence of a source/target model pair.

Unsampled and discrete pairs are compared symbolically: equal normal forms
mean exact equivalence, otherwise a deterministic counterexample search
either finds a distinguishing input or the verdict is ``Unknown``.
Continuous pairs are simulated under shared scenarios on a shared grid and
accepted when every sampled outport stays within the epsilon tube.
"""

from __future__ import annotations

import itertools
import math
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar, Mapping, Union

from mpmath import iv

from refcheck.expr import Apply, Env, Time, evaluate, walk
from refcheck.equations import EquationSystem, extract
from refcheck.model import ModelClass, UnsupportedModelError, ValidatedModel, classify
from refcheck.normal import equal_normal, erase_inits, normalize
from refcheck.sim import (
    DEFAULT_SEED,
    NumericOverflow,
    Scenario,
    SolverConfig,
    default_scenario,
    simulate,
    sup_distance,
)

iv.dps = 60

GRID = (-2, -1, 0, 1, 2)
MAX_GRID_POINTS = 5**6
DEFAULT_BUDGET = 100


class InterfaceMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SymbolicCounterexample:
    """Inputs on which the two equation systems provably differ.

    ``inputs`` maps each inport to its sample sequence (length 1 for
    unsampled pairs). ``step`` is the discrete step index; ``time`` is the
    value given to the clock in unsampled pairs.
    """

    signal: str
    inputs: Mapping[str, tuple[Fraction, ...]]
    value_a: str
    value_b: str
    step: int = 0
    time: Fraction = Fraction(0)


@dataclass(frozen=True)
class TraceCounterexample:
    time: float
    signal: str
    value_a: float
    value_b: float
    scenario: int = 0


Counterexample = Union[SymbolicCounterexample, TraceCounterexample]


@dataclass(frozen=True)
class ExactEquivalent:
    kind: ClassVar[str] = "ExactEquivalent"


@dataclass(frozen=True)
class ApproxEquivalent:
    eps_measured: float
    eps_bound: float | None = None
    kind: ClassVar[str] = "ApproxEquivalent"


@dataclass(frozen=True)
class NotEquivalent:
    counterexample: Counterexample
    kind: ClassVar[str] = "NotEquivalent"


@dataclass(frozen=True)
class Unknown:
    reason: str
    kind: ClassVar[str] = "Unknown"


@dataclass(frozen=True)
class Unsupported:
    reason: str
    kind: ClassVar[str] = "Unsupported"


Verdict = Union[ExactEquivalent, ApproxEquivalent, NotEquivalent, Unknown, Unsupported]


@dataclass(frozen=True)
class TubeConfig:
    epsilon: float
    cfg: SolverConfig = field(default_factory=SolverConfig)
    scenarios: tuple[Scenario, ...] = ()
    lipschitz_L: float | None = None
    deriv_bound_M: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        for name in ("lipschitz_L", "deriv_bound_M"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive when given")


def default_seed() -> int:
    """Counterexample-search seed: ``$REFCHECK_SEED`` if set, else 0xC0FFEE."""
    env = os.environ.get("REFCHECK_SEED")
    return int(env, 0) if env else DEFAULT_SEED


def epsilon_bound(L: float, M: float, p: int, h: float, t0: float, T: float) -> float:
    """A-priori global error of a one-step method of order ``p``: ``(C h^p / L)(e^{L(T-t0)} - 1)``.

    ``C`` is ``M/2`` for Euler and ``M`` for RK4, with ``M`` bounding the
    (p+1)-th derivative of the solution and ``L`` the Lipschitz constant.
    """
    if not (L > 0 and M > 0 and h > 0):
        raise ValueError("L, M and h must be positive")
    if p not in (1, 4):
        raise ValueError("order p must be 1 (Euler) or 4 (RK4)")
    c = M / 2 if p == 1 else M
    return c * h**p / L * math.expm1(L * (T - t0))


# -- symbolic evaluation -----------------------------------------------------


def _iv(q: Fraction):
    return iv.mpf(q.numerator) / q.denominator


_EXACT_OPS = {"neg": lambda x: -x, "abs": abs}
_INTERVAL_OPS = {"neg": lambda x: -x, "abs": abs, "sin": iv.sin, "cos": iv.cos}


def _needs_intervals(systems) -> bool:
    return any(
        isinstance(node, Apply) and node.op in ("sin", "cos")
        for eqs in systems
        for e in eqs.outputs.values()
        for node in walk(e)
    )


def _uses_time(systems) -> bool:
    return any(isinstance(node, Time) for eqs in systems for e in eqs.outputs.values() for node in walk(e))


class _Evaluator:
    """Exact evaluation of equation systems; interval arithmetic once sin/cos appear."""

    def __init__(self, systems, sample_time: Fraction):
        self.intervals = _needs_intervals(systems)
        self.sample_time = sample_time

    def env(self, inputs: Mapping[str, tuple[Fraction, ...]], time: Fraction | None) -> Env:
        lift = _iv if self.intervals else (lambda q: q)

        def var(name: str, k: int):
            seq = inputs[name]
            return lift(seq[min(k, len(seq) - 1)])

        def clock(k: int):
            return lift(time if time is not None else k * self.sample_time)

        return Env(var, clock, const=lift, ops=_INTERVAL_OPS if self.intervals else _EXACT_OPS)

    def differ(self, a, b) -> bool:
        if self.intervals:
            return bool(a.b < b.a or b.b < a.a)
        return a != b

    def show(self, v) -> str:
        if self.intervals:
            return format(float(v.mid), ".17g")
        return str(v)


def _points(names: list[str], length: int, budget: int, seed: int):
    """Deterministic input sequences: the constant grid first, then seeded random rationals."""
    grid = itertools.product(GRID, repeat=len(names))
    for combo in itertools.islice(grid, MAX_GRID_POINTS):
        yield {n: (Fraction(v),) * length for n, v in zip(names, combo)}
    rng = random.Random(seed)
    for _ in range(budget):
        yield {n: tuple(Fraction(rng.randint(-50, 50), rng.randint(1, 12)) for _ in range(length)) for n in names}


def find_counterexample(
    eqs_a: EquationSystem, eqs_b: EquationSystem, budget: int = DEFAULT_BUDGET, seed: int | None = None
) -> SymbolicCounterexample | None:
    """First input (grid order, then random) on which some shared outport differs.

    Unsampled pairs treat the clock as one more input dimension. Discrete pairs
    are driven with sequences of length ``max delay depth + 2`` and compared at
    every step of that window.
    """
    seed = default_seed() if seed is None else seed
    discrete = ModelClass.DISCRETE in (eqs_a.cls, eqs_b.cls)
    ev = _Evaluator((eqs_a, eqs_b), eqs_a.sample_time)
    names = sorted(set(eqs_a.inports) | set(eqs_b.inports))
    signals = sorted(set(eqs_a.outputs) & set(eqs_b.outputs))
    timed = not discrete and _uses_time((eqs_a, eqs_b))
    dims = names + (["\0t"] if timed else [])
    length = max(eqs_a.max_delay, eqs_b.max_delay) + 2 if discrete else 1

    for point in _points(dims, length, budget, seed):
        time = point.pop("\0t")[0] if timed else None
        env = ev.env(point, time)
        for k in range(length):
            for signal in signals:
                va = evaluate(eqs_a.outputs[signal], env, k)
                vb = evaluate(eqs_b.outputs[signal], env, k)
                if ev.differ(va, vb):
                    return SymbolicCounterexample(
                        signal,
                        point,
                        ev.show(va),
                        ev.show(vb),
                        step=k,
                        time=time if time is not None else k * eqs_a.sample_time,
                    )
    return None


def replay(eqs_a: EquationSystem, eqs_b: EquationSystem, cex: SymbolicCounterexample) -> bool:
    """True when the counterexample still separates the two systems."""
    ev = _Evaluator((eqs_a, eqs_b), eqs_a.sample_time)
    timed = ModelClass.DISCRETE not in (eqs_a.cls, eqs_b.cls)
    env = ev.env(cex.inputs, cex.time if timed else None)
    return ev.differ(evaluate(eqs_a.outputs[cex.signal], env, cex.step), evaluate(eqs_b.outputs[cex.signal], env, cex.step))


# -- per-class checkers ------------------------------------------------------


def _differing(eqs_a: EquationSystem, eqs_b: EquationSystem, erase: bool = False) -> list[str]:
    out = []
    for name in sorted(eqs_a.outputs):
        na, nb = normalize(eqs_a.outputs[name]), normalize(eqs_b.outputs[name])
        if erase:
            na, nb = erase_inits(na), erase_inits(nb)
        if not equal_normal(na, nb):
            out.append(name)
    return out


def _symbolic(eqs_a: EquationSystem, eqs_b: EquationSystem, budget: int, seed: int | None) -> Verdict:
    differing = _differing(eqs_a, eqs_b)
    if not differing:
        return ExactEquivalent()
    cex = find_counterexample(eqs_a, eqs_b, budget, seed)
    if cex is not None:
        return NotEquivalent(cex)
    detail = ""
    if eqs_a.cls is ModelClass.DISCRETE and not _differing(eqs_a, eqs_b, erase=True):
        detail = " (they differ only in delay initial values)"
    return Unknown(
        f"normal forms of {', '.join(differing)} differ{detail} but no distinguishing input was found "
        f"among {len(GRID)}^n grid points and {budget} random points"
    )


def check_unsampled(eqs_a: EquationSystem, eqs_b: EquationSystem, budget: int = DEFAULT_BUDGET, seed: int | None = None) -> Verdict:
    return _symbolic(eqs_a, eqs_b, budget, seed)


def check_discrete(eqs_a: EquationSystem, eqs_b: EquationSystem, budget: int = DEFAULT_BUDGET, seed: int | None = None) -> Verdict:
    if eqs_a.sample_time != eqs_b.sample_time:
        return Unsupported(
            f"sample times differ ({eqs_a.sample_time} vs {eqs_b.sample_time}); multirate comparison is not supported"
        )
    return _symbolic(eqs_a, eqs_b, budget, seed)


def check_continuous(vm_a: ValidatedModel, vm_b: ValidatedModel, tube: TubeConfig) -> Verdict:
    scenarios = tube.scenarios or (default_scenario(vm_a.inports),)
    cfg = tube.cfg
    worst: TraceCounterexample | None = None
    eps = 0.0
    for idx, scenario in enumerate(scenarios):
        try:
            ta = simulate(vm_a, scenario, cfg)
            tb = simulate(vm_b, scenario, cfg)
        except NumericOverflow as exc:
            return Unknown(f"divergence at t={exc.time!r} in block {exc.block!r} (scenario {idx})")
        gap, when, signal = sup_distance(ta, tb, vm_a.outports)
        if worst is None or gap > eps:
            eps = gap
            k = ta.times.index(when)
            worst = TraceCounterexample(when, signal, ta.values[signal][k], tb.values[signal][k], idx)
    if eps <= tube.epsilon:
        bound = None
        if tube.lipschitz_L is not None and tube.deriv_bound_M is not None:
            one = epsilon_bound(tube.lipschitz_L, tube.deriv_bound_M, cfg.method.order, cfg.h, cfg.t0, cfg.t_end)
            bound = 2 * one
        return ApproxEquivalent(eps, bound)
    return NotEquivalent(worst)


def replay_trace(vm_a: ValidatedModel, vm_b: ValidatedModel, tube: TubeConfig, cex: TraceCounterexample) -> bool:
    """True when re-simulating reproduces a gap above epsilon at the recorded sample."""
    scenarios = tube.scenarios or (default_scenario(vm_a.inports),)
    ta = simulate(vm_a, scenarios[cex.scenario], tube.cfg)
    tb = simulate(vm_b, scenarios[cex.scenario], tube.cfg)
    k = ta.times.index(cex.time)
    return abs(ta.values[cex.signal][k] - tb.values[cex.signal][k]) > tube.epsilon


def check(
    vm_a: ValidatedModel,
    vm_b: ValidatedModel,
    tube: TubeConfig | None = None,
    *,
    budget: int = DEFAULT_BUDGET,
    seed: int | None = None,
) -> Verdict:
    """Decide equivalence of two validated models with the same inports and outports.

    ``tube`` is required only for continuous pairs. A continuous model may
    be paired with an unsampled one (e.g. an ODE against its closed-form
    solution); such pairs are compared numerically.
    """
    if set(vm_a.inports) != set(vm_b.inports) or set(vm_a.outports) != set(vm_b.outports):
        raise InterfaceMismatch(
            f"port names differ: inports {vm_a.inports} vs {vm_b.inports}, outports {vm_a.outports} vs {vm_b.outports}"
        )
    ca, cb = classify(vm_a), classify(vm_b)
    if ModelClass.HYBRID in (ca, cb):
        return Unsupported("hybrid models are future work")
    # A stateless model is a closed-form signal, so it may stand in for an ODE's solution.
    if {ca, cb} == {ModelClass.CONTINUOUS, ModelClass.UNSAMPLED}:
        ca = cb = ModelClass.CONTINUOUS
    if ca is not cb:
        return Unsupported(f"class mismatch: {ca.value} vs {cb.value}")
    if ca is ModelClass.CONTINUOUS:
        if tube is None:
            raise ValueError("continuous pairs need a TubeConfig with an epsilon")
        return check_continuous(vm_a, vm_b, tube)
    try:
        eqs_a, eqs_b = extract(vm_a), extract(vm_b)
    except UnsupportedModelError as exc:
        return Unsupported(str(exc))
    if ca is ModelClass.UNSAMPLED:
        return check_unsampled(eqs_a, eqs_b, budget, seed)
    return check_discrete(eqs_a, eqs_b, budget, seed)
