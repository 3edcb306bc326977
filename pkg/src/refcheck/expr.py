"""Signal expressions: the equation language relating outputs to inputs.

Discrete semantics are step-indexed. ``Shift(e, d, inits)`` at step ``k`` is
``inits[k]`` while ``k < d`` and ``e`` at step ``k - d`` afterwards.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Union

from refcheck.bdl import format_number


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Time:
    pass


@dataclass(frozen=True)
class Rat:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Add:
    terms: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(self.terms) < 2:
            raise ValueError("Add needs at least two terms")


@dataclass(frozen=True)
class Mul:
    factors: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise ValueError("Mul needs at least two factors")


@dataclass(frozen=True)
class Apply:
    op: str
    arg: Expr


@dataclass(frozen=True)
class Shift:
    arg: Expr
    depth: int
    inits: tuple[Fraction, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "inits", tuple(Fraction(i) for i in self.inits))
        if self.depth < 1 or len(self.inits) != self.depth:
            raise ValueError(f"Shift depth {self.depth} needs exactly that many initial values, got {len(self.inits)}")


@dataclass(frozen=True)
class IntState:
    id: str


Expr = Union[Var, Time, Rat, Add, Mul, Apply, Shift, IntState]


def delay(arg: Expr, init: Fraction) -> Shift:
    """One unit delay, merged into ``arg`` when it is already a delay chain."""
    if isinstance(arg, Shift):
        return Shift(arg.arg, arg.depth + 1, (Fraction(init),) + arg.inits)
    return Shift(arg, 1, (Fraction(init),))


def show(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Time):
        return "t"
    if isinstance(e, IntState):
        return e.id
    if isinstance(e, Rat):
        return format_number(e.value)
    if isinstance(e, Add):
        return " + ".join(f"({show(t)})" if isinstance(t, Add) else show(t) for t in e.terms)
    if isinstance(e, Mul):
        parts = []
        for f in e.factors:
            s = show(f)
            if isinstance(f, Add) or (isinstance(f, Rat) and f.value < 0):
                s = f"({s})"
            parts.append(s)
        return "*".join(parts)
    if isinstance(e, Apply):
        return f"{e.op}({show(e.arg)})"
    if isinstance(e, Shift):
        inits = ", ".join(format_number(i) for i in e.inits)
        return f"shift({show(e.arg)}, {e.depth}, [{inits}])"
    raise TypeError(f"not a signal expression: {e!r}")


def walk(e: Expr):
    yield e
    if isinstance(e, Add):
        for t in e.terms:
            yield from walk(t)
    elif isinstance(e, Mul):
        for f in e.factors:
            yield from walk(f)
    elif isinstance(e, (Apply, Shift)):
        yield from walk(e.arg)


def max_delay(e: Expr) -> int:
    """Longest chain of delay steps on any path through ``e``."""
    if isinstance(e, Shift):
        return e.depth + max_delay(e.arg)
    if isinstance(e, Add):
        return max(max_delay(t) for t in e.terms)
    if isinstance(e, Mul):
        return max(max_delay(f) for f in e.factors)
    if isinstance(e, Apply):
        return max_delay(e.arg)
    return 0


FLOAT_OPS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "neg": operator.neg,
    "abs": abs,
}


@dataclass
class Env:
    """How leaves are valued during evaluation.

    ``var(name, k)`` and ``time(k)`` give inport values and time at step
    ``k``; ``const`` converts rational literals into the value domain; ``ops``
    interprets the unary functions; ``guard``, when set, sees every
    intermediate value (used to stop on non-finite floats).
    """

    var: Callable[[str, int], Any]
    time: Callable[[int], Any]
    state: Mapping[str, Any] = field(default_factory=dict)
    const: Callable[[Fraction], Any] = float
    ops: Mapping[str, Callable[[Any], Any]] = field(default_factory=lambda: FLOAT_OPS)
    guard: Callable[[Any], None] | None = None


def evaluate(e: Expr, env: Env, k: int = 0):
    """Value of ``e`` at step ``k``. Add and Mul fold left to right."""
    if isinstance(e, Var):
        v = env.var(e.name, k)
    elif isinstance(e, Time):
        v = env.time(k)
    elif isinstance(e, Rat):
        v = env.const(e.value)
    elif isinstance(e, IntState):
        v = env.state[e.id]
    elif isinstance(e, Add):
        v = evaluate(e.terms[0], env, k)
        for t in e.terms[1:]:
            v = v + evaluate(t, env, k)
    elif isinstance(e, Mul):
        v = evaluate(e.factors[0], env, k)
        for f in e.factors[1:]:
            v = v * evaluate(f, env, k)
    elif isinstance(e, Apply):
        v = env.ops[e.op](evaluate(e.arg, env, k))
    elif isinstance(e, Shift):
        v = env.const(e.inits[k]) if k < e.depth else evaluate(e.arg, env, k - e.depth)
    else:
        raise TypeError(f"not a signal expression: {e!r}")
    if env.guard is not None:
        env.guard(v)
    return v
