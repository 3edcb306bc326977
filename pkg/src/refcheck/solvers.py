"""Fixed-step one-step integrators over dict-valued states.

``f(t, x)`` returns the derivative of every state key. Both the block
simulator and the equation evaluator advance integrator states through
these two functions, so their arithmetic is performed in the same order.
"""

from __future__ import annotations

import enum
from typing import Callable, Mapping

State = Mapping[str, float]
Deriv = Callable[[float, State], Mapping[str, float]]


class Method(str, enum.Enum):
    EULER = "euler"
    RK4 = "rk4"

    @property
    def order(self) -> int:
        return 1 if self is Method.EULER else 4


def euler_step(f: Deriv, t: float, x: State, h: float, k1: Mapping[str, float] | None = None) -> dict[str, float]:
    if k1 is None:
        k1 = f(t, x)
    return {i: x[i] + h * k1[i] for i in x}


def rk4_step(f: Deriv, t: float, x: State, h: float, k1: Mapping[str, float] | None = None) -> dict[str, float]:
    if k1 is None:
        k1 = f(t, x)
    half = h / 2
    k2 = f(t + half, {i: x[i] + half * k1[i] for i in x})
    k3 = f(t + half, {i: x[i] + half * k2[i] for i in x})
    k4 = f(t + h, {i: x[i] + h * k3[i] for i in x})
    return {i: x[i] + (h / 6) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in x}


STEPPERS = {Method.EULER: euler_step, Method.RK4: rk4_step}
