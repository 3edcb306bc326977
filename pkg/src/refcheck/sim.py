"""Reference simulator: the output/update loop of a fixed-step engine.

Each major step ``k`` at ``t_k = t0 + k*h`` first evaluates every block in
execution order (output phase), records the observed signals, then moves
unit delays and integrators forward (update phase). RK4 re-runs the output
phase at the intermediate stage times with stage-advanced integrator states.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Protocol, Union

from refcheck.model import Kind, ModelClass, UnsupportedModelError, ValidatedModel, classify
from refcheck.solvers import STEPPERS, Method


class SimulationError(Exception):
    pass


class NumericOverflow(SimulationError):
    def __init__(self, time: float, block: str):
        self.time = time
        self.block = block
        super().__init__(f"non-finite value at t={time!r} in block {block!r}")


class ScenarioError(SimulationError, ValueError):
    pass


class SampleTimeMismatch(SimulationError, ValueError):
    pass


class InputGenerator(Protocol):
    def at(self, t: float, k: int) -> float: ...


@dataclass(frozen=True)
class ConstantInput:
    c: float

    def at(self, t: float, k: int) -> float:
        return float(self.c)


@dataclass(frozen=True)
class StepInput:
    t_step: float
    before: float
    after: float

    def at(self, t: float, k: int) -> float:
        return float(self.after if t >= self.t_step else self.before)


@dataclass(frozen=True)
class SineInput:
    amplitude: float
    angular_frequency: float
    phase: float = 0.0

    def at(self, t: float, k: int) -> float:
        return self.amplitude * math.sin(self.angular_frequency * t + self.phase)


@dataclass(frozen=True)
class SeededNoise:
    """Uniform noise in ``[-amplitude, amplitude]``, held constant over each major step."""

    seed: int
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ScenarioError(f"noise seed must be a 64-bit unsigned integer, got {self.seed}")

    def at(self, t: float, k: int) -> float:
        digest = hashlib.blake2b(struct.pack("<QQ", self.seed, k), digest_size=8).digest()
        unit = int.from_bytes(digest, "little") / 2**64
        return self.amplitude * (2 * unit - 1)


Generator = Union[ConstantInput, StepInput, SineInput, SeededNoise]
Scenario = Mapping[str, Generator]

DEFAULT_SEED = 0xC0FFEE


def default_scenario(inports: list[str], seed: int = DEFAULT_SEED) -> dict[str, SeededNoise]:
    """Unit-amplitude noise on every inport; each inport gets its own seed (seed + index)."""
    return {name: SeededNoise(seed + i, 1.0) for i, name in enumerate(sorted(inports))}


def check_scenario(inports: list[str], scenario: Scenario) -> None:
    missing = sorted(set(inports) - set(scenario))
    extra = sorted(set(scenario) - set(inports))
    if missing:
        raise ScenarioError(f"no input generator for inport(s): {', '.join(missing)}")
    if extra:
        raise ScenarioError(f"input generator(s) for unknown inport(s): {', '.join(extra)}")


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.RK4
    h: float = 1e-3
    t_end: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.h > 0:
            raise ValueError("step size h must be positive")
        if not self.t_end > self.t0:
            raise ValueError("t_end must be greater than t0")

    @property
    def steps(self) -> int:
        # Slack absorbs float noise in (T - t0)/h, e.g. 10/0.001.
        return max(1, math.ceil((self.t_end - self.t0) / self.h - 1e-9))

    def time(self, k: int) -> float:
        return self.t0 + k * self.h


@dataclass
class Trace:
    times: list[float]
    values: dict[str, list[float]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def final(self, signal: str) -> float:
        return self.values[signal][-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.values)
        writer.writerow(["t", *names])
        for k, t in enumerate(self.times):
            writer.writerow([format(t, ".17g"), *(format(self.values[n][k], ".17g") for n in names)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> Trace:
        rows = list(csv.reader(io.StringIO(text)))
        names = rows[0][1:]
        trace = cls([float(r[0]) for r in rows[1:]], {n: [] for n in names})
        for r in rows[1:]:
            for n, v in zip(names, r[1:]):
                trace.values[n].append(float(v))
        return trace


@dataclass(frozen=True)
class _Step:
    id: str
    kind: Kind
    inputs: tuple[str, ...]
    param: object


@lru_cache(maxsize=512)
def _plan(vm: ValidatedModel) -> tuple[_Step, ...]:
    steps = []
    for bid in vm.order:
        block = vm.blocks[bid]
        param = None
        if block.kind is Kind.CONSTANT:
            param = float(block["value"])
        elif block.kind is Kind.GAIN:
            param = float(block["k"])
        elif block.kind is Kind.SUM:
            param = block["signs"]
        elif block.kind is Kind.UNARY_FN:
            param = block["op"]
        steps.append(_Step(bid, block.kind, tuple(vm.inputs_of(bid)), param))
    return tuple(steps)


_UNARY = {"sin": math.sin, "cos": math.cos, "neg": lambda x: -x, "abs": abs}


def initial_state(vm: ValidatedModel) -> dict[str, float]:
    return {
        b.id: float(b["init"]) for b in sorted(vm.blocks.values(), key=lambda b: b.id) if b.kind.has_state
    }


def output_phase(vm: ValidatedModel, state: Mapping[str, float], scenario: Scenario, t: float, k: int = 0) -> dict[str, float]:
    """Evaluate every block at time ``t`` (major step ``k``); returns block id -> output value.

    Outports appear under their own id, carrying the value they receive.
    """
    out: dict[str, float] = {}
    for step in _plan(vm):
        kind = step.kind
        if kind is Kind.INPORT:
            v = float(scenario[step.id].at(t, k))
        elif kind is Kind.CONSTANT:
            v = step.param
        elif kind is Kind.CLOCK:
            v = t
        elif kind is Kind.GAIN:
            v = step.param * out[step.inputs[0]]
        elif kind is Kind.SUM:
            signs = step.param
            first = out[step.inputs[0]]
            v = first if signs[0] == "+" else -first
            for sign, src in zip(signs[1:], step.inputs[1:]):
                v = v + out[src] if sign == "+" else v - out[src]
        elif kind is Kind.PRODUCT:
            v = out[step.inputs[0]]
            for src in step.inputs[1:]:
                v = v * out[src]
        elif kind is Kind.UNARY_FN:
            v = _UNARY[step.param](out[step.inputs[0]])
        elif kind is Kind.OUTPORT:
            v = out[step.inputs[0]]
        else:
            v = state[step.id]
        if not math.isfinite(v):
            raise NumericOverflow(t, step.id)
        out[step.id] = v
    return out


def update_phase(
    vm: ValidatedModel,
    state: Mapping[str, float],
    outputs: Mapping[str, float],
    h: float,
    *,
    method: Method = Method.RK4,
    scenario: Scenario | None = None,
    t: float = 0.0,
    k: int = 0,
) -> dict[str, float]:
    """Next state after a major step whose output phase produced ``outputs``."""
    new = dict(state)
    integrators = []
    for bid in state:
        block = vm.blocks[bid]
        src = vm.drivers[(bid, 0)][0]
        if block.kind is Kind.UNIT_DELAY:
            new[bid] = outputs[src]
        else:
            integrators.append((bid, src))
    if not integrators:
        return new

    def deriv(ts: float, x: Mapping[str, float]) -> dict[str, float]:
        out = output_phase(vm, {**state, **x}, scenario or {}, ts, k)
        return {bid: out[src] for bid, src in integrators}

    x = {bid: state[bid] for bid, _ in integrators}
    k1 = {bid: outputs[src] for bid, src in integrators}
    advanced = STEPPERS[Method(method)](deriv, t, x, h, k1)
    for bid, v in advanced.items():
        if not math.isfinite(v):
            raise NumericOverflow(t + h, bid)
    new.update(advanced)
    return new


def simulate(vm: ValidatedModel, scenario: Scenario, cfg: SolverConfig, *, observe_all: bool = False) -> Trace:
    """Run the model over ``[cfg.t0, cfg.t_end]`` and sample the outports at every major step."""
    cls = classify(vm)
    if cls is ModelClass.HYBRID:
        raise UnsupportedModelError("hybrid models (unit delays and integrators together) are not supported")
    if cls is ModelClass.DISCRETE and not math.isclose(cfg.h, float(vm.sample_time), rel_tol=1e-12):
        raise SampleTimeMismatch(f"discrete model needs h == sample_time ({float(vm.sample_time)!r}), got h={cfg.h!r}")
    check_scenario(vm.inports, scenario)

    observed = vm.outports
    if observe_all:
        observed = observed + sorted(b for b in vm.blocks if vm.blocks[b].kind is not Kind.OUTPORT)
    trace = Trace([], {name: [] for name in observed})
    state = initial_state(vm)
    n = cfg.steps
    for k in range(n + 1):
        t = cfg.time(k)
        out = output_phase(vm, state, scenario, t, k)
        trace.times.append(t)
        for name in observed:
            trace.values[name].append(out[name])
        if k < n:
            state = update_phase(vm, state, out, cfg.h, method=cfg.method, scenario=scenario, t=t, k=k)
    return trace


def sup_distance(a: Trace, b: Trace, signals: list[str] | None = None) -> tuple[float, float | None, str | None]:
    """Largest pointwise gap between two traces on a shared grid: ``(gap, time, signal)``."""
    if a.times != b.times:
        raise ValueError("traces are sampled on different time grids")
    worst, when, which = -1.0, None, None
    for name in signals if signals is not None else sorted(a.values):
        for t, va, vb in zip(a.times, a.values[name], b.values[name]):
            gap = abs(va - vb)
            if gap > worst:
                worst, when, which = gap, t, name
    return max(worst, 0.0), when, which


__all__ = [
    "ConstantInput",
    "NumericOverflow",
    "SampleTimeMismatch",
    "ScenarioError",
    "SeededNoise",
    "SimulationError",
    "SineInput",
    "SolverConfig",
    "StepInput",
    "Trace",
    "default_scenario",
    "output_phase",
    "simulate",
    "sup_distance",
    "update_phase",
]
