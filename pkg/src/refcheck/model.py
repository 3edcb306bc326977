"""Block-diagram intermediate representation and its validation.

A model is a set of blocks with a single scalar output port each (Outport
has none) joined by wires. Every value here is immutable; ``validate``
returns a :class:`ValidatedModel` carrying the derived port arities,
driver map and the direct-feedthrough dependency graph.
"""

from __future__ import annotations

import enum
import graphlib
import heapq
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
UNARY_OPS = ("sin", "cos", "neg", "abs")


class Kind(str, enum.Enum):
    INPORT = "Inport"
    OUTPORT = "Outport"
    CONSTANT = "Constant"
    CLOCK = "Clock"
    GAIN = "Gain"
    SUM = "Sum"
    PRODUCT = "Product"
    UNARY_FN = "UnaryFn"
    UNIT_DELAY = "UnitDelay"
    INTEGRATOR = "Integrator"

    @property
    def has_feedthrough(self) -> bool:
        return self not in (Kind.UNIT_DELAY, Kind.INTEGRATOR)

    @property
    def has_state(self) -> bool:
        return not self.has_feedthrough


# Parameter name -> expected python type, per kind.
PARAMS: dict[Kind, dict[str, type]] = {
    Kind.INPORT: {},
    Kind.OUTPORT: {},
    Kind.CONSTANT: {"value": Fraction},
    Kind.CLOCK: {},
    Kind.GAIN: {"k": Fraction},
    Kind.SUM: {"signs": str},
    Kind.PRODUCT: {"arity": int},
    Kind.UNARY_FN: {"op": str},
    Kind.UNIT_DELAY: {"init": Fraction},
    Kind.INTEGRATOR: {"init": Fraction},
}


class ModelClass(str, enum.Enum):
    UNSAMPLED = "Unsampled"
    DISCRETE = "Discrete"
    CONTINUOUS = "Continuous"
    HYBRID = "Hybrid"


@dataclass(frozen=True)
class Block:
    """One block. ``params`` is a sorted tuple of ``(name, value)`` pairs."""

    id: str
    kind: Kind
    params: tuple[tuple[str, Any], ...] = ()

    @classmethod
    def of(cls, id: str, kind: Kind | str, **params: Any) -> Block:
        kind = Kind(kind)
        coerced = {}
        for name, value in params.items():
            if PARAMS[kind].get(name) is Fraction and not isinstance(value, Fraction):
                value = Fraction(value)
            coerced[name] = value
        return cls(id, kind, tuple(sorted(coerced.items())))

    def __getitem__(self, name: str) -> Any:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(f"block {self.id!r} ({self.kind.value}) has no parameter {name!r}")

    @property
    def in_arity(self) -> int:
        if self.kind is Kind.SUM:
            return len(self["signs"])
        if self.kind is Kind.PRODUCT:
            return self["arity"]
        if self.kind in (Kind.INPORT, Kind.CONSTANT, Kind.CLOCK):
            return 0
        return 1

    @property
    def out_arity(self) -> int:
        return 0 if self.kind is Kind.OUTPORT else 1


@dataclass(frozen=True, order=True)
class Wire:
    src: tuple[str, int]
    dst: tuple[str, int]


@dataclass(frozen=True, eq=False)
class Model:
    """A block diagram. Equality ignores block and wire ordering."""

    name: str
    blocks: tuple[Block, ...]
    wires: tuple[Wire, ...]
    sample_time: Fraction = Fraction(1)

    def _key(self):
        return (
            self.name,
            tuple(sorted(self.blocks, key=lambda b: (b.id, b.kind.value, repr(b.params)))),
            tuple(sorted(self.wires)),
            Fraction(self.sample_time),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Model):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())


class UnsupportedModelError(Exception):
    """The requested analysis does not cover this model (e.g. hybrid models)."""


class ValidationError(Exception):
    """Base class for structural problems found by :func:`validate`."""


class DuplicateId(ValidationError):
    pass


class InvalidBlock(ValidationError):
    pass


class DanglingWire(ValidationError):
    pass


class UnconnectedInput(ValidationError):
    pass


class DuplicateDriver(ValidationError):
    pass


class NoOutport(ValidationError):
    pass


class AlgebraicLoop(ValidationError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("algebraic loop through direct-feedthrough blocks: " + " -> ".join(cycle))


@dataclass(frozen=True, eq=False)
class ValidatedModel:
    model: Model
    blocks: Mapping[str, Block]
    # (dst id, dst port) -> (src id, src port)
    drivers: Mapping[tuple[str, int], tuple[str, int]]
    # block id -> ids whose outputs it needs at the same instant
    feedthrough_deps: Mapping[str, tuple[str, ...]]
    order: tuple[str, ...] = field(default=())

    @property
    def name(self) -> str:
        return self.model.name

    @property
    def sample_time(self) -> Fraction:
        return self.model.sample_time

    def inputs_of(self, block_id: str) -> list[str]:
        """Source block ids feeding each input port of ``block_id``, by port."""
        block = self.blocks[block_id]
        return [self.drivers[(block_id, port)][0] for port in range(block.in_arity)]

    def ids_of(self, kind: Kind) -> list[str]:
        return sorted(b.id for b in self.blocks.values() if b.kind is kind)

    @property
    def inports(self) -> list[str]:
        return self.ids_of(Kind.INPORT)

    @property
    def outports(self) -> list[str]:
        return self.ids_of(Kind.OUTPORT)

    def annotations(self):
        return (dict(self.drivers), dict(self.feedthrough_deps), self.order)


def _check_block(block: Block) -> None:
    if not IDENT_RE.match(block.id):
        raise InvalidBlock(f"block id {block.id!r} is not an identifier")
    expected = PARAMS[block.kind]
    given = dict(block.params)
    if set(given) != set(expected):
        raise InvalidBlock(
            f"block {block.id!r} ({block.kind.value}) expects parameters {sorted(expected)}, got {sorted(given)}"
        )
    for name, typ in expected.items():
        if not isinstance(given[name], typ) or isinstance(given[name], bool):
            raise InvalidBlock(f"block {block.id!r}: parameter {name} must be {typ.__name__}")
    if block.kind is Kind.SUM:
        signs = block["signs"]
        if len(signs) < 2 or set(signs) - {"+", "-"}:
            raise InvalidBlock(f"block {block.id!r}: signs must be at least two of '+'/'-', got {signs!r}")
    elif block.kind is Kind.PRODUCT and block["arity"] < 2:
        raise InvalidBlock(f"block {block.id!r}: Product arity must be >= 2")
    elif block.kind is Kind.UNARY_FN and block["op"] not in UNARY_OPS:
        raise InvalidBlock(f"block {block.id!r}: unknown op {block['op']!r}")


def validate(model: Model) -> ValidatedModel:
    """Check wiring and loop freedom; raise a :class:`ValidationError` subclass on failure."""
    if not IDENT_RE.match(model.name):
        raise InvalidBlock(f"model name {model.name!r} is not an identifier")
    if model.sample_time <= 0:
        raise InvalidBlock("sample_time must be positive")
    blocks: dict[str, Block] = {}
    for block in model.blocks:
        if block.id in blocks:
            raise DuplicateId(f"duplicate block id {block.id!r}")
        _check_block(block)
        blocks[block.id] = block

    drivers: dict[tuple[str, int], tuple[str, int]] = {}
    for wire in sorted(model.wires):
        (src, sport), (dst, dport) = wire.src, wire.dst
        if src not in blocks or not 0 <= sport < blocks[src].out_arity:
            raise DanglingWire(f"wire {src}.{sport} -> {dst}.{dport}: no output port {src}.{sport}")
        if dst not in blocks or not 0 <= dport < blocks[dst].in_arity:
            raise DanglingWire(f"wire {src}.{sport} -> {dst}.{dport}: no input port {dst}.{dport}")
        if (dst, dport) in drivers:
            raise DuplicateDriver(f"input port {dst}.{dport} has more than one driver")
        drivers[(dst, dport)] = (src, sport)

    for bid in sorted(blocks):
        for port in range(blocks[bid].in_arity):
            if (bid, port) not in drivers:
                raise UnconnectedInput(f"input port {bid}.{port} is not connected")
    if not any(b.kind is Kind.OUTPORT for b in blocks.values()):
        raise NoOutport(f"model {model.name!r} has no Outport")

    deps: dict[str, tuple[str, ...]] = {}
    for bid in sorted(blocks):
        block = blocks[bid]
        if block.kind.has_feedthrough:
            srcs = {drivers[(bid, p)][0] for p in range(block.in_arity)}
            deps[bid] = tuple(sorted(srcs))
        else:
            deps[bid] = ()

    sorter = graphlib.TopologicalSorter(deps)
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        cycle = list(exc.args[1])
        raise AlgebraicLoop(cycle) from None

    order = []
    ready = list(sorter.get_ready())
    heapq.heapify(ready)
    while ready:
        bid = heapq.heappop(ready)
        order.append(bid)
        sorter.done(bid)
        for nxt in sorter.get_ready():
            heapq.heappush(ready, nxt)

    return ValidatedModel(model, blocks, drivers, deps, tuple(order))


def execution_order(vm: ValidatedModel) -> list[str]:
    """Topological order of the feedthrough graph, smallest id first among ready blocks."""
    return list(vm.order)


def classify_kinds(kinds: Iterable[Kind]) -> ModelClass:
    counts = Counter(kinds)
    delays, integrators = counts[Kind.UNIT_DELAY], counts[Kind.INTEGRATOR]
    if delays and integrators:
        return ModelClass.HYBRID
    if delays:
        return ModelClass.DISCRETE
    if integrators:
        return ModelClass.CONTINUOUS
    return ModelClass.UNSAMPLED


def classify(vm: ValidatedModel | Model) -> ModelClass:
    blocks = vm.blocks.values() if isinstance(vm, ValidatedModel) else vm.blocks
    return classify_kinds(b.kind for b in blocks)
