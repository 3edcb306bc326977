"""JSON report written by ``refcheck check --json``."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any

from refcheck.bdl import format_number
from refcheck.check import SymbolicCounterexample, TraceCounterexample, Verdict

REPORT_VERSION = 1

_NUM_OR_NULL = {"type": ["number", "null"]}

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "refcheck check report",
    "type": "object",
    "required": [
        "report_version",
        "tool_version",
        "models",
        "classes",
        "verdict",
        "eps_measured",
        "eps_bound",
        "counterexample",
        "timing_ms",
    ],
    "additionalProperties": False,
    "properties": {
        "report_version": {"const": REPORT_VERSION},
        "tool_version": {"type": "string"},
        "models": {
            "type": "object",
            "required": ["a", "b"],
            "properties": {"a": {"type": "string"}, "b": {"type": "string"}},
            "additionalProperties": False,
        },
        "classes": {
            "type": "object",
            "required": ["a", "b"],
            "properties": {
                "a": {"enum": ["Unsampled", "Discrete", "Continuous", "Hybrid"]},
                "b": {"enum": ["Unsampled", "Discrete", "Continuous", "Hybrid"]},
            },
            "additionalProperties": False,
        },
        "verdict": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["ExactEquivalent", "ApproxEquivalent", "NotEquivalent", "Unknown", "Unsupported"]},
                "reason": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "eps_measured": _NUM_OR_NULL,
        "eps_bound": _NUM_OR_NULL,
        "counterexample": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["type", "signal", "inputs", "step", "time", "value_a", "value_b"],
                    "properties": {
                        "type": {"const": "symbolic"},
                        "signal": {"type": "string"},
                        "inputs": {
                            "type": "object",
                            "additionalProperties": {"type": "array", "items": {"type": "string"}},
                        },
                        "step": {"type": "integer", "minimum": 0},
                        "time": {"type": "string"},
                        "value_a": {"type": "string"},
                        "value_b": {"type": "string"},
                    },
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "required": ["type", "signal", "time", "value_a", "value_b", "scenario"],
                    "properties": {
                        "type": {"const": "trace"},
                        "signal": {"type": "string"},
                        "time": {"type": "number"},
                        "value_a": {"type": "number"},
                        "value_b": {"type": "number"},
                        "scenario": {"type": "integer", "minimum": 0},
                    },
                    "additionalProperties": False,
                },
            ]
        },
        "equations": {
            "type": "object",
            "required": ["a", "b"],
            "properties": {
                "a": {"type": "array", "items": {"type": "string"}},
                "b": {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
        "timing_ms": {"type": "number", "minimum": 0},
    },
}


def counterexample_to_dict(cex) -> dict | None:
    if cex is None:
        return None
    if isinstance(cex, SymbolicCounterexample):
        return {
            "type": "symbolic",
            "signal": cex.signal,
            "inputs": {k: [format_number(v) for v in seq] for k, seq in sorted(cex.inputs.items())},
            "step": cex.step,
            "time": format_number(cex.time),
            "value_a": cex.value_a,
            "value_b": cex.value_b,
        }
    return {"type": "trace", **asdict(cex)}


def counterexample_from_dict(data: dict | None):
    if data is None:
        return None
    data = dict(data)
    kind = data.pop("type")
    if kind == "symbolic":
        data["inputs"] = {k: tuple(Fraction(v) for v in seq) for k, seq in data["inputs"].items()}
        data["time"] = Fraction(data["time"])
        return SymbolicCounterexample(**data)
    return TraceCounterexample(**data)


@dataclass
class CheckReport:
    tool_version: str
    models: dict[str, str]
    classes: dict[str, str]
    verdict: dict[str, str]
    eps_measured: float | None = None
    eps_bound: float | None = None
    counterexample: dict | None = None
    equations: dict[str, list[str]] | None = None
    timing_ms: float = 0.0
    report_version: int = REPORT_VERSION

    @classmethod
    def build(cls, tool_version, names, classes, verdict: Verdict, timing_ms, equations=None) -> CheckReport:
        tag = {"kind": verdict.kind}
        if hasattr(verdict, "reason"):
            tag["reason"] = verdict.reason
        return cls(
            tool_version=tool_version,
            models={"a": names[0], "b": names[1]},
            classes={"a": classes[0], "b": classes[1]},
            verdict=tag,
            eps_measured=getattr(verdict, "eps_measured", None),
            eps_bound=getattr(verdict, "eps_bound", None),
            counterexample=counterexample_to_dict(getattr(verdict, "counterexample", None)),
            equations=equations,
            timing_ms=timing_ms,
        )

    def to_dict(self) -> dict:
        data = asdict(self)
        if data["equations"] is None:
            del data["equations"]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> CheckReport:
        return cls(**json.loads(text))
