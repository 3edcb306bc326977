"""Equivalence checking for refactored block-diagram models.

The typical flow is parse -> validate -> check::

    from refcheck import parse_bdl, validate, check

    a = validate(parse_bdl(open("src.bdl").read()))
    b = validate(parse_bdl(open("dst.bdl").read()))
    verdict = check(a, b)
"""

from refcheck.model import (
    Block,
    Kind,
    Model,
    ModelClass,
    ValidatedModel,
    ValidationError,
    Wire,
    classify,
    execution_order,
    validate,
)
from refcheck.bdl import ParseError, parse_bdl, serialize_bdl
from refcheck.sim import (
    ConstantInput,
    SeededNoise,
    SineInput,
    SolverConfig,
    StepInput,
    Trace,
    simulate,
)
from refcheck.equations import EquationSystem, eval_equations, extract
from refcheck.normal import NormalForm, equal_normal, normalize
from refcheck.check import TubeConfig, check, epsilon_bound

__version__ = "0.1.0"

__all__ = [
    "Block",
    "ConstantInput",
    "EquationSystem",
    "Kind",
    "Model",
    "ModelClass",
    "NormalForm",
    "ParseError",
    "SeededNoise",
    "SineInput",
    "SolverConfig",
    "StepInput",
    "Trace",
    "TubeConfig",
    "ValidatedModel",
    "ValidationError",
    "Wire",
    "check",
    "classify",
    "epsilon_bound",
    "equal_normal",
    "eval_equations",
    "execution_order",
    "extract",
    "normalize",
    "parse_bdl",
    "serialize_bdl",
    "simulate",
    "validate",
]
