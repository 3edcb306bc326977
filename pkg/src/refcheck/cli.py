"""``refcheck`` command line.

Exit codes: 0 equivalent (exact or approximate), 1 not equivalent,
2 unknown or unsupported, 3 parse/validation/usage/IO error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from refcheck import __version__
from refcheck.bdl import ParseError, parse_bdl
from refcheck.check import (
    ApproxEquivalent,
    InterfaceMismatch,
    NotEquivalent,
    SymbolicCounterexample,
    TubeConfig,
    check,
    default_seed,
)
from refcheck.equations import extract
from refcheck.model import ModelClass, UnsupportedModelError, ValidatedModel, ValidationError, classify, validate
from refcheck.report import CheckReport
from refcheck.sim import (
    ConstantInput,
    SeededNoise,
    SimulationError,
    SineInput,
    SolverConfig,
    StepInput,
    default_scenario,
    simulate,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_DIFFERENT, EXIT_UNDECIDED, EXIT_ERROR = 0, 1, 2, 3

EXIT_CODES = {
    "ExactEquivalent": EXIT_OK,
    "ApproxEquivalent": EXIT_OK,
    "NotEquivalent": EXIT_DIFFERENT,
    "Unknown": EXIT_UNDECIDED,
    "Unsupported": EXIT_UNDECIDED,
}

DEFAULTS = {"method": "rk4", "t0": 0.0, "t_end": 10.0, "continuous_h": 1e-3}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def parse_input_spec(spec: str):
    """``NAME=const:C | step:T,B,A | sine:A,W,P | noise:SEED,A`` -> (name, generator)."""
    name, sep, rest = spec.partition("=")
    kind, sep2, args = rest.partition(":")
    if not sep or not sep2 or not name:
        raise UsageError(f"bad --input {spec!r}; expected NAME=KIND:ARGS")
    try:
        vals = [a.strip() for a in args.split(",")]
        if kind == "const" and len(vals) == 1:
            return name, ConstantInput(float(vals[0]))
        if kind == "step" and len(vals) == 3:
            return name, StepInput(*map(float, vals))
        if kind == "sine" and len(vals) == 3:
            return name, SineInput(*map(float, vals))
        if kind == "noise" and len(vals) == 2:
            return name, SeededNoise(int(vals[0], 0), float(vals[1]))
    except ValueError as exc:
        raise UsageError(f"bad --input {spec!r}: {exc}") from None
    raise UsageError(f"bad --input {spec!r}; kinds are const:C, step:T,B,A, sine:A,W,P, noise:SEED,A")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in data.items()}


def _setting(args, config: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is None:
        value = config.get(name)
    return default if value is None else value


def _read_model(path: str) -> ValidatedModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return validate(parse_bdl(text))
    except (ParseError, ValidationError) as exc:
        exc.path = path
        raise


def _scenario(vm: ValidatedModel, specs: list[str]) -> dict:
    scenario = default_scenario(vm.inports)
    for spec in specs:
        name, gen = parse_input_spec(spec)
        if name not in scenario:
            raise UsageError(f"--input names {name!r}, which is not an inport of {vm.name!r}")
        scenario[name] = gen
    return scenario


def _input_specs(args, config: dict) -> list[str]:
    from_config = [f"{k}={v}" for k, v in sorted(config.get("inputs", {}).items())]
    return from_config + list(args.input or [])


def _solver(args, config: dict, vm: ValidatedModel | None = None) -> SolverConfig:
    h = _setting(args, config, "h")
    if h is None:
        discrete_like = vm is not None and classify(vm) is not ModelClass.CONTINUOUS
        h = float(vm.sample_time) if discrete_like else DEFAULTS["continuous_h"]
    try:
        return SolverConfig(
            _setting(args, config, "method", DEFAULTS["method"]),
            float(h),
            float(_setting(args, config, "t_end", DEFAULTS["t_end"])),
            float(_setting(args, config, "t0", DEFAULTS["t0"])),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _seq(values) -> str:
    return str(values[0]) if len(values) == 1 else "[" + ", ".join(map(str, values)) + "]"


def _format_verdict(verdict) -> list[str]:
    lines = [f"verdict: {verdict.kind}"]
    if isinstance(verdict, ApproxEquivalent):
        lines.append(f"eps_measured: {verdict.eps_measured!r}")
        if verdict.eps_bound is not None:
            lines.append(f"eps_bound: {verdict.eps_bound!r}")
    elif isinstance(verdict, NotEquivalent):
        cex = verdict.counterexample
        if isinstance(cex, SymbolicCounterexample):
            inputs = ", ".join(f"{k}={_seq(v)}" for k, v in sorted(cex.inputs.items()))
            lines.append(
                f"counterexample: {cex.signal} at step {cex.step} (t={cex.time}) with {inputs or 'no inputs'}: "
                f"{cex.value_a} vs {cex.value_b}"
            )
        else:
            lines.append(
                f"counterexample: {cex.signal} at t={cex.time!r} (scenario {cex.scenario}): {cex.value_a!r} vs {cex.value_b!r}"
            )
    elif hasattr(verdict, "reason"):
        lines.append(f"reason: {verdict.reason}")
    return lines


def cmd_check(args) -> int:
    config = _load_config(args.config)
    started = time.perf_counter()
    vm_a, vm_b = _read_model(args.model_a), _read_model(args.model_b)
    ca, cb = classify(vm_a), classify(vm_b)
    tube = None
    epsilon = _setting(args, config, "epsilon")
    if ModelClass.CONTINUOUS in (ca, cb) and ModelClass.HYBRID not in (ca, cb) and ModelClass.DISCRETE not in (ca, cb):
        if epsilon is None:
            raise UsageError("continuous models need --epsilon (the tube width)")
        vm_cont = vm_a if ca is ModelClass.CONTINUOUS else vm_b
        try:
            tube = TubeConfig(
                float(epsilon),
                _solver(args, config, vm_cont),
                (_scenario(vm_a, _input_specs(args, config)),),
                _setting(args, config, "lipschitz"),
                _setting(args, config, "deriv_bound"),
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    verdict = check(vm_a, vm_b, tube)
    elapsed = (time.perf_counter() - started) * 1000

    show_eqs = bool(_setting(args, config, "equations", False))
    equations = None
    if show_eqs:
        equations = {}
        for side, vm in (("a", vm_a), ("b", vm_b)):
            try:
                equations[side] = extract(vm).to_text(normalized=True).splitlines()
            except UnsupportedModelError as exc:
                equations[side] = [f"# {exc}"]
    report = CheckReport.build(__version__, (vm_a.name, vm_b.name), (ca.value, cb.value), verdict, elapsed, equations)

    out = [f"A: {vm_a.name} ({ca.value})", f"B: {vm_b.name} ({cb.value})", *_format_verdict(verdict)]
    if equations:
        for side in ("a", "b"):
            out.append(f"equations {side.upper()}:")
            out.extend(f"  {line}" for line in equations[side])
    print("\n".join(out))
    json_path = _setting(args, config, "json")
    if json_path:
        Path(json_path).write_text(report.to_json(), encoding="utf-8")
    return EXIT_CODES[verdict.kind]


def cmd_simulate(args) -> int:
    vm = _read_model(args.model)
    cfg = _solver(args, {}, vm)
    scenario = _scenario(vm, args.input or [])
    try:
        trace = simulate(vm, scenario, cfg, observe_all=args.all_signals)
    except UnsupportedModelError as exc:
        print(f"{args.model}: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    text = trace.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_extract(args) -> int:
    vm = _read_model(args.model)
    try:
        eqs = extract(vm)
    except UnsupportedModelError as exc:
        print(f"{args.model}: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    print(eqs.to_text(normalized=args.normalized))
    return EXIT_OK


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["euler", "rk4"], help="integration method (default rk4)")
    p.add_argument("--h", type=float, help="step size (default: sample_time, or 1e-3 for continuous models)")
    p.add_argument("--t0", type=float, help="start time (default 0)")
    p.add_argument("--t-end", dest="t_end", type=float, help="end time (default 10)")
    p.add_argument(
        "--input",
        action="append",
        metavar="NAME=GEN",
        help="input generator: const:C, step:T,B,A, sine:A,W,P or noise:SEED,A (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="refcheck", description="Check refactored block-diagram models for equivalence.")
    parser.add_argument("--version", action="version", version=f"refcheck {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="decide equivalence of two models")
    p.add_argument("model_a", metavar="A.bdl")
    p.add_argument("model_b", metavar="B.bdl")
    p.add_argument("--epsilon", type=float, help="tube width for continuous models")
    _add_solver_flags(p)
    p.add_argument("--lipschitz", type=float, help="Lipschitz constant L for the a-priori bound")
    p.add_argument("--deriv-bound", dest="deriv_bound", type=float, help="derivative bound M for the a-priori bound")
    p.add_argument("--json", metavar="PATH", help="write a JSON report")
    p.add_argument("--equations", action="store_true", default=None, help="include normalized equations")
    p.add_argument("--config", metavar="PATH", help="TOML file with defaults for the flags above")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="simulate one model and print its trace as CSV")
    p.add_argument("model", metavar="M.bdl")
    _add_solver_flags(p)
    p.add_argument("--out", metavar="PATH", help="write the CSV here instead of stdout")
    p.add_argument("--all-signals", action="store_true", help="record every block output, not just outports")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", help="print a model's equations")
    p.add_argument("model", metavar="M.bdl")
    p.add_argument("--normalized", action="store_true", help="print canonical normal forms")
    p.set_defaults(func=cmd_extract)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        default_seed()
    except ValueError:
        print(f"refcheck: error: REFCHECK_SEED must be an integer, got {os.environ['REFCHECK_SEED']!r}", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"{exc.path}:{exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValidationError as exc:
        print(f"{exc.path}: invalid model: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (InterfaceMismatch, SimulationError, UsageError, OSError) as exc:
        print(f"refcheck: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
