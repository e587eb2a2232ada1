"""Command-line front end: run models, check the bundled suite, evaluate traces.

Subcommands: ``run``, ``check``, ``list``, ``kv-trace``, ``model``.  JSON
output follows a fixed field order and renders floats with 12 significant
digits so byte-stable output can be diffed.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import models as model_registry
from .engine import KVAmplitudeSpec, kv_trace_at_zero, potential_numeric
from .errors import ParseError, ValidationError, ZetatraceError
from .laurent import DEFAULT_ORDER
from .modelfile import parse_model_file
from .models import REGISTRY, RegistryEntry, run_model
from .params import ParamPoly
from .tables import BranchPolicy
from .terms import Divergent


def _parse_params(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, _, value = item.partition("=")
        if not name or not value:
            raise SystemExit(2)
        out[name.strip()] = float(value)
    return out


def _json_record(result, numeric_value=None, include_trace=False) -> dict:
    record = {
        "model": result.model,
        "observable": result.observable,
        "value": result.value.render(mul=" * ")
        if isinstance(result.value, ParamPoly)
        else f"divergent: {result.value.reason}",
    }
    if numeric_value is not None:
        record["numeric_value"] = _fmt_number(numeric_value)
    record["branch"] = result.branch
    record["series_order"] = result.series_order
    if include_trace:
        record["trace"] = list(result.trace)
    return record


def _fmt_number(x: complex) -> str:
    if abs(x.imag) <= 1e-12 * max(1.0, abs(x.real)):
        return f"{x.real:.12g}"
    return f"{x.real:.12g}{x.imag:+.12g}i"


def _emit_run(run, args, bindings) -> int:
    code = 0
    if run.potential is not None:
        return _emit_potential(run, args, bindings)
    records = []
    for name, result in run.results.items():
        numeric = None
        if (args.numeric or bindings) and isinstance(result.value, ParamPoly):
            numeric = result.value.eval({**run.model.default_bindings(), **bindings})
        records.append((result, numeric))
        if isinstance(result.value, Divergent):
            code = 1
    if args.emit == "json":
        for result, numeric in records:
            print(json.dumps(_json_record(result, numeric, args.trace)))
    else:
        for result, numeric in records:
            if isinstance(result.value, Divergent):
                print(f"<{result.observable}> diverges: {result.value.reason}")
            else:
                print(f"⟨{result.observable}⟩ = {result.value.render_text()}")
            if numeric is not None:
                print(f"  numeric: {_fmt_number(numeric)}")
            if args.trace:
                for step in result.trace:
                    print(f"  | {step}")
    return code


def _emit_potential(run, args, bindings) -> int:
    pot = run.potential
    rows = [("critical_point", p) for p in pot.critical_points]
    rows += [("minimum", p) for p in pot.minima]
    rows += [("mass", p) for p in pot.masses]
    full_bindings = {**run.model.default_bindings(), **bindings}
    if args.emit == "json":
        for label, poly in rows:
            record = {
                "model": run.model.name,
                "observable": label,
                "value": poly.render(),
            }
            if args.numeric or bindings:
                record["numeric_value"] = _fmt_number(poly.eval(full_bindings))
            record["branch"] = args.branch
            record["series_order"] = args.series_order
            if args.trace:
                record["trace"] = list(pot.trace)
            print(json.dumps(record))
    else:
        print(f"V({run.model.field_param}) = {pot.potential.render_text()}  (volume limit)")
        for label, poly in rows:
            line = f"{label}: {poly.render_text()}"
            if args.numeric or bindings:
                line += f"  = {_fmt_number(poly.eval(full_bindings))}"
            print(line)
        if args.numeric:
            minima, masses = potential_numeric(run.model, full_bindings)
            print(
                "numeric fallback: minima "
                + ", ".join(f"{v:.6g}" for v in minima)
                + "; masses "
                + ", ".join(f"{v:.6g}" for v in masses)
            )
        if args.trace:
            for step in pot.trace:
                print(f"  | {step}")
    return 0


def cmd_run(args, extra_registry=None) -> int:
    bindings = _parse_params(args.param)
    policy = BranchPolicy(args.branch)
    overrides = {}
    if args.dim is not None:
        overrides["n"] = args.dim
    try:
        run = run_model(
            args.model, policy, args.series_order, registry=extra_registry, **overrides
        )
    except ZetatraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return _emit_run(run, args, bindings)


def cmd_check(args) -> int:
    policy = BranchPolicy(args.branch)
    names = list(REGISTRY)

    def one(name):
        return name, run_model(name, policy)

    with ThreadPoolExecutor(max_workers=4) as pool:
        outcomes = list(pool.map(one, names))
    failed = 0
    for name, run in outcomes:
        status = "pass" if run.passed else "FAIL"
        if not run.passed:
            failed += 1
        summary = REGISTRY[name].expected_summary
        print(f"{status:4}  {name:28} {summary}")
        for f in run.failures:
            print(f"      {f}")
    print(f"{len(names) - failed}/{len(names)} models passing ({policy.mode} branch)")
    return 1 if failed else 0


def cmd_list(args, extra_registry=None) -> int:
    for name, desc, summary in model_registry.list_models(extra_registry):
        print(f"{name:28} {desc} [{summary}]")
    return 0


def cmd_kv_trace(args) -> int:
    try:
        spec = _parse_kv_file(args.file)
        value = kv_trace_at_zero(spec)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ZetatraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"trace(0) = {value.render_text()}")
    try:
        print(f"numeric: {_fmt_number(value.eval({}))}")
    except ZetatraceError:
        pass
    return 0


def _parse_kv_file(path) -> KVAmplitudeSpec:
    dimension = None
    vol = ParamPoly.one()
    terms = []
    section = None
    current: dict[str, str] = {}

    def flush(lineno):
        if section == "term":
            if "degree" not in current:
                raise ParseError("term without degree", lineno)
            terms.append(
                (
                    Fraction(current["degree"]),
                    int(current.get("log_order", "0")),
                    ParamPoly.number(float(current.get("angular", "1"))),
                )
            )

    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            flush(lineno)
            current = {}
            section = line.strip("[]").strip().lower()
            if section not in ("kv", "term"):
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if section == "kv":
            if key == "dimension":
                dimension = int(value)
            elif key == "volume":
                vol = ParamPoly.number(float(value))
            else:
                raise ParseError(f"unknown key {key!r} in [kv]", lineno)
        elif section == "term":
            if key not in ("degree", "log_order", "angular"):
                raise ParseError(f"unknown key {key!r} in [term]", lineno)
            current[key] = value
        else:
            raise ParseError("content before any section header", lineno)
    flush(lineno)
    if dimension is None:
        raise ParseError("missing dimension in [kv] section", 1)
    return KVAmplitudeSpec(dimension=dimension, terms=tuple(terms), vol_x=vol)


def cmd_model(args) -> int:
    try:
        spec = parse_model_file(args.file)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return 2
    entry = RegistryEntry(lambda **kw: spec, spec.description, "custom")
    registry = {spec.name: entry}
    if args.list:
        return cmd_list(args, registry)
    args.model = spec.name
    return cmd_run(args, registry)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zetatrace",
        description="regularized oscillatory trace integrals and expectation values",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--param", action="append", metavar="k=v",
                       help="bind a parameter for numeric output")
        p.add_argument("--branch", choices=("paper", "principal"), default="paper")
        p.add_argument("--series-order", type=int, default=DEFAULT_ORDER)
        p.add_argument("--emit", choices=("text", "json"), default="text")
        p.add_argument("--trace", action="store_true",
                       help="print the derivation steps (gauge, reduce, limits)")
        p.add_argument("--numeric", action="store_true",
                       help="evaluate results at bound/default parameters")
        p.add_argument("--dim", type=int, default=None,
                       help="spatial dimension override for N-generic models")

    run_p = sub.add_parser("run", help="evaluate one registered model")
    run_p.add_argument("model")
    add_run_flags(run_p)
    run_p.set_defaults(fn=cmd_run)

    check_p = sub.add_parser("check", help="run every bundled model against its expected value")
    check_p.add_argument("--branch", choices=("paper", "principal"), default="paper")
    check_p.set_defaults(fn=cmd_check)

    list_p = sub.add_parser("list", help="list registered models")
    list_p.set_defaults(fn=cmd_list)

    kv_p = sub.add_parser("kv-trace", help="evaluate a trace-at-zero amplitude file")
    kv_p.add_argument("file")
    kv_p.set_defaults(fn=cmd_kv_trace)

    model_p = sub.add_parser("model", help="run a custom model-definition file")
    model_p.add_argument("file")
    model_p.add_argument("--list", action="store_true", help="list instead of running")
    add_run_flags(model_p)
    model_p.set_defaults(fn=cmd_model)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ZetatraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
