"""Command-line surface: validate, translate, analyze, simulate, generate,
and equivalence subcommands over the JSON document formats.

Exit codes: 0 success, 1 violation or counterexample (including refused
preconditions, with diagnostics), 2 unsupported question (open problem,
uncomputable exact question, non-deterministic input), 3 I/O or schema
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional

from . import gen, jsonio
from .analysis import (
    AnalysisReport, NotAlmostSureAccepting, OpenProblem, SumUnboundedBelow,
    analyze_deterministic_wa, analyze_nwa, distribution_at,
)
from .core import WeightedAutomaton
from .jsonio import NondeterministicInput, SchemaError, format_rational, format_value
from .markov import LabeledMarkovChain, validate_chain
from .mca import MonitorCounterAutomaton, mca_to_nwa, validate_mca
from .nwa import NestedWeightedAutomaton, nwa_to_mca, validate_nwa
from .sim import check_equivalence_on_prefixes, monte_carlo_estimate

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_UNSUPPORTED = 2
EXIT_SCHEMA = 3


def _read_document(path: str):
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return jsonio.loads(text)


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _error(tag: str, message: str, code: int) -> int:
    _emit({"error": {"tag": tag, "message": message}})
    return code


def _load_input(args, kinds):
    for flag, cls in kinds.items():
        path = getattr(args, flag.replace("-", "_"), None)
        if path:
            obj = _read_document(path)
            if not isinstance(obj, cls):
                raise SchemaError(
                    f"--{flag} expects a {cls.__name__} document")
            return obj
    raise SchemaError("no input document given")


def _report_payload(report: AnalysisReport, lambdas) -> dict:
    payload = {
        "exact": report.exact,
        "method": report.method,
        "params": {k: (format_rational(v) if isinstance(v, Fraction)
                       else v) for k, v in report.params.items()},
    }
    if report.expected is not None:
        payload["expected"] = format_value(report.expected)
    if report.distribution is not None:
        payload["distribution"] = [
            {"value": format_value(v), "mass": format_rational(p)}
            for v, p in report.distribution.points
        ]
        payload["almostSureWitness"] = format_value(report.almost_sure_witness)
        if lambdas:
            payload["cdf"] = [
                {"lambda": format_rational(lam),
                 "value": format_rational(report.cdf(lam))}
                for lam in lambdas
            ]
    return payload


def _cmd_validate(args) -> int:
    try:
        obj = _load_input(args, {"nwa": NestedWeightedAutomaton,
                                 "mca": MonitorCounterAutomaton,
                                 "chain": LabeledMarkovChain})
    except NondeterministicInput as exc:
        _emit({"valid": False, "errors": [f"non-deterministic: {exc}"],
               "warnings": []})
        return EXIT_VIOLATION
    if isinstance(obj, NestedWeightedAutomaton):
        report = validate_nwa(obj)
    elif isinstance(obj, MonitorCounterAutomaton):
        report = validate_mca(obj)
    else:
        report = validate_chain(obj)
    _emit({"valid": report.ok, "errors": list(report.errors),
           "warnings": list(getattr(report, "warnings", ()))})
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _cmd_translate(args) -> int:
    if args.direction == "nwa-to-mca":
        nwa = _load_input(args, {"nwa": NestedWeightedAutomaton})
        mca = nwa_to_mca(nwa, args.width)
        _emit(jsonio.dump_document(mca))
    else:
        mca = _load_input(args, {"mca": MonitorCounterAutomaton})
        _emit(jsonio.dump_document(mca_to_nwa(mca)))
    return EXIT_OK


def _cmd_analyze(args) -> int:
    chain = _read_document(args.chain)
    if not isinstance(chain, LabeledMarkovChain):
        raise SchemaError("--chain expects a chain document")
    chain_report = validate_chain(chain)
    if not chain_report.ok:
        _emit({"error": {"tag": "InvalidChain",
                         "message": "; ".join(chain_report.errors)}})
        return EXIT_VIOLATION
    obj = _load_input(args, {"nwa": NestedWeightedAutomaton,
                             "mca": MonitorCounterAutomaton,
                             "wa": WeightedAutomaton})
    if isinstance(obj, MonitorCounterAutomaton):
        obj = mca_to_nwa(obj)
    lambdas = [jsonio.parse_rational(x) for x in (args.threshold or [])]
    epsilon = jsonio.parse_rational(args.epsilon) if args.epsilon else None

    if args.question == "almost-sure":
        if not lambdas:
            raise SchemaError("--question almost-sure needs --lambda")
        if isinstance(obj, WeightedAutomaton):
            report = analyze_deterministic_wa(obj, chain)
        else:
            report = analyze_nwa(obj, chain, approx=args.approx,
                                 epsilon=epsilon)
        payload = _report_payload(report, lambdas)
        payload["almostSure"] = {
            format_rational(lam): report.almost_sure(lam) for lam in lambdas}
        _emit(payload)
        return EXIT_OK

    if isinstance(obj, WeightedAutomaton):
        report = analyze_deterministic_wa(obj, chain)
        _emit(_report_payload(report, lambdas))
        return EXIT_OK

    if args.question == "distribution" and not args.approx and lambdas:
        fn = obj.master_fn.kind
        if fn == "sup" and obj.slave_fn_kind() == "sum+":
            payload = {"exact": True, "method": "sup-sumplus-clip",
                       "cdf": [{"lambda": format_rational(lam),
                                "value": format_rational(
                                    distribution_at(obj, chain, lam))}
                               for lam in lambdas]}
            _emit(payload)
            return EXIT_OK
    report = analyze_nwa(obj, chain, approx=args.approx, epsilon=epsilon)
    _emit(_report_payload(report, lambdas))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    chain = _read_document(args.chain)
    if not isinstance(chain, LabeledMarkovChain):
        raise SchemaError("--chain expects a chain document")
    obj = _load_input(args, {"nwa": NestedWeightedAutomaton,
                             "mca": MonitorCounterAutomaton,
                             "wa": WeightedAutomaton})
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("QUANTA_SEED", "0"))
    est = monte_carlo_estimate(obj, chain, horizon=args.horizon,
                               samples=args.samples, seed=seed,
                               burn_in=args.burn_in)
    _emit({
        "mean": f"{est.mean:.6f}",
        "variance": f"{est.variance:.6f}",
        "stderr": f"{est.stderr():.6f}",
        "rejectionRate": f"{est.rejection_rate:.6f}",
        "samplesUsed": est.samples_used,
        "horizon": args.horizon,
        "seed": seed,
    })
    return EXIT_OK


def _parse_dimacs(path: str):
    n_vars = None
    clauses: List[List[int]] = []
    if path == "-":
        lines = sys.stdin.read().splitlines()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise SchemaError(f"bad DIMACS header {line!r}")
            n_vars = int(parts[2])
            continue
        lits = [int(x) for x in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if lits:
            clauses.append(lits)
    if n_vars is None:
        raise SchemaError("DIMACS input lacks a 'p cnf' header")
    return clauses, n_vars


def _cmd_generate(args) -> int:
    if args.what == "blocks-diff":
        _emit(jsonio.dump_document(gen.build_blocks_diff()))
    elif args.what == "art":
        _emit(jsonio.dump_document(gen.build_art(args.k)))
    elif args.what == "uniform":
        letters = args.alphabet.split(",")
        _emit(jsonio.dump_document(gen.uniform_chain(letters)))
    elif args.what == "cnf":
        clauses, n_vars = _parse_dimacs(args.file)
        _emit(jsonio.dump_document(gen.cnf_to_nwa(clauses, n_vars)))
    else:  # intersection
        dfas = []
        for path in args.files:
            obj = _read_document(path)
            if not isinstance(obj, WeightedAutomaton):
                raise SchemaError("intersection inputs must be automata")
            dfas.append(obj)
        _emit(jsonio.dump_document(gen.intersection_to_nwa(dfas)))
    return EXIT_OK


def _cmd_equivalence(args) -> int:
    a = _read_document(args.a)
    b = _read_document(args.b)
    result = check_equivalence_on_prefixes(a, b, max_len=args.max_len)
    if result.equivalent:
        _emit({"equivalent": True, "maxLen": args.max_len})
        return EXIT_OK
    _emit({"equivalent": False,
           "counterexample": list(result.counterexample),
           "reason": result.reason})
    return EXIT_VIOLATION


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quanta",
        description="nested weighted automata over labeled Markov chains")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_inputs(p, *names):
        for name in names:
            p.add_argument(f"--{name}", metavar="FILE")

    p = sub.add_parser("validate", help="structural validation")
    add_inputs(p, "nwa", "mca", "chain")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("translate", help="translate between formalisms")
    p.add_argument("direction", choices=["nwa-to-mca", "mca-to-nwa"])
    add_inputs(p, "nwa", "mca")
    p.add_argument("--width", type=int, default=8)
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("analyze", help="probabilistic questions")
    add_inputs(p, "nwa", "mca", "wa", "chain")
    p.add_argument("--question", required=True,
                   choices=["expected", "distribution", "almost-sure"])
    p.add_argument("--lambda", dest="threshold", action="append",
                   metavar="P/Q")
    p.add_argument("--approx", action="store_true")
    p.add_argument("--epsilon", metavar="P/Q")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="seeded Monte Carlo estimate")
    add_inputs(p, "nwa", "mca", "wa", "chain")
    p.add_argument("--horizon", type=int, default=10_000)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("generate", help="example instances")
    p.add_argument("what", choices=["blocks-diff", "art", "cnf", "uniform",
                                    "intersection"])
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--file", metavar="FILE")
    p.add_argument("--alphabet", default="a,b")
    p.add_argument("--files", nargs="+", metavar="FILE")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("equivalence", help="exhaustive prefix-trace check")
    p.add_argument("--a", required=True, metavar="FILE")
    p.add_argument("--b", required=True, metavar="FILE")
    p.add_argument("--max-len", type=int, default=8)
    p.set_defaults(func=_cmd_equivalence)
    return parser


def run_command(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except OpenProblem as exc:
        return _error("OpenProblem", f"open problem: {exc}", EXIT_UNSUPPORTED)
    except SumUnboundedBelow as exc:
        return _error("SumUnboundedBelow",
                      f"exact question undecidable, use --approx: {exc}",
                      EXIT_UNSUPPORTED)
    except NondeterministicInput as exc:
        return _error("NondeterministicInput",
                      f"probabilistic analysis of non-deterministic automata "
                      f"is undecidable: {exc}", EXIT_UNSUPPORTED)
    except NotAlmostSureAccepting as exc:
        return _error("NotAlmostSureAccepting",
                      f"rejection has positive probability; diagnostics: "
                      f"{exc}", EXIT_VIOLATION)
    except SchemaError as exc:
        return _error("SchemaError", str(exc), EXIT_SCHEMA)
    except OSError as exc:
        return _error("IOError", str(exc), EXIT_SCHEMA)
    except ValueError as exc:
        return _error("InvalidInput", str(exc), EXIT_SCHEMA)


def main() -> None:
    sys.exit(run_command())
