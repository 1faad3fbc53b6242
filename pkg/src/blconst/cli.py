"""Command-line front end.

Exit codes: 0 success / Finite, 1 invalid datum, 2 I/O, parse or usage
error, 3 infinite constant, 4 finiteness Unknown.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .barthe import compute_dI, weights_csv
from .datum import FAMILIES, BLDatum, builtin_datum, validate_datum
from .exceptions import DatumFormatError, InvalidDatumError
from .finiteness import FINITE, INFINITE, DivergenceDirection, FinitenessVerdict, decide_finiteness
from .probe import evaluate_at, one_sided_slopes, sample_path, write_samples_csv
from .report import INFINITE as STATUS_INFINITE, UNBOUNDED, SolverConfig
from .solve import METHODS, solve

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_INFINITE, EXIT_UNKNOWN = 0, 1, 2, 3, 4


class _Exit(Exception):
    def __init__(self, code, message=None):
        super().__init__(message)
        self.code = code
        self.message = message


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Exit(EXIT_IO, f"error: cannot read {path}: {exc.strerror or exc}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _Exit(EXIT_IO, f"error: {path}: not valid JSON: {exc}")


def _load(path):
    """Parse and validate; structural errors exit 2, invariant violations exit 1."""
    raw = _read(path)
    try:
        return BLDatum.from_dict(raw)
    except InvalidDatumError as exc:
        raise _Exit(EXIT_INVALID, f"{path}: invalid datum\n{exc.report}")
    except DatumFormatError as exc:
        raise _Exit(EXIT_IO, f"error: {path}: {exc}")


def _config(args):
    try:
        return SolverConfig(starts=args.starts, max_iter=args.max_iter, tol=args.tol, seed=args.seed)
    except ValueError as exc:
        raise _Exit(EXIT_IO, f"error: {exc}")


def _fmt_vec(v):
    return "(" + ", ".join(f"{x:.10g}" for x in np.ravel(v)) + ")"


def _print_certificate(cert, out):
    if isinstance(cert, FinitenessVerdict):
        print(f"certificate: {cert.describe()}", file=out)
        if cert.basis is not None and not isinstance(cert.certificate, str):
            for row in cert.basis:
                print(f"  basis vector {_fmt_vec(row)}", file=out)
    elif isinstance(cert, DivergenceDirection):
        if cert.identically_infinite:
            print("certificate: every d_I vanishes, the objective is identically infinite", file=out)
        else:
            print(f"certificate: divergence ray u = {_fmt_vec(cert.u)}, gap {cert.gap:.6g}", file=out)
    elif cert is not None:
        print(f"certificate: {cert}", file=out)


# -- commands --------------------------------------------------------------

def cmd_validate(args, out=sys.stdout):
    raw = _read(args.file)
    try:
        report = validate_datum(raw)
    except DatumFormatError as exc:
        raise _Exit(EXIT_IO, f"error: {args.file}: {exc}")
    print(report, file=out)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_check(args, out=sys.stdout):
    datum = _load(args.file)
    verdict = decide_finiteness(datum, budget=args.budget, seed=args.seed)
    print(f"verdict: {verdict.status}", file=out)
    diag = verdict.diagnostics
    print(f"candidates tested: {diag.get('tested', 0)}", file=out)
    if "max_defect" in diag:
        print(f"largest proper-subspace defect: {diag['max_defect']:.6g}", file=out)
    if diag.get("truncated"):
        print("note: candidate lattice truncated at the budget", file=out)
    if verdict.status == INFINITE:
        _print_certificate(verdict, out)
        return EXIT_INFINITE
    if verdict.status == FINITE:
        return EXIT_OK
    print("note: no violating subspace found; general-rank search cannot prove finiteness", file=out)
    return EXIT_UNKNOWN


def _print_report(report, out):
    print(f"method: {report.method}", file=out)
    print(f"BL   = {report.value:.12g}", file=out)
    print(f"BL^2 = {report.value_sq:.12g}", file=out)
    print(f"status: {report.status}  converged: {report.converged}  iterations: {report.iterations}  "
          f"grad max-norm: {report.grad_norm:.3e}  starts: {report.starts}  best start: {report.start_index}",
          file=out)


def cmd_compute(args, out=sys.stdout):
    datum = _load(args.file)
    config = _config(args)
    methods = ["lieb", "barthe"] if (args.both or args.method == "both") else [args.method]
    reports = []
    for method in methods:
        report, verdict = solve(datum, method, config, args.budget)
        if report.status == STATUS_INFINITE:
            print("BL = +inf", file=out)
            _print_certificate(report.certificate, out)
            return EXIT_INFINITE
        if report.status == UNBOUNDED:
            print(f"method: {report.method}", file=out)
            print(f"BL = +inf (apparently unbounded: value passed {report.value:.3e})", file=out)
            print(f"finiteness verdict: {verdict.status}", file=out)
            return EXIT_INFINITE
        _print_report(report, out)
        reports.append(report)
    if len(reports) == 2:
        a, b = reports[0].value, reports[1].value
        print(f"discrepancy: |lieb - barthe| = {abs(a - b):.3e}  relative {abs(a - b) / max(a, b):.3e}", file=out)
    return EXIT_OK


def cmd_probe(args, out=sys.stdout):
    a, b = _load(args.file_a), _load(args.file_b)
    if a.signature() != b.signature():
        raise _Exit(EXIT_IO, "error: path endpoints must share n, target dimensions and exponents")
    if args.grid < 2:
        raise _Exit(EXIT_IO, "error: --grid must be >= 2")
    config = _config(args)
    samples = sample_path(a, b, args.grid, args.method, config, args.budget)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                write_samples_csv(samples, fh)
        except OSError as exc:
            raise _Exit(EXIT_IO, f"error: cannot write {args.out}: {exc.strerror or exc}")
        info = out
    else:
        write_samples_csv(samples, out)
        info = sys.stderr  # keep stdout a clean CSV stream
    if args.slopes is not None:
        evaluate = lambda t: evaluate_at(a, b, t, args.method, config, args.budget)
        try:
            s = one_sided_slopes(samples, args.slopes, args.h, evaluate)
        except ValueError as exc:
            raise _Exit(EXIT_INFINITE, f"error: slopes at t0={args.slopes}: {exc}")
        print(f"slopes at t0={args.slopes:g} (h={args.h:g}): left {s.left:.6f}  right {s.right:.6f}  "
              f"jump {s.jump:.6f}", file=info)
    return EXIT_OK


def _parse_param(text):
    if "=" not in text:
        raise _Exit(EXIT_IO, f"error: --param expects key=value, got {text!r}")
    key, val = text.split("=", 1)
    try:
        parsed = json.loads(val)
    except json.JSONDecodeError:
        raise _Exit(EXIT_IO, f"error: --param {key}: cannot parse {val!r}")
    return key.strip(), parsed


def cmd_example(args, out=sys.stdout):
    params = dict(_parse_param(p) for p in args.param)
    try:
        datum = builtin_datum(args.name, **params)
    except (ValueError, TypeError) as exc:
        raise _Exit(EXIT_IO, f"error: {exc}")
    if args.emit:
        text = datum.to_json(indent=2)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text, file=out)
        return EXIT_OK
    print(f"{args.name}: n={datum.n}, m={datum.m}, target dims {datum.dims}, p={_fmt_vec(datum.p)}", file=out)
    for j, L in enumerate(datum.matrices()):
        print(f"  L_{j + 1} = {L.tolist()}", file=out)
    return EXIT_OK


def cmd_dump_weights(args, out=sys.stdout):
    datum = _load(args.file)
    try:
        text = weights_csv(compute_dI(datum))
    except ValueError as exc:
        raise _Exit(EXIT_INFINITE, f"error: {exc}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def _solver_flags(p, method_default="auto", both=False):
    choices = list(METHODS) + (["both"] if both else [])
    p.add_argument("--method", choices=choices, default=method_default)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=64, help="candidate-subspace budget for the finiteness check")


def build_parser():
    parser = argparse.ArgumentParser(prog="blc", description="Brascamp-Lieb constants")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check datum invariants")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="decide finiteness")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compute", help="compute the constant")
    p.add_argument("file")
    _solver_flags(p, both=True)
    p.add_argument("--both", action="store_true", help="run both formulations and report the discrepancy")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("probe", help="sample the constant along a linear path of data")
    p.add_argument("file_a")
    p.add_argument("file_b")
    _solver_flags(p)
    p.add_argument("--grid", type=int, default=11)
    p.add_argument("--out")
    p.add_argument("--slopes", type=float, metavar="T0")
    p.add_argument("--h", type=float, default=1e-3, help="step for --slopes")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("example", help="built-in families: " + ", ".join(FAMILIES))
    p.add_argument("name", choices=FAMILIES)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--emit", action="store_true", help="print the datum as JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("dump-weights", help="CSV of d_I and q_I at identity rotations")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dump_weights)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except _Exit as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
