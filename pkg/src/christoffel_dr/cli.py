"""Command line interface: ``christoffel-dr {synth,eval,quad,uncond,check}``.

Exit codes: 0 success, 2 parse/validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
import warnings

import numpy as np

from . import io as dio
from .dist_reg import TwoStepModel
from .errors import ChristoffelError, DatasetError
from .poly_basis import BasisFamily
from .synth import GENERATOR, SynthConfig, generate_bags

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
MAX_DEGREE = 64
ADVISED_DEGREE = 15
FIG_X = (-0.5, 0.0, 0.5)


def _degree(text):
    d = int(text)
    if not 1 <= d <= MAX_DEGREE:
        raise argparse.ArgumentTypeError(f"degree must be in [1, {MAX_DEGREE}]")
    return d


def _ridge(text):
    r = float(text)
    if not r >= 0:
        raise argparse.ArgumentTypeError("ridge must be nonnegative")
    return r


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="christoffel-dr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="dataset file")
    common.add_argument("--format", choices=dio.FORMATS, help="dataset format (default: from extension)")
    common.add_argument("--dx", type=_degree, default=10)
    common.add_argument("--dy", type=_degree, default=10)
    common.add_argument("--basis", choices=[f.value for f in BasisFamily], default="chebyshev")
    common.add_argument("--ridge", type=_ridge, default=None, help="opt-in relative diagonal shift")
    common.add_argument("--output", default="-", help="output file (default stdout)")

    table = argparse.ArgumentParser(add_help=False)
    table.add_argument("--output-format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--M", type=int, default=10_000)
    p.add_argument("--N", type=int, default=1_000)
    p.add_argument("--R", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=dio.FORMATS, help="dataset format (default: from extension)")
    p.add_argument("--output", default="-")

    for name, text in (("eval", "lambda(y|x) on a y grid"), ("quad", "conditional outcomes and probabilities")):
        p = sub.add_parser(name, parents=[common, table], help=text)
        p.add_argument("--x", type=float, action="append", help=f"query x, repeatable (default {FIG_X})")
        if name == "eval":
            p.add_argument("--grid", type=int, default=201, help="grid size over the y range")

    p = sub.add_parser("uncond", parents=[common, table], help="lambda(y) on a y grid")
    p.add_argument("--grid", type=int, default=201)

    p = sub.add_parser("check", parents=[common], help="diagnostics and invariant checks")
    p.add_argument("--x", type=float, action="append", help=f"probe x, repeatable (default {FIG_X})")
    return parser


@contextlib.contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _run(args) -> int:
    if args.command == "synth":
        cfg = SynthConfig(args.M, args.N, args.R, args.seed)
        header = f"synth M={cfg.M} N={cfg.N} R={cfg.R!r} seed={cfg.seed}\ngenerator: {GENERATOR}"
        fmt = args.format or ("csv" if args.output.lower().endswith(".csv") else "jsonl")
        with _open_out(args.output) as fh:
            dio.write_bags(generate_bags(cfg), fh, fmt, header=header)
        return EXIT_OK

    for d in (args.dx, args.dy):
        if d > ADVISED_DEGREE:
            warnings.warn(f"basis size {d} is above the advised range (<= {ADVISED_DEGREE})")
    ds = dio.load_dataset(args.input, args.format, args.dx, args.dy, args.basis)

    if args.command == "check":
        report = dio.run_check(ds, args.x or FIG_X, args.ridge)
        with _open_out(args.output) as fh:
            fh.write(str(report) + "\n")
        return EXIT_OK

    model = TwoStepModel(ds, args.ridge)
    with _open_out(args.output) as fh:
        if args.command == "uncond":
            dio.write_table(dio.run_uncond_grid(model, dio.y_grid(ds, args.grid)), dio.UNCOND_HEADER, fh, args.output_format)
        elif args.command == "eval":
            grid = dio.y_grid(ds, args.grid)
            rows = np.vstack([dio.run_eval_grid(model, x, grid) for x in args.x or FIG_X])
            dio.write_table(rows, dio.EVAL_HEADER, fh, args.output_format)
        else:
            rows = np.vstack([dio.run_quad(model, x) for x in args.x or FIG_X])
            dio.write_table(rows, dio.QUAD_HEADER, fh, args.output_format)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return _run(args)
    except (DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ChristoffelError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
