"""Command-line entry point.

Verbs: run, compare, bode, grid, fit-damper.  Exit codes: 0 success,
2 configuration error, 3 numeric failure, 4 I/O error.
"""

import argparse
import json
import os
import sys

import numpy as np

from .characteristics import damper_force, fit_damper_curve, load_table, save_table
from .config import load_config
from .errors import (
    ComparisonError,
    ConfigError,
    CurveError,
    DivergenceError,
    EquilibriumError,
    FitError,
    OptimizationError,
)
from .runner import compare_runs, run_bode, run_grid, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_CONFIG_ERRORS = (ConfigError, CurveError, ComparisonError, EquilibriumError)
_NUMERIC_ERRORS = (DivergenceError, FitError, OptimizationError)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="suspopt",
        description="Suspension characteristic-curve scaling optimizer.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_config_verb(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="run configuration file (YAML)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument(
            "--seed", type=int, help="road seed override (seeded road kinds only)"
        )
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        return p

    add_config_verb("run", "optimize one scenario and write its result tree")
    add_config_verb("bode", "estimate the configured vehicle's frequency response")
    add_config_verb("grid", "sweep the objective over the design box")

    p = sub.add_parser("compare", help="compare two completed run directories")
    p.add_argument("run_a", help="first run directory")
    p.add_argument("run_b", help="second run directory")
    p.add_argument("--quiet", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("fit-damper", help="fit the exponential damper law to a table")
    p.add_argument("samples", help="two-column velocity/force table")
    p.add_argument("--out", help="directory for the fitted curve files")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def _fit_damper(args):
    velocity, force = load_table(args.samples)
    fit = fit_damper_curve(velocity, force)
    curve = fit.curve
    peak = float(np.max(np.abs(force)))
    summary = {
        "A": curve.A,
        "k": curve.k,
        "B": curve.B,
        "q": curve.q,
        "residual_rms": fit.residual_rms,
        "residual_rms_of_peak_force": fit.residual_rms / peak if peak else None,
        "iterations": fit.iterations,
        "samples": int(np.size(velocity)),
    }
    if not args.quiet:
        print(
            f"F(v) = {curve.A!r}*exp(-{curve.k!r}*v) + {curve.B!r}*exp({curve.q!r}*v)\n"
            f"residual RMS {fit.residual_rms:.6g} N "
            f"({100.0 * summary['residual_rms_of_peak_force']:.3f}% of peak force), "
            f"{fit.iterations} iterations"
        )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "damper_fit.json"), "w", encoding="ascii") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        grid = np.linspace(float(np.min(velocity)), float(np.max(velocity)), 201)
        save_table(
            os.path.join(args.out, "damper_fit.txt"),
            grid,
            damper_force(curve, grid),
            header="fitted damper: velocity [m/s], force [N]",
        )
        if not args.quiet:
            print(f"wrote {args.out}")
    return EXIT_OK


def _dispatch(args):
    if args.verb == "compare":
        report = compare_runs(args.run_a, args.run_b)
        print(report, end="")
        return EXIT_OK
    if args.verb == "fit-damper":
        return _fit_damper(args)
    config = load_config(args.config, seed=args.seed)
    if args.verb == "run":
        run_scenario(config, out_dir=args.out, quiet=args.quiet)
    elif args.verb == "bode":
        run_bode(config, out_dir=args.out, quiet=args.quiet)
    else:
        run_grid(config, out_dir=args.out, quiet=args.quiet)
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
