"""``fracctl`` command-line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from .commands import (
    EXIT_INPUT,
    EXIT_NUMERIC,
    InputError,
    NumericalFailure,
    cmd_bode,
    cmd_identify,
    cmd_reduce,
    cmd_simulate,
    cmd_tune,
)
from .config import ConfigError, ProjectConfig, load_config

__all__ = ["main", "build_parser", "ProjectConfig"]


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="JSON configuration file (unknown keys are rejected)")
    p.add_argument("--seed", type=int, default=d(None), help="random seed; overrides the configuration")
    p.add_argument("--out-dir", default=d("."), help="directory for output files (created if missing)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracctl", description="Fractional-order modelling and FOPID tuning pipeline.")
    parser.add_argument("--version", action="version", version=f"fracctl {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    p = sub.add_parser("identify", parents=[common], help="fit ARX/ARMAX/OE/BJ models and rank them by AIC")
    p.add_argument("data", nargs="?", help="CSV file with header t,u,y")
    p.add_argument("--synthetic", metavar="FIXTURE", help="generate step-back data from a bundled plant instead")
    p.add_argument("--noise-free", action="store_true", help="omit measurement noise from synthetic data")
    p.add_argument("--method", choices=("zoh", "tustin"), default="zoh", help="discretization of synthetic data")
    p.add_argument("--structure", action="append", type=str.upper, choices=("ARX", "ARMAX", "OE", "BJ"), help="repeatable; default all four")
    for name in ("na", "nb", "nc", "nd", "nf", "nk"):
        p.add_argument(f"--{name}", type=int)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("reduce", parents=[common], help="fit FOPTD/SOPTD/NIOPTD templates by H2 distance")
    p.add_argument("model", nargs="*", help="system, identified-model or model.json files")
    p.add_argument("--fixture", action="append", help="bundled plant name or 'all' (repeatable)")
    p.add_argument("--template", action="append", help="foptd, soptd, nioptd1, nioptd2 or all (repeatable)")
    p.add_argument("--starts", type=int, help="number of optimizer starts per template")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("tune", parents=[common], help="solve FOPID or PID gains from frequency-domain targets")
    p.add_argument("plant", nargs="?", help="system or reduced.json file; default is the bundled design plant")
    p.add_argument("--fixture", help="bundled plant name (its NIOPTD-II model is used)")
    p.add_argument("--spec", help="tuning targets JSON: omega_gc, phi_m_deg, A_db, omega_t, B_db, omega_s")
    p.add_argument("--backout", choices=("fopid", "pid"), help="use the targets achieved by a bundled controller")
    p.add_argument("--controller", choices=("fopid", "pid"), default="fopid")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop step-back transients under gain scaling")
    p.add_argument("plant", nargs="*", help="system or reduced.json files")
    p.add_argument("--fixture", action="append", help="bundled plant name or 'all'; default all when no files given")
    p.add_argument("--controller", action="append", help="controller.json or bundled 'fopid'/'pid' (repeatable)")
    p.add_argument("--scenario", choices=("stepback",), default="stepback")
    p.add_argument("--drop", type=float, default=0.3, help="rod drop fraction scaling the unit response")
    p.add_argument("--gains", default="0.2,1,3.5", help="comma-separated controller gain scales")
    p.add_argument("--trace-dt", type=float, default=0.1, help="sample spacing written to transients.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bode", parents=[common], help="magnitude/phase or S/T curves over a log grid")
    p.add_argument("system", nargs="*", help="system or reduced.json files")
    p.add_argument("--fixture", action="append", help="bundled plant name or 'all' (repeatable)")
    p.add_argument("--controller", help="controller.json or bundled 'fopid'/'pid'; plots the loop")
    p.add_argument("--mode", choices=("open", "st"), default="open", help="'st' overlays |S| and |T|")
    p.add_argument("--flatness", action="store_true", help="annotate phase flatness at the crossover")
    p.set_defaults(func=cmd_bode)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, args.seed)
    except ConfigError as exc:
        print(f"fracctl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with np.errstate(all="ignore"):
            return args.func(args, cfg, out_dir)
    except InputError as exc:
        print(f"fracctl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"fracctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fracctl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
