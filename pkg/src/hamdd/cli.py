"""Command line: ``hamdd {landscape,scaling,evolve,bench,export-dot} ...``.

Exit codes: 0 on success, 2 for configuration errors, 3 when a numerical
post-condition fails (for instance an expectation value with an imaginary
part).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from hamdd.experiments import COMMANDS, ConfigError, ExperimentConfig, parse_angle
from hamdd.models import FAMILIES
from hamdd.numerics import NumericContractError, NumericDomainError
from hamdd.oracle import OracleCapError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=FAMILIES, default="ising")
    common.add_argument("--sites", "-L", type=int, help="chain length L (scaling: largest L)")
    common.add_argument("--coupling", "-J", type=float, help="coupling J")
    common.add_argument("--field", type=float, help="field g (Ising) or h (Heisenberg)")
    common.add_argument("--dt", type=float, default=0.1)
    common.add_argument("--steps", type=int, help="Trotter steps (landscape: largest n)")
    common.add_argument("--seed", type=int, default=0, help="spin-glass bond seed")
    common.add_argument("--tolerance", type=float, default=ExperimentConfig.tolerance)
    common.add_argument("--gc-threshold", type=int, default=ExperimentConfig.gc_threshold)
    common.add_argument("--threads", type=int, help="worker processes for sweeps (default: all cores)")
    common.add_argument("--out", "-o", help="output file (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hamdd", description="Decision-diagram Hamiltonian simulation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("landscape", parents=[common], help="node count over a rotation-angle grid")
    p.add_argument("--grid", type=int, default=101, help="points per axis")
    p.add_argument("--angle-range", nargs=2, type=_angle, default=(-math.pi, math.pi), metavar=("LO", "HI"))

    sub.add_parser("scaling", parents=[common], help="node count per step for L = 2..L")

    obs = argparse.ArgumentParser(add_help=False)
    obs.add_argument("--observable", action="append", default=[], help="sz(i) or sxsx(i,j); repeatable")
    obs.add_argument("--mode", choices=("stepwise", "single-step"), default="stepwise")

    p = sub.add_parser("evolve", parents=[common, obs], help="time evolution of observables")
    p.add_argument("--dense-check", action="store_true", help="compare with the dense oracle")

    p = sub.add_parser("bench", parents=[common, obs], help="wall time of DD against the dense oracle")
    p.add_argument("--reps", type=int, default=10)

    p = sub.add_parser("export-dot", parents=[common], help="DOT drawing of a state or gate")
    p.add_argument("object", nargs="+", help="ghz N | w N | basis BITS | GATE [ANGLE] [TARGETS...]")
    return parser


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        command=ns.command,
        model=ns.model,
        sites=ns.sites,
        coupling=ns.coupling,
        field=ns.field,
        dt=ns.dt,
        steps=ns.steps,
        grid=getattr(ns, "grid", 101),
        angle_range=tuple(getattr(ns, "angle_range", (-math.pi, math.pi))),
        observables=tuple(getattr(ns, "observable", ())),
        seed=ns.seed,
        mode=getattr(ns, "mode", "stepwise"),
        dense_check=getattr(ns, "dense_check", False),
        tolerance=ns.tolerance,
        gc_threshold=ns.gc_threshold,
        reps=getattr(ns, "reps", 10),
        threads=ns.threads,
        obj=tuple(getattr(ns, "object", ())),
        out=ns.out,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
        result = COMMANDS[cfg.command](cfg)
    except (ConfigError, OracleCapError, NumericDomainError) as exc:
        print(f"hamdd: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericContractError as exc:
        print(f"hamdd: numeric check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if isinstance(result, str):
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(result)
        else:
            sys.stdout.write(result)
    else:
        result.write(cfg.out, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
