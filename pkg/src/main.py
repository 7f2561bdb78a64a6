import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.api import commands
from src.api.schemas import RunConfig
from src.errors import ConfigError, ProbeError
from src.logging.logger import logger
from src.orchestration.campaigns import LEMMAS

APP_NAME = "pprobe"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML or JSON run configuration")
    common.add_argument("--seed", type=int, help="global seed for randomized censuses")
    common.add_argument("--grid-n", type=int, help="grid points per axis")
    common.add_argument("--box-l", type=float, help="periodic box length")
    common.add_argument("--order", type=int, help="Gauss-Legendre order per panel")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), help="format of per-check records")
    common.add_argument("--field", help="field name: random, constant, shear, taylor_green, abc, curl_potential")
    common.add_argument("--count", type=int, help="number of random fields in a census")

    parser = argparse.ArgumentParser(prog=APP_NAME, description="Numerical verification of inertial-force bounds.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="write a divergence-free field to a DFF1 grid file")
    verify = sub.add_parser("verify", parents=[common], help="run a bound-check census")
    verify.add_argument("lemma", choices=LEMMAS)
    pressure = sub.add_parser("pressure", parents=[common], help="recover grad P by one or more routes")
    pressure.add_argument("--method", action="append", choices=("coulomb", "spectral", "block_sum"))
    simulate = sub.add_parser("simulate", parents=[common], help="integrate Euler or Navier-Stokes and monitor")
    simulate.add_argument("--t-final", type=float)
    simulate.add_argument("--viscosity", type=int, choices=(0, 1))
    report = sub.add_parser("report", parents=[common], help="aggregate outputs into plot data")
    report.add_argument("inputs", nargs="*", type=Path)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    flags = {
        "command": args.command,
        "seed": args.seed,
        "grid.n": args.grid_n,
        "grid.box": args.box_l,
        "quadrature.order": args.order,
        "output.out": str(args.out) if args.out else None,
        "output.format": args.format,
        "field.name": args.field,
        "field.count": args.count,
        "pressure.methods": getattr(args, "method", None),
        "simulation.t_final": getattr(args, "t_final", None),
        "simulation.viscosity": getattr(args, "viscosity", None),
    }
    inputs = getattr(args, "inputs", None)
    if inputs:
        flags["output.inputs"] = [str(p) for p in inputs]
    return flags


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.load(args.config, _overrides(args))
        logger.info("command started", command=args.command, config_hash=config.config_hash())
        if args.command == "gen":
            return commands.cmd_gen(config)
        if args.command == "verify":
            return commands.cmd_verify(args.lemma, config)
        if args.command == "pressure":
            return commands.cmd_pressure(config)
        if args.command == "simulate":
            return commands.cmd_simulate(config)
        return commands.cmd_report(config)
    except ConfigError as e:
        logger.error("configuration error", error=str(e))
        print(f"{APP_NAME}: error: {e}", file=sys.stderr)
        return commands.EXIT_USAGE
    except ProbeError as e:
        logger.error("command failed", command=args.command, error_type=type(e).__name__, error=str(e))
        print(f"{APP_NAME}: {type(e).__name__}: {e}", file=sys.stderr)
        return commands.EXIT_ERROR
    except OSError as e:
        logger.error("i/o failure", command=args.command, error=str(e))
        print(f"{APP_NAME}: I/O error: {e}", file=sys.stderr)
        return commands.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
