"""
Command-line surface: toric-spectral {forward, fu, reconstruct, roundtrip, verify}
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from commands.command_manager import CommandManager
from commands.verify_command import CHECKS
from core.errors import EXIT_INVALID_INPUT, ToricSpectralError, exit_code_for
from utils.config import load_config
from utils.logger import setup_logging

logger = logging.getLogger(__name__)


def float_list(text: str) -> List[float]:
    """'1,-1' -> [1.0, -1.0]"""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toric-spectral",
        description="Spectral invariants and Abel-inversion reconstruction of U(n)-invariant toric metrics on CP^n",
    )
    parser.add_argument("--config", type=Path, help="TOML run configuration")
    parser.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="random seed (overrides seed)")
    parser.add_argument("--tol", type=float, help="round-trip tolerance (overrides tolerances.roundtrip)")
    parser.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG")
    parser.add_argument("--log-json", action="store_true", help="JSON-lines log output")

    sub = parser.add_subparsers(dest="command", required=True)

    forward = sub.add_parser("forward", help="spectral invariant for one alpha and one bump")
    forward.add_argument("--alpha", type=float_list, help="comma-separated weight vector, length n")
    forward.add_argument("--center", type=float, help="bump center")
    forward.add_argument("--width", type=float, help="bump half-width")

    sub.add_parser("fu", help="f_u of the configured profile")

    reconstruct = sub.add_parser("reconstruct", help="h'' from an f_u table")
    reconstruct.add_argument("--fu-csv", type=Path, required=True, help="table written by the fu command")
    reconstruct.add_argument("--no-reference", action="store_true",
                             help="do not compare against the configured profile")

    roundtrip = sub.add_parser("roundtrip", help="profile -> f_u -> profile, compared against the input")
    roundtrip.add_argument("--fu-scale", type=float, help="multiply f_u before inversion")

    verify = sub.add_parser("verify", help="numerical self-checks")
    verify.add_argument("--suite", action="append", choices=list(CHECKS), help="suite to run (repeatable)")
    return parser


async def dispatch(config, args):
    manager = CommandManager(config)
    await manager.initialize()
    return await manager.handle_command(args.command, args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID_INPUT if e.code else 0

    setup_logging(level="DEBUG" if args.verbose else None, json_format=True if args.log_json else None)

    try:
        config = load_config(args.config, overrides={
            "seed": args.seed,
            "output_dir": str(args.out) if args.out is not None else None,
            "tolerances.roundtrip": args.tol,
            "log_level": "DEBUG" if args.verbose else None,
            "log_json": True if args.log_json else None,
        })
        setup_logging(level=config.log_level, json_format=config.log_json)
        result = asyncio.run(dispatch(config, args))
    except ToricSpectralError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return exit_code_for(e)
    except Exception as e:
        return exit_code_for(e)

    response = result.get("response")
    if response:
        print(response, file=sys.stdout)
    return int(result.get("exit_code", 0 if result.get("success") else 1))
