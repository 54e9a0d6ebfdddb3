"""Main CLI entry point for diffan commands."""
import argparse
import logging
import os
import sys
from typing import List, Optional

import torch

from .. import __version__
from ..utils.logging_setup import setup_logging
from ..utils.paths import load_environment
from . import bench, demo2var, discover, generate, metrics
from .display_utils import console

logger = logging.getLogger(__name__)

COMMANDS = {
    "generate": generate,
    "discover": discover,
    "demo2var": demo2var,
    "bench": bench,
    "metrics": metrics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffan",
        description="Causal discovery by topological ordering with diffusion-trained score networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    parser.add_argument("--threads", type=int, help="Cap on torch threads (default: DIFFAN_THREADS)")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    for module in COMMANDS.values():
        module.add_subparser(subparsers)
    return parser


def set_threads(threads: Optional[int]) -> None:
    threads = threads or os.getenv('DIFFAN_THREADS')
    if threads:
        torch.set_num_threads(max(1, int(threads)))
        logger.debug("torch threads capped at %s", threads)


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    load_environment()
    setup_logging('DEBUG' if args.verbose else None)
    if args.command is None:
        parser.print_help()
        return 0

    try:
        set_threads(args.threads)
    except ValueError:
        console.print("[red]Error: thread count must be an integer[/red]")
        return 2
    return COMMANDS[args.command].handle_command(args)


if __name__ == "__main__":
    sys.exit(main())
