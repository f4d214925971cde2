#!/usr/bin/env python3
"""
Main entry point for cdqsim.
Runs an experiment subcommand, e.g. ``python main.py evolve --config configs/single_spin.toml``.
"""

import logging

from cdqsim.cli import main as cli_main
from utils.init_db import validate_store_connection

# Configure logging
logger = logging.getLogger(__name__)


def main(argv=None):
    """Main application entry point."""
    logger.info("Starting cdqsim...")

    from cdqsim.run_store import RunStore

    if not validate_store_connection(RunStore()):
        logger.warning("Run store unavailable; continuing without run records.")
        argv = list(argv) if argv is not None else None
        if argv is None:
            import sys

            argv = sys.argv[1:]
        if "--no-store" not in argv:
            argv.append("--no-store")

    return cli_main(argv) == 0


if __name__ == "__main__":
    success = main()
    exit(0 if success else 1)
