import argparse
import logging
import sys
from typing import List, Optional

from src.commands import COMMAND_MODULES
from src.commands.common import EXIT_FAILED, EXIT_OK, EXIT_USAGE
from src.configs.log_config import configure_logging, start_run
from src.services.l2r import NonFiniteLossError

# Initialize logging
logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l2r-denoise",
        description="Self-supervised denoising losses, training harness and statistical validators.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one CLI command and map its outcome to an exit code.

    0: success or passed validation, 1: failed validation or runtime failure,
    2: usage or configuration error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return EXIT_OK if exit_.code in (0, None) else EXIT_USAGE

    configure_logging()
    run_id = start_run()
    logger.info(f"Starting '{args.command}' (run {run_id})")
    try:
        return args.handler(args)
    except NonFiniteLossError as e:
        logger.error(f"Training aborted: {e}")
        return EXIT_FAILED
    except ValueError as e:
        logger.error(f"Invalid input for '{args.command}': {e}")
        return EXIT_USAGE
    except RuntimeError as e:
        logger.error(f"'{args.command}' failed: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
