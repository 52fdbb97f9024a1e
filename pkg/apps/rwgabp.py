#!/usr/bin/env python3
"""
Reweighted Gaussian belief propagation

Solves quadratic minimization problems (equivalently Γx = h) by reweighted
min-sum message passing and reports the certificates that predict when it
converges.

Subcommands:
  solve      run synchronous, asynchronous or damped message passing
  diagnose   positive definiteness, walk-summability, scaled diagonal
             dominance, adversarial 2-cover and the uniform-r certificate
  sweep-c    iterations to converge across a grid of reweighting values
  reproduce  regenerate fig-chord, fig-c, fig-rnd or quadcover artifacts

Exit status is 0 on success, 2 when message passing does not converge and 1
for usage or input errors.
"""

import sys
from pathlib import Path
import logging

# Add project root to path so we can import the 'src' package
sys.path.insert(0, str(Path(__file__).parent.parent))
from src.commands import EXIT_INPUT, build_parser, run_command  # noqa: E402
from src.errors import ParameterError  # noqa: E402


def setup_logging(verbose: bool = False) -> logging.Logger:
    """Set up logging configuration."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    return logging.getLogger(__name__)


def main():
    """Main entry point for the rwgabp command line."""
    parser = build_parser()
    try:
        args = parser.parse_args()
    except ParameterError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        sys.exit(EXIT_INPUT)

    logger = setup_logging(args.verbose)
    logger.debug(f"Running {args.command}")
    sys.exit(run_command(args))


if __name__ == "__main__":
    main()
