"""
Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from .classical import direct_solve
from .config import Settings, load_settings
from .covers import adversarial_two_cover
from .diagnostics import (
    positive_definite_check,
    sdd_witness,
    walk_summability,
)
from .errors import ParameterError, RwgabpError, SingularMatrixError
from .experiments import TARGETS, c_grid, reproduce, sweep_c
from .gallery import chord_model
from .gershgorin import find_uniform_r
from .message_engine import Schedule, run
from .model import FORMATS, QuadraticModel, load_model, load_vector, make_parameters
from .reporting import ReportRenderer, sweep_csv_text, write_sweep_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2

SCHEDULES = {"sync": "synchronous", "async": "asynchronous", "damped": "damped"}


class _Parser(argparse.ArgumentParser):
    """Usage errors raise instead of exiting with status 2."""

    def error(self, message: str):
        raise ParameterError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='YAML settings file overriding the defaults')
    parser.add_argument(
        '--verbose', '-v',
        action='store_true',
        help='Enable verbose logging'
    )


def _add_model_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--matrix', help='Coefficient matrix file')
    source.add_argument(
        '--p', type=float,
        help='Use the four-node single-chord model with coupling p'
    )
    parser.add_argument('--h', dest='h_path', help='Linear term file (default: all ones)')
    parser.add_argument(
        '--format',
        choices=FORMATS,
        help='Matrix format (default: inferred, .mtx is matrix-market)'
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog='rwgabp',
        description='Reweighted Gaussian belief propagation and its diagnostics'
    )
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    solve = sub.add_parser('solve', help='Run message passing on a model')
    _add_common(solve)
    _add_model_source(solve)
    solve.add_argument('--c', type=float, default=1.0,
                       help='Uniform reweighting parameter (default: 1)')
    solve.add_argument('--schedule', choices=sorted(SCHEDULES), default='sync',
                       help='Update schedule (default: sync)')
    solve.add_argument('--delta', type=float, help='Damping factor in (0, 1)')
    solve.add_argument('--tol', type=float, help='Convergence tolerance')
    solve.add_argument('--max-iter', type=int, help='Iteration cap')

    diagnose = sub.add_parser('diagnose', help='Report convergence certificates')
    _add_common(diagnose)
    _add_model_source(diagnose)
    diagnose.add_argument('--r-max', type=float, help='Largest r tried by the search')

    sweep = sub.add_parser('sweep-c', help='Iterations to converge across a c grid')
    _add_common(sweep)
    _add_model_source(sweep)
    sweep.add_argument('--c-min', type=float)
    sweep.add_argument('--c-max', type=float)
    sweep.add_argument('--c-step', type=float)
    sweep.add_argument('--tol', type=float)
    sweep.add_argument('--max-iter', type=int)
    sweep.add_argument('--out', help='CSV output path (default: stdout)')

    repro = sub.add_parser('reproduce', help='Regenerate an experiment')
    _add_common(repro)
    repro.add_argument('target', help=f"One of {', '.join(TARGETS)}")
    repro.add_argument('--output-dir', default='./rwgabp_output',
                       help='Directory for artifacts (default: ./rwgabp_output)')
    repro.add_argument('--tol', type=float)
    repro.add_argument('--max-iter', type=int)
    return parser


def _settings(args: argparse.Namespace) -> Settings:
    settings = load_settings(args.config)
    return settings.override(
        tol=getattr(args, 'tol', None),
        max_iter=getattr(args, 'max_iter', None),
        delta=getattr(args, 'delta', None),
        r_max=getattr(args, 'r_max', None),
        c_min=getattr(args, 'c_min', None),
        c_max=getattr(args, 'c_max', None),
        c_step=getattr(args, 'c_step', None),
    )


def _model(args: argparse.Namespace) -> QuadraticModel:
    if args.p is not None:
        h = None if args.h_path is None else load_vector(args.h_path)
        return chord_model(args.p, h)
    return load_model(args.matrix, args.format, args.h_path)


def cmd_solve(args: argparse.Namespace, settings: Settings) -> int:
    model = _model(args)
    kind = SCHEDULES[args.schedule]
    if kind == 'damped':
        schedule = Schedule.damped(settings.delta)
    elif kind == 'asynchronous':
        schedule = Schedule.asynchronous()
    else:
        schedule = Schedule.synchronous()
    params = make_parameters(model, args.c)
    report = run(model, params, schedule, settings.tol, settings.max_iter)

    error = None
    objective = None
    finite = bool(np.all(np.isfinite(report.final_means)))
    if finite:
        objective = model.objective(report.final_means)
    if model.n <= settings.error_norm_max_n and finite:
        try:
            error = float(np.linalg.norm(report.final_means - direct_solve(model)))
        except SingularMatrixError as e:
            logger.warning(f"No direct solution to compare against: {e}")
    print(
        ReportRenderer().render(
            'solve_report.txt.j2',
            schedule=schedule,
            c=args.c,
            report=report,
            objective=objective,
            error=error,
        ),
        end='',
    )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_diagnose(args: argparse.Namespace, settings: Settings) -> int:
    model = _model(args)
    pd, lambda_min = positive_definite_check(model)
    walk = walk_summability(
        model,
        settings.walk_summable_tol,
        settings.power_tol,
        settings.power_max_iter,
    )
    witness = sdd_witness(model, settings.power_tol, settings.power_max_iter)
    _, adversarial_lambda_min = positive_definite_check(
        adversarial_two_cover(model).model
    )
    print(
        ReportRenderer().render(
            'diagnose_report.txt.j2',
            n=model.n,
            pd=pd,
            lambda_min=lambda_min,
            walk=walk,
            witness=witness,
            adversarial_lambda_min=adversarial_lambda_min,
            uniform_r=find_uniform_r(model, settings.r_max),
            r_max=settings.r_max,
        ),
        end='',
    )
    return EXIT_OK


def cmd_sweep_c(args: argparse.Namespace, settings: Settings) -> int:
    model = _model(args)
    grid = c_grid(settings.c_min, settings.c_max, settings.c_step)
    records = sweep_c(model, grid, settings.tol, settings.max_iter)
    if args.out:
        write_sweep_csv(records, args.out)
    else:
        print(sweep_csv_text(records), end='')
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace, settings: Settings) -> int:
    if args.target not in TARGETS:
        logger.error(f"Unknown target '{args.target}'; use one of {TARGETS}")
        return EXIT_INPUT
    summary, text = reproduce(args.target, Path(args.output_dir), settings)
    if text:
        print(text, end='')
    else:
        print(f"{args.target}: wrote {', '.join(summary['artifacts'])} to {args.output_dir}")
    return EXIT_OK


COMMANDS = {
    'solve': cmd_solve,
    'diagnose': cmd_diagnose,
    'sweep-c': cmd_sweep_c,
    'reproduce': cmd_reproduce,
}


def run_command(args: argparse.Namespace) -> int:
    try:
        settings = _settings(args)
        return COMMANDS[args.command](args, settings)
    except (RwgabpError, FileNotFoundError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_INPUT


def main(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and dispatch; logging is configured by the caller."""
    try:
        args = build_parser().parse_args(argv)
    except ParameterError as e:
        print(f"rwgabp: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return run_command(args)
