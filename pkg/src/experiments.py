"""
Parameter sweeps, error curves and the reproduction targets behind the CLI.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .classical import direct_solve
from .config import Settings
from .covers import adversarial_two_cover, cover_from_matrix, validate_cover
from .diagnostics import adversarial_witness, positive_definite_check, walk_summability
from .errors import ParameterError
from .gallery import chord_model, random_pd_model, triangle_cover_matrix, triangle_model
from .message_engine import ReweightedSystem, Schedule, beliefs, iterate_states
from .model import QuadraticModel, make_parameters, save_model
from .reporting import ReportRenderer, write_curves_csv, write_summary, write_sweep_csv

logger = logging.getLogger(__name__)

TARGETS = ("fig-chord", "fig-c", "fig-rnd", "quadcover")
RANDOM_SWEEP_RANGE = (-5.0, 5.0)


@dataclass(frozen=True)
class SweepRecord:
    """Iterations to converge at one c; None marks non-convergence."""

    c: float
    sync_iters: Optional[int]
    async_iters: Optional[int]


@dataclass
class ErrorCurve:
    name: str
    errors: List[float] = field(default_factory=list)
    reached: bool = False

    @property
    def iterations(self) -> int:
        return len(self.errors)


def c_grid(c_min: float, c_max: float, c_step: float) -> List[float]:
    """Points c_min + k·c_step up to c_max, rounded to 10 digits, without 0."""
    if not c_step > 0.0:
        raise ParameterError(f"c-step must be positive, got {c_step}")
    if c_min > c_max:
        raise ParameterError(f"c-min {c_min} exceeds c-max {c_max}")
    count = int(math.floor((c_max - c_min) / c_step + 1e-9)) + 1
    grid = [round(c_min + k * c_step, 10) for k in range(count)]
    grid = [c for c in grid if c != 0.0]
    if not grid:
        raise ParameterError("The c grid contains no nonzero values")
    return grid


def sweep_c(
    model: QuadraticModel,
    grid: Sequence[float],
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> List[SweepRecord]:
    """
    Iterations the synchronous and asynchronous schedules need at every c in
    ``grid`` to bring the 2-norm error of the mean estimates against the
    direct solution below ``tol``.
    """
    if any(c == 0.0 for c in grid):
        raise ParameterError("The c grid must exclude 0")
    truth = direct_solve(model)
    records = []
    for c in grid:
        counts = []
        for schedule in (Schedule.synchronous(), Schedule.asynchronous()):
            curve = error_curve(schedule.kind, model, c, schedule, truth, tol, max_iter)
            counts.append(curve.iterations if curve.reached else None)
            if not curve.reached:
                logger.warning(f"c={c:g}: {schedule.kind} schedule did not converge")
        records.append(SweepRecord(c, counts[0], counts[1]))
    return records


def error_curve(
    name: str,
    model: QuadraticModel,
    c: float,
    schedule: Schedule,
    truth: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> ErrorCurve:
    """2-norm error of the mean estimates per iteration until below ``tol``."""
    system = ReweightedSystem.build(model, make_parameters(model, c))
    curve = ErrorCurve(name)
    for state in iterate_states(system, schedule):
        if not state.valid:
            break
        mean = beliefs(state, system).mean
        error = float(np.linalg.norm(mean - truth))
        curve.errors.append(error if math.isfinite(error) else math.inf)
        if error < tol:
            curve.reached = True
            break
        if state.t >= max_iter:
            break
    logger.debug(
        f"{name}: {curve.iterations} iterations, reached={curve.reached}"
    )
    return curve


def chord_curves(p: float, tol: float, max_iter: int) -> List[ErrorCurve]:
    """Min-sum, synchronous c=2 and asynchronous c=2 on the single-chord model."""
    model = chord_model(p)
    truth = direct_solve(model)
    return [
        error_curve("minsum", model, 1.0, Schedule.synchronous(), truth, tol, max_iter),
        error_curve("sync_c2", model, 2.0, Schedule.synchronous(), truth, tol, max_iter),
        error_curve("async_c2", model, 2.0, Schedule.asynchronous(), truth, tol, max_iter),
    ]


def quadcover_facts(power_tol: float = 1e-12) -> Dict[str, Any]:
    """Eigenvalue facts about the triangle model and its 2-covers."""
    base = triangle_model()
    printed = cover_from_matrix(base, triangle_cover_matrix(), 2)
    printed_valid, violations = validate_cover(printed)
    witness = adversarial_witness(base, power_tol=power_tol)
    ws = walk_summability(base, power_tol=power_tol)
    return {
        "base": base,
        "printed_cover": printed,
        "printed_cover_valid": printed_valid,
        "printed_cover_violations": violations,
        "base_lambda_min": positive_definite_check(base)[1],
        "printed_lambda_min": positive_definite_check(printed.model)[1],
        "adversarial_cover": adversarial_two_cover(base),
        "adversarial_lambda_min": positive_definite_check(witness.cover.model)[1],
        "rho": ws.rho,
        "witness_form": witness.quadratic_form,
    }


def _fmt(value: float) -> str:
    return f"{value:g}"


def reproduce(
    target: str,
    out_dir: Path,
    settings: Settings,
    renderer: Optional[ReportRenderer] = None,
) -> Tuple[Dict[str, Any], Optional[str]]:
    """
    Write the artifacts of ``target`` into ``out_dir`` with a summary.yaml.

    Returns:
        The summary dictionary and, for quadcover, the rendered report
    """
    if target not in TARGETS:
        raise ParameterError(f"Unknown target '{target}'; use one of {TARGETS}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renderer = renderer or ReportRenderer()
    summary: Dict[str, Any] = {"target": target, "artifacts": []}
    text = None

    if target == "fig-chord":
        summary["curves"] = {}
        for p in settings.chord_p:
            curves = chord_curves(p, settings.tol, settings.max_iter)
            path = out_dir / f"fig_chord_p{_fmt(p)}.csv"
            write_curves_csv(curves, path)
            summary["artifacts"].append(path.name)
            summary["curves"][_fmt(p)] = {
                curve.name: {"iterations": curve.iterations, "reached": curve.reached}
                for curve in curves
            }
    elif target in ("fig-c", "fig-rnd"):
        if target == "fig-c":
            model = chord_model(0.4)
            c_min, c_max = settings.c_min, settings.c_max
        else:
            model = random_pd_model()
            c_min, c_max = RANDOM_SWEEP_RANGE
        grid = c_grid(c_min, c_max, settings.c_step)
        records = sweep_c(model, grid, settings.tol, settings.max_iter)
        path = out_dir / f"{target.replace('-', '_')}_sweep.csv"
        write_sweep_csv(records, path)
        summary["artifacts"].append(path.name)
        summary["grid"] = {"c_min": c_min, "c_max": c_max, "c_step": settings.c_step}
        summary["nonconvergent_sync"] = [r.c for r in records if r.sync_iters is None]
        summary["nonconvergent_async"] = [r.c for r in records if r.async_iters is None]
    else:
        facts = quadcover_facts(settings.power_tol)
        save_model(facts["base"], out_dir / "triangle.txt")
        save_model(facts["printed_cover"].model, out_dir / "triangle_cover.txt")
        save_model(facts["adversarial_cover"].model, out_dir / "adversarial_cover.txt")
        text = renderer.render("quadcover_report.txt.j2", **facts)
        (out_dir / "quadcover_report.txt").write_text(text)
        summary["artifacts"] += [
            "triangle.txt",
            "triangle_cover.txt",
            "adversarial_cover.txt",
            "quadcover_report.txt",
        ]
        summary["lambda_min"] = {
            "base": facts["base_lambda_min"],
            "printed_cover": facts["printed_lambda_min"],
            "adversarial_cover": facts["adversarial_lambda_min"],
        }
        summary["rho"] = facts["rho"]

    write_summary(summary, out_dir / "summary.yaml")
    logger.info(f"Reproduced {target} into {out_dir}")
    return summary, text
