"""Text reports, CSV tables and YAML summaries."""

from __future__ import annotations

import csv
import io
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, List, Sequence, Union

import numpy as np
import yaml
from jinja2 import Environment, FileSystemLoader

if TYPE_CHECKING:
    from .experiments import ErrorCurve, SweepRecord

logger = logging.getLogger(__name__)

DEFAULT_TEMPLATE_DIR = Path(__file__).parent.parent / "templates"
SWEEP_HEADER = ("c", "sync_iters", "async_iters")


def format_number(value: Any) -> str:
    if value is None:
        return "none"
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.10g}"


def format_vector(values: Iterable[Any]) -> str:
    return "(" + ", ".join(format_number(v) for v in values) + ")"


def format_matrix(matrix: np.ndarray) -> List[str]:
    return [" ".join(f"{v:8.4g}" for v in row) for row in np.asarray(matrix)]


def yes_no(flag: bool) -> str:
    return "yes" if flag else "no"


class ReportRenderer:
    """Render the line-oriented text reports."""

    def __init__(self, template_dir: Union[str, Path] = DEFAULT_TEMPLATE_DIR):
        self.template_dir = Path(template_dir)
        if not self.template_dir.exists():
            raise FileNotFoundError(f"Template directory not found: {template_dir}")
        self.jinja_env = Environment(
            loader=FileSystemLoader(str(self.template_dir)),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        self.jinja_env.filters["num"] = format_number
        self.jinja_env.filters["vec"] = format_vector
        self.jinja_env.filters["rows"] = format_matrix
        self.jinja_env.filters["yesno"] = yes_no

    def render(self, template_name: str, **context: Any) -> str:
        template = self.jinja_env.get_template(template_name)
        return template.render(**context)


def sweep_csv_text(records: Sequence["SweepRecord"]) -> str:
    """Header c,sync_iters,async_iters; non-convergence is an empty field."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for record in records:
        writer.writerow(
            [
                f"{record.c:.10g}",
                "" if record.sync_iters is None else record.sync_iters,
                "" if record.async_iters is None else record.async_iters,
            ]
        )
    return buffer.getvalue()


def write_sweep_csv(records: Sequence["SweepRecord"], path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(sweep_csv_text(records))
    logger.info(f"Sweep written to {path}")


def write_curves_csv(curves: Sequence["ErrorCurve"], path: Union[str, Path]) -> None:
    """One row per iteration; a series that stopped leaves its field empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    length = max((curve.iterations for curve in curves), default=0)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["iteration"] + [curve.name for curve in curves])
        for t in range(length):
            writer.writerow(
                [t + 1]
                + [
                    f"{curve.errors[t]:.10e}" if t < curve.iterations else ""
                    for curve in curves
                ]
            )
    logger.info(f"Error curves written to {path}")


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def write_summary(summary: dict, path: Union[str, Path]) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(_plain(summary), f, default_flow_style=False, sort_keys=False)
    logger.info(f"Summary saved to {path}")
