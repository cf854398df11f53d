import csv
import io
import os

from jinja2 import Environment, FileSystemLoader

from data_model import BenchmarkReport
from text_utils import short_number

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates")

CSV_COLUMNS = [
    "mode",
    "n_segments",
    "solver_seed",
    "instance_seed",
    "outcome",
    "error",
    "max_residual",
    "basis_size",
    "multi_reductions",
    "precision_bits",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(report: BenchmarkReport, timings: bool = False) -> str:
    """One row per run, sorted; wall time only when asked for so the output stays reproducible."""
    columns = CSV_COLUMNS + (["wall_seconds"] if timings else [])
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for run in report.sorted_runs():
        row = run.model_dump()
        writer.writerow([_cell(row[c]) for c in columns])
    return buffer.getvalue()


def _environment(template_dir: str) -> Environment:
    env = Environment(loader=FileSystemLoader(template_dir), trim_blocks=True, lstrip_blocks=True)
    env.filters["sci"] = short_number
    env.filters["percent"] = lambda x: f"{100 * x:.0f}%"
    return env


def render_report(report: BenchmarkReport, template_path: str = os.path.join(TEMPLATE_DIR, "bench_report.md.jinja2"), timings: bool = False) -> str:
    """
    Render the per-N aggregate table of a benchmark as markdown.

    Args:
        report: The benchmark runs
        template_path: Path to the Jinja template file
        timings: Include the mean wall time column

    Returns:
        Rendered markdown string
    """
    template_dir = os.path.dirname(os.path.abspath(template_path))
    template = _environment(template_dir).get_template(os.path.basename(template_path))
    context = {
        "mode": report.mode,
        "sigma": report.sigma,
        "rows": report.aggregate(),
        "timings": timings,
    }
    return template.render(context)


def render_success_grid(report: BenchmarkReport, n_segments: int, template_path: str = os.path.join(TEMPLATE_DIR, "success_grid.md.jinja2")) -> str:
    """Solver seeds against instance seeds, one mark per run."""
    template_dir = os.path.dirname(os.path.abspath(template_path))
    template = _environment(template_dir).get_template(os.path.basename(template_path))
    rows = report.success_grid(n_segments)
    width = max((len(cells) for _, cells in rows), default=0)
    context = {
        "n_segments": n_segments,
        "sigma": report.sigma,
        "rows": rows,
        "instance_columns": list(range(width)),
    }
    return template.render(context)
