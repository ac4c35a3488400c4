"""
Text formatters for the Neural Particle Method using Jinja2 templates.

Renders the run report (report.md), the dam-break comparison table and the
plain-text Butcher tableau dump.
"""

from pathlib import Path
from typing import Any, Dict, Sequence

from jinja2 import Environment, FileSystemLoader

from .constants import EMOJI, FLOAT_FORMAT, __version__
from .diagnostics import FrontComparison
from .irk import ButcherTableau, tableau_rows
from .utils import format_duration, format_loss, format_number


def format_float(value: Any) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    return str(value)


class ReportFormatter:
    """Handles rendering of run artifacts through Jinja2 templates."""

    def __init__(self):
        template_dir = Path(__file__).parent / "templates"

        if not template_dir.exists():
            raise FileNotFoundError(
                f"Templates directory not found: {template_dir}\n"
                f"If installed via .whl, ensure templates are included in package_data."
            )

        self.env = Environment(
            loader=FileSystemLoader(template_dir),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True
        )
        self.env.filters.update({
            "f17": format_float,
            "loss": format_loss,
            "short": lambda v: f"{v:.6g}" if isinstance(v, float) else str(v),
        })
        self.env.globals.update({
            "format_number": format_number,
            "format_duration": format_duration,
            "version": __version__,
            "emoji": EMOJI,
        })

    def render(self, template_name: str, data: Dict[str, Any]) -> str:
        template = self.env.get_template(template_name)
        return template.render(**data)

    def format_tableau(self, tableau: ButcherTableau) -> str:
        rows = [[format_float(v) for v in a_row] for _, a_row in tableau_rows(tableau)]
        return self.render("tableau.txt.j2", {
            "s": tableau.s,
            "order": tableau.order,
            "c": [format_float(float(v)) for v in tableau.c],
            "b": [format_float(float(v)) for v in tableau.b],
            "rows": rows,
        })

    def format_comparison(self, rows: Sequence[FrontComparison]) -> str:
        return self.render("components/comparison_table.md.j2", {"rows": rows})

    def format_report(self, summary: Dict[str, Any],
                      comparison: Sequence[FrontComparison] = ()) -> str:
        return self.render("report.md.j2", {
            "summary": summary,
            "comparison": self.format_comparison(comparison) if comparison else "",
        })
