"""
Template Manager utility for rendering reports as Markdown.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from jinja2 import Environment, FileSystemLoader, TemplateNotFound

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"
FALLBACK = "report.md.j2"


def _fmt(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        if not math.isfinite(value):
            return "inf"
        return f"{value:.6g}"
    return str(value)


def _max_or_zero(values: Optional[Iterable[float]]) -> float:
    return max((abs(v) for v in values or []), default=0.0)


class TemplateManager:
    """Renders ``rep/1`` reports through per-command Markdown templates."""

    def __init__(self, template_dir: Optional[str] = None):
        self.template_dir = Path(template_dir) if template_dir else TEMPLATE_DIR
        self.env = Environment(
            loader=FileSystemLoader(str(self.template_dir)),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        self.env.filters["fmt"] = _fmt
        self.env.filters["max_or_zero"] = _max_or_zero
        self.env.filters["tojson_sorted"] = lambda d: json.dumps(d, sort_keys=True, indent=2)

    def get_available_templates(self) -> List[str]:
        return sorted(f.name for f in self.template_dir.glob("*.md.j2"))

    def template_for(self, command: str) -> str:
        name = f"{command}.md.j2"
        return name if (self.template_dir / name).exists() else FALLBACK

    def render_report(self, report: Dict[str, Any]) -> str:
        """Render a report; commands without a template get the generic layout."""
        name = self.template_for(report.get("command", ""))
        try:
            return self.env.get_template(name).render(report=report)
        except TemplateNotFound:
            logger.warning(f"template {name} missing from {self.template_dir}")
            return "```json\n" + json.dumps(report, sort_keys=True, indent=2) + "\n```\n"
