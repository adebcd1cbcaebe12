import logging
import os
from typing import Dict, Sequence

import jinja2

from pressurectl.sim.metrics import StepMetrics
from pressurectl.sim.resources import ResourceEstimate
from pressurectl.sim.trace import SimTrace

logger = logging.getLogger(__name__)

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "templates")


def _env() -> jinja2.Environment:
    return jinja2.Environment(
        loader=jinja2.FileSystemLoader(TEMPLATE_DIR),
        keep_trailing_newline=True,
        undefined=jinja2.StrictUndefined,
    )


def render(template: str, **context) -> str:
    logger.debug("REPORT_RENDER template=%s", template)
    return _env().get_template(template).render(**context)


def metrics_report(results: Dict[str, Sequence[StepMetrics]], traces: Dict[str, SimTrace]) -> str:
    """key=value lines per controller and window, plus run-level summaries."""
    return render("metrics.txt.j2", results=results, traces=traces)


def resources_report(mode: str, estimate: ResourceEstimate, dt: float) -> str:
    return render("resources.txt.j2", mode=mode, est=estimate, dt=dt)


def design_report(name: str, values: Dict[str, object]) -> str:
    return render("design.txt.j2", name=name, values=values)
