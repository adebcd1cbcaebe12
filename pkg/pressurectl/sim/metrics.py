"""
Step-response metrics over one reference step.

Final value is the mean of the last 10 % of the window. Rise time, settling
time and overshoot come from python-control's ``step_info`` on the output
deviation from its pre-step sample: rise runs from 10 % to 90 % of the change,
settling is the time after which the output stays within 5 % of the change.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Dict

import control
import numpy as np

from pressurectl.sim.trace import SimTrace
from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)

SETTLING_BAND = 0.05
RISE_LIMITS = (0.1, 0.9)
FINAL_FRACTION = 0.10


@dataclass(frozen=True)
class StepMetrics:
    steady_state_error: float   # %
    rise_time: float            # s
    settling_time: float        # s
    overshoot: float            # %
    settled: bool = True
    label: str = ""

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


def step_metrics(t: np.ndarray, r: np.ndarray, y: np.ndarray, start: float, end: float,
                 label: str = "") -> StepMetrics:
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = np.flatnonzero((t >= start - 1e-9) & (t < end - 1e-9))
    if inside.size < 2:
        raise ContractViolation(f"window [{start}, {end}) holds fewer than two samples")
    first, last = inside[0], inside[-1]
    before = first - 1 if first > 0 else first
    r0, r1 = r[before], r[last]
    if r1 == r0:
        raise ContractViolation(f"no reference step inside window [{start}, {end})")
    y0 = y[before]
    length = float(t[last] - t[first])

    tail = max(1, int(np.ceil(FINAL_FRACTION * inside.size)))
    y_final = float(np.mean(y[inside][-tail:]))
    sse = abs(r1 - y_final) / abs(r1 - r0) * 100.0
    change = y_final - y0
    if change == 0.0:
        logger.warning("METRICS label=%s output did not move in [%s, %s)", label, start, end)
        return StepMetrics(sse, length, length, 0.0, settled=False, label=label)

    # the pre-step sample leads the series so the deviation always starts at 0
    seg = slice(before, last + 1)
    info = control.step_info(y[seg] - y0, T=t[seg] - t[first], yfinal=change,
                             SettlingTimeThreshold=SETTLING_BAND, RiseTimeLimits=RISE_LIMITS)
    settling = float(info["SettlingTime"])
    settled = bool(np.isfinite(settling))
    if not settled:
        settling = length
    return StepMetrics(sse, float(info["RiseTime"]), max(0.0, settling), float(info["Overshoot"]),
                       settled=settled, label=label)


def compute_metrics(trace: SimTrace, start: float, end: float, label: str = "",
                    signal: str = "y_p") -> StepMetrics:
    """Metrics of `signal` (y_p or y_m) for the step inside [start, end)."""
    metrics = step_metrics(trace.column("t"), trace.column("r"), trace.column(signal), start, end, label)
    logger.info("METRICS label=%s sse=%.3f rise=%.3f settle=%.3f overshoot=%.3f settled=%s",
                label, metrics.steady_state_error, metrics.rise_time, metrics.settling_time,
                metrics.overshoot, metrics.settled)
    return metrics
