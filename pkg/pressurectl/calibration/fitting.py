"""
Data-driven model enhancement: inflow polynomial from steady operating points
and a first-order-plus-dead-time actuator model from a step response.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from pressurectl.plant.models import MM2_TO_M2, GasParams, InflowPolynomial
from pressurectl.util.errors import FitError
from pressurectl.util.io import dump_roundtrip, load_roundtrip, read_csv_columns

logger = logging.getLogger(__name__)

ONSET_LEVEL = 0.02
SPAN = (0.05, 0.90)


@dataclass(frozen=True)
class InflowFit:
    polynomial: InflowPolynomial
    residual_rms: float
    degree: int


@dataclass(frozen=True)
class ActuatorFit:
    tau_act: float
    delay: float
    residual_rms: float
    y0: float
    y_final: float


def steady_inflow(P_ss: float, A_t: float, gas: GasParams) -> float:
    """Inflow [kg/s] that balances choked outflow at a steady point (dP/dt = 0)."""
    return gas.c2 * P_ss * A_t * MM2_TO_M2 / gas.c1


def fit_inflow_polynomial(points: Sequence[Tuple[float, float]], gas: GasParams) -> InflowFit:
    """
    Least-squares cubic M(P) through steady operating points (P_ss [Pa], A_t [mm^2]).

    Fewer than four distinct pressures degrade the degree (with a warning)
    instead of returning an underdetermined cubic.
    """
    if not points:
        raise FitError("no steady-state points given")
    P = np.array([p for p, _ in points], dtype=float)
    A = np.array([a for _, a in points], dtype=float)
    if np.any(P <= 0) or np.any(A <= 0):
        raise FitError("steady-state pressures and areas must be > 0")
    m_in = np.array([steady_inflow(p, a, gas) for p, a in zip(P, A)])
    distinct = np.unique(P).size
    degree = min(3, distinct - 1)
    if degree < 3:
        logger.warning("FIT_DEGRADED kind=inflow distinct_pressures=%d degree=%d", distinct, degree)
    # fit in P/scale; raw Pa powers make the design matrix numerically singular
    scale = float(np.max(np.abs(P)))
    V = np.vander(P / scale, degree + 1)
    coef, *_ = np.linalg.lstsq(V, m_in, rcond=None)
    residual = float(np.sqrt(np.mean((V @ coef - m_in) ** 2)))
    full = np.zeros(4)
    for power, c in zip(range(degree, -1, -1), coef):
        full[3 - power] = c / scale ** power
    poly = InflowPolynomial(*full.tolist())
    logger.info("FIT kind=inflow degree=%d residual_rms=%.3e coeffs=%s", degree, residual, full.tolist())
    return InflowFit(poly, residual, degree)


def fit_first_order_delay(
    step_trace: Sequence[Tuple[float, float]],
    theta_cmd_step: float,
    t_step: float = 0.0,
) -> ActuatorFit:
    """
    Dead time and time constant of a monotone step response (t [s], theta_mes [qc]).

    Onset is the interpolated 2 % crossing; the reported dead time removes the
    first-order rise to 2 %, tau*ln(1/0.98). tau comes from a straight-line fit
    of log(1 - y/y_final) over the 5-90 % span.
    """
    if len(step_trace) < 10:
        raise FitError("step trace too short")
    t = np.array([p[0] for p in step_trace], dtype=float)
    y = np.array([p[1] for p in step_trace], dtype=float)
    before = t <= t_step
    y0 = float(np.mean(y[before])) if np.any(before) else float(y[0])
    tail = max(len(y) // 10, 2)
    final = y[-tail:]
    y_final = float(np.mean(final))
    amp = y_final - y0
    if abs(amp) <= 1e-9 * max(1.0, abs(theta_cmd_step)):
        raise FitError("no response to the step command")
    if amp * theta_cmd_step < 0:
        logger.warning("FIT_SIGN kind=actuator response opposes command step=%g amp=%g", theta_cmd_step, amp)
    half = len(final) // 2
    drift = abs(float(np.mean(final[half:]) - np.mean(final[:half])))
    if drift > 0.01 * abs(amp):
        raise FitError(f"trace has not settled: final-window drift {drift:.4g} > 1% of amplitude {abs(amp):.4g}")

    z = (y - y0) / amp
    after = t > t_step
    idx = np.flatnonzero(after & (z >= ONSET_LEVEL))
    if idx.size == 0:
        raise FitError("response never reaches 2 % of its final value")
    i = int(idx[0])
    if i == 0 or not after[i - 1]:
        t_onset = t[i]
    else:
        t_onset = t[i - 1] + (ONSET_LEVEL - z[i - 1]) / (z[i] - z[i - 1]) * (t[i] - t[i - 1])

    span = after & (z >= SPAN[0]) & (z <= SPAN[1])
    if np.count_nonzero(span) < 2:
        raise FitError("too few samples in the 5-90 % span")
    slope, _ = np.polyfit(t[span], np.log(1.0 - z[span]), 1)
    if slope >= 0:
        raise FitError("log-linear fit gives a non-decaying response")
    tau = -1.0 / slope
    delay = max(0.0, t_onset - t_step - tau * math.log(1.0 / (1.0 - ONSET_LEVEL)))

    rel = np.clip(t - t_step - delay, 0.0, None)
    model = y0 + amp * (1.0 - np.exp(-rel / tau))
    residual = float(np.sqrt(np.mean((model[after] - y[after]) ** 2)))
    logger.info("FIT kind=actuator tau=%.5f delay=%.5f residual=%.3e", tau, delay, residual)
    return ActuatorFit(tau, delay, residual, y0, y_final)


def read_inflow_points(path: str) -> List[Tuple[float, float]]:
    frame = read_csv_columns(path, ("P_ss", "A_t"))
    return list(zip(frame["P_ss"].astype(float), frame["A_t"].astype(float)))


def read_step_trace(path: str) -> List[Tuple[float, float]]:
    frame = read_csv_columns(path, ("t", "theta_mes"))
    return list(zip(frame["t"].astype(float), frame["theta_mes"].astype(float)))


def write_plant_section(
    config_path: str,
    inflow: Optional[InflowPolynomial] = None,
    actuator: Optional[ActuatorFit] = None,
) -> None:
    """Write fitted values into the `plant` section, keeping the file's comments."""
    data = load_roundtrip(config_path)
    plant = data.setdefault("plant", {})
    if inflow is not None:
        section = plant.setdefault("inflow", {})
        for name, value in zip(("c3", "c4", "c5", "c6"), inflow.coeffs):
            section[name] = float(value)
    if actuator is not None:
        section = plant.setdefault("actuator", {})
        section["tau_act"] = float(actuator.tau_act)
        section["delay"] = float(actuator.delay)
    dump_roundtrip(data, config_path)
    logger.info("CONFIG_WRITE path=%s inflow=%s actuator=%s", config_path, inflow is not None, actuator is not None)
