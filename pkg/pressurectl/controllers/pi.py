import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from pressurectl.util.errors import ContractViolation, SimulationAbort

logger = logging.getLogger(__name__)


@dataclass
class PiConfig:
    k_p: float
    t_i: float
    u_min: Optional[float] = None
    u_max: Optional[float] = None
    integrator: float = 0.0
    e_prev: Optional[float] = None
    saturated: bool = False

    def __post_init__(self) -> None:
        if not self.t_i > 0:
            raise ContractViolation(f"T_i must be > 0, got {self.t_i}")

    def clamp(self, u: float) -> float:
        if self.u_min is not None and u < self.u_min:
            return self.u_min
        if self.u_max is not None and u > self.u_max:
            return self.u_max
        return u


def pi_step(cfg: PiConfig, e: float, dt: float) -> float:
    """
    u = K_p (e + I / T_i) with I the trapezoidal integral of e. While the
    output is saturated and the new integral would push it further out, the
    integrator holds its value.
    """
    if dt <= 0:
        raise ContractViolation(f"dt must be > 0, got {dt}")
    if not np.isfinite(e):
        raise SimulationAbort(f"PI error signal is not finite: {e!r}")
    if cfg.e_prev is None:
        cfg.e_prev = e
    candidate = cfg.integrator + 0.5 * dt * (e + cfg.e_prev)
    cfg.e_prev = e
    u_raw = cfg.k_p * (e + candidate / cfg.t_i)
    u = cfg.clamp(u_raw)
    cfg.saturated = u != u_raw
    if cfg.saturated and (candidate - cfg.integrator) * cfg.k_p * (u_raw - u) > 0:
        # anti-windup: integrating would deepen the saturation
        return cfg.clamp(cfg.k_p * (e + cfg.integrator / cfg.t_i))
    cfg.integrator = candidate
    return u


class PiController:
    """PI on e = r - y; no reference model, so y_m mirrors r."""

    mode = "pi"

    def __init__(self, cfg: PiConfig) -> None:
        self.cfg = cfg
        self.y_m = 0.0
        self.e1 = 0.0

    def start(self, y_p: float, r: float, u0: float) -> None:
        e0 = r - y_p
        self.cfg.e_prev = None
        # bumpless: integrator preloaded so the output starts at u0
        self.cfg.integrator = (u0 / self.cfg.k_p - e0) * self.cfg.t_i if self.cfg.k_p else 0.0
        self.y_m = r
        self.e1 = y_p - r

    def step(self, y_p: float, r: float, dt: float) -> float:
        self.y_m = r
        self.e1 = y_p - r
        return pi_step(self.cfg, r - y_p, dt)

    @property
    def parameters(self) -> np.ndarray:
        return np.array([self.cfg.k_p, self.cfg.t_i])

    @property
    def saturated(self) -> bool:
        return self.cfg.saturated
