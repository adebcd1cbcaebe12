"""
First-order adaptive controllers as run on the test setup.

MRAC / CRM:  u = theta0*y_p + theta_r*r + theta3
DR-CRM:      u = alpha_y*y_p + sum_i lambda_i*u(t - i*dt) + k*r + theta3

Parameters follow theta' = Proj(theta, -sign(b_p) * Gamma * e1 * omega),
integrated by forward Euler once per controller period.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from pressurectl.controllers.projection import ProjectionConfig, projected_update
from pressurectl.lintools.delay import DelayBuffer, steps_for
from pressurectl.util.errors import ContractViolation, SimulationAbort

logger = logging.getLogger(__name__)


class AdaptiveMode(str, Enum):
    MRAC = "mrac"
    CRM = "crm"
    DRCRM = "drcrm"


class ScalarRefModel:
    """
    y_m' = a_m y_m + b_m r(t - tau) + ell e1, with b_m = -a_m (unity DC gain).

    Each period the open-loop model is advanced exactly with r held, then
    y_m moves toward y_p by the fraction 1 - exp(-ell dt) of the held e1.
    With e1 = 0 the update is the exact open-loop model; with ell = 0 the
    correction vanishes identically.
    """

    def __init__(self, a_m: float, b_m: float, ell: float = 0.0, delay_steps: int = 0,
                 dt: float = 0.05, y_m: float = 0.0) -> None:
        if not a_m < 0:
            raise ContractViolation(f"reference model needs a_m < 0, got {a_m}")
        if not math.isclose(a_m, -b_m, rel_tol=1e-9, abs_tol=0.0):
            raise ContractViolation(f"reference model needs b_m = -a_m for unity DC gain, got a_m={a_m} b_m={b_m}")
        if ell < 0:
            raise ContractViolation(f"CRM gain ell must be >= 0, got {ell}")
        self.a_m = a_m
        self.b_m = b_m
        self.ell = ell
        self.y_m = y_m
        self.delay_steps = delay_steps
        self.dt = dt
        self._r_hist = DelayBuffer(delay_steps, dt) if delay_steps > 0 else None

    @property
    def tau_m(self) -> float:
        return -1.0 / self.a_m

    def prime(self, r: float, y_m: float) -> None:
        self.y_m = y_m
        if self._r_hist is not None:
            self._r_hist.prime(r)

    def advance(self, r: float, e1: float, dt: float) -> float:
        r_d = r
        if self._r_hist is not None:
            r_d = self._r_hist.sample(self.delay_steps)
            self._r_hist.push(r)
        phi = math.exp(self.a_m * dt)
        gain = math.expm1(self.a_m * dt) / self.a_m
        pull = -math.expm1(-self.ell * dt)
        self.y_m = phi * self.y_m + gain * self.b_m * r_d + pull * e1
        return self.y_m


@dataclass
class ScalarAdaptiveState:
    mode: AdaptiveMode
    theta: np.ndarray
    gamma: np.ndarray
    sign_bp: int = -1
    dt: float = 0.05
    projection: Optional[ProjectionConfig] = None
    u_limits: Optional[Tuple[float, float]] = None
    u_history: Optional[DelayBuffer] = field(default=None, repr=False)
    saturated: bool = False

    def __post_init__(self) -> None:
        self.mode = AdaptiveMode(self.mode)
        self.theta = np.asarray(self.theta, dtype=float).copy()
        self.gamma = np.asarray(self.gamma, dtype=float).copy()
        if self.theta.shape != self.gamma.shape:
            raise ContractViolation(f"theta {self.theta.shape} and gamma {self.gamma.shape} differ in shape")
        if np.any(self.gamma < 0):
            raise ContractViolation("adaptation rates must be >= 0")
        if self.sign_bp not in (-1, 1):
            raise ContractViolation(f"sign_bp must be -1 or 1, got {self.sign_bp}")
        if self.mode is AdaptiveMode.DRCRM:
            if self.theta.size < 3:
                raise ContractViolation("DR-CRM needs (alpha_y, lambda_1..m, k, theta3)")
            if self.u_history is None:
                self.u_history = DelayBuffer(self.theta.size - 3, self.dt)
        elif self.theta.size != 3:
            raise ContractViolation(f"{self.mode.value} needs (theta0, theta_r, theta3), got {self.theta.size} values")

    @classmethod
    def create(cls, mode, theta, gamma, sign_bp: int = -1, dt: float = 0.05, delay: float = 0.0,
               projection: Optional[ProjectionConfig] = None,
               u_limits: Optional[Tuple[float, float]] = None) -> "ScalarAdaptiveState":
        mode = AdaptiveMode(mode)
        if mode is AdaptiveMode.DRCRM:
            m = steps_for(delay, dt, "compensated delay")
            if len(theta) != m + 3:
                raise ContractViolation(f"DR-CRM with m={m} needs {m + 3} parameters, got {len(theta)}")
        return cls(mode, np.asarray(theta), np.asarray(gamma), sign_bp, dt, projection, u_limits)

    @property
    def m(self) -> int:
        return self.u_history.capacity if self.u_history is not None else 0

    def emit(self, omega: np.ndarray) -> float:
        u = float(self.theta @ omega)
        if not math.isfinite(u):
            raise SimulationAbort(f"{self.mode.value} control is not finite (theta={self.theta.tolist()})")
        self.saturated = False
        if self.u_limits is not None:
            lo, hi = self.u_limits
            if u < lo or u > hi:
                logger.debug("SAT mode=%s u=%.6g limits=(%.6g, %.6g)", self.mode.value, u, lo, hi)
                u = min(max(u, lo), hi)
                self.saturated = True
        return u

    def adapt(self, e1: float, omega: np.ndarray, dt: float) -> None:
        rate = -self.sign_bp * self.gamma * e1 * omega
        self.theta = projected_update(self.theta, rate, dt, self.projection)


def _finite(**signals: float) -> None:
    for name, value in signals.items():
        if not math.isfinite(value):
            raise SimulationAbort(f"signal {name} is not finite: {value!r}")


def mrac_scalar_step(state: ScalarAdaptiveState, ref_model: ScalarRefModel, y_p: float, r: float, dt: float) -> float:
    if state.mode not in (AdaptiveMode.MRAC, AdaptiveMode.CRM):
        raise ContractViolation(f"mrac_scalar_step needs MRAC or CRM, got {state.mode.value}")
    _finite(y_p=y_p, r=r)
    e1 = y_p - ref_model.y_m
    omega = np.array([y_p, r, 1.0])
    u = state.emit(omega)
    state.adapt(e1, omega, dt)
    ref_model.advance(r, e1, dt)
    return u


def drcrm_scalar_step(state: ScalarAdaptiveState, ref_model: ScalarRefModel, y_p: float, r: float, dt: float) -> float:
    if state.mode is not AdaptiveMode.DRCRM:
        raise ContractViolation(f"drcrm_scalar_step needs DRCRM, got {state.mode.value}")
    if ref_model.delay_steps != state.m:
        raise ContractViolation(
            f"reference-model delay ({ref_model.delay_steps} steps) differs from the input history ({state.m} steps)")
    _finite(y_p=y_p, r=r)
    e1 = y_p - ref_model.y_m
    omega = np.concatenate(([y_p], state.u_history.history(), [r, 1.0]))
    u = state.emit(omega)
    state.adapt(e1, omega, dt)
    ref_model.advance(r, e1, dt)
    state.u_history.push(u)
    return u


class ScalarAdaptiveController:
    """Drives the scalar step functions through the simulator's controller protocol."""

    def __init__(self, state: ScalarAdaptiveState, ref_model: ScalarRefModel) -> None:
        self.state = state
        self.ref_model = ref_model
        self.y_m = ref_model.y_m
        self.e1 = 0.0

    @property
    def mode(self) -> str:
        return self.state.mode.value

    def start(self, y_p: float, r: float, u0: float) -> None:
        self.ref_model.prime(r, y_p)
        if self.state.u_history is not None:
            self.state.u_history.prime(u0)
        self.y_m = y_p
        self.e1 = 0.0

    def step(self, y_p: float, r: float, dt: float) -> float:
        self.y_m = self.ref_model.y_m
        self.e1 = y_p - self.y_m
        if self.state.mode is AdaptiveMode.DRCRM:
            return drcrm_scalar_step(self.state, self.ref_model, y_p, r, dt)
        return mrac_scalar_step(self.state, self.ref_model, y_p, r, dt)

    @property
    def parameters(self) -> np.ndarray:
        return self.state.theta.copy()

    @property
    def saturated(self) -> bool:
        return self.state.saturated
