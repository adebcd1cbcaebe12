"""
Nonlinear chamber-pressure plant of the cold-air test setup.

    dP/dt = c1 * M(P) - c2 * P * A_t * 1e-6          (A_t in mm^2)

with the pintle throat area A_t driven by a delayed first-order actuator.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from pressurectl.lintools.integrate import rk4_step
from pressurectl.lintools.transfer import RationalTransfer
from pressurectl.plant.models import (
    MM2_TO_M2,
    ActuatorModel,
    GasParams,
    InflowPolynomial,
    ValveGeometry,
    mass_flow_out,
)
from pressurectl.util.errors import ContractViolation, SimulationAbort

logger = logging.getLogger(__name__)


class ThetaCommand(NamedTuple):
    theta: float
    saturated: bool


def throat_area(valve: ValveGeometry, theta: float) -> float:
    """Open throat area [mm^2] at pintle position `theta` [qc]."""
    if not valve.theta_min <= theta <= valve.theta_max:
        raise ContractViolation(
            f"theta={theta} qc outside travel [{valve.theta_min}, {valve.theta_max}]")
    return valve.area(theta)


def area_to_theta(valve: ValveGeometry, A_t_cmd: float) -> ThetaCommand:
    """Invert the linearized valve map; commands beyond travel saturate."""
    theta = (A_t_cmd / math.pi - valve.a1) / valve.a2
    if theta < valve.theta_min:
        return ThetaCommand(valve.theta_min, True)
    if theta > valve.theta_max:
        return ThetaCommand(valve.theta_max, True)
    return ThetaCommand(theta, False)


class CatsPlant:
    """Chamber pressure + actuator state; one instance per simulation run."""

    def __init__(
        self,
        gas: GasParams,
        inflow: InflowPolynomial,
        valve: ValveGeometry,
        actuator: ActuatorModel,
        p_max: float = 4.0e6,
    ) -> None:
        self.gas = gas
        self.inflow = inflow
        self.valve = valve
        self.actuator = actuator
        self.p_max = p_max
        self.P = 0.0
        self.d0 = 0.0
        self.t = 0.0
        self._dt: Optional[float] = None

    def start(self, P0: float, theta0: float, dt: float) -> None:
        if not 0.0 < P0 < self.p_max:
            raise ContractViolation(f"initial pressure {P0} Pa outside (0, {self.p_max})")
        self.P = float(P0)
        self.t = 0.0
        self._dt = dt
        self.actuator.reset(theta0, dt)

    def effective_area(self, theta_mes: float) -> float:
        return self.valve.area(theta_mes + self.d0)

    def _rhs(self, x: np.ndarray, theta_applied: float, t: float) -> np.ndarray:
        P, theta_mes = x[0], x[1]
        return np.array([
            plant_derivative(self, P, self.effective_area(theta_mes)),
            self.actuator.rate(theta_mes, theta_applied),
        ])

    def step(self, theta_cmd: float, dt: float) -> Tuple[float, float]:
        if self._dt is None:
            raise ContractViolation("CatsPlant.start() must be called before step()")
        applied = self.actuator.delayed(theta_cmd)
        x = rk4_step(self._rhs, np.array([self.P, self.actuator.theta_mes]), applied, self.t, dt)
        self.t += dt
        P, theta_mes = float(x[0]), float(x[1])
        if not math.isfinite(P) or not 0.0 < P < self.p_max:
            raise SimulationAbort(
                f"chamber pressure {P:.6g} Pa left (0, {self.p_max:.6g}) at t={self.t:.4f} s "
                f"(theta_mes={theta_mes:.6g} qc, d0={self.d0:.6g})")
        self.P = P
        self.actuator.theta_mes = theta_mes
        return P, theta_mes


def plant_derivative(plant: CatsPlant, P: float, A_t: float) -> float:
    """dP/dt [Pa/s]."""
    return plant.gas.c1 * (plant.inflow(P) - mass_flow_out(P, A_t, plant.gas))


def plant_step(plant: CatsPlant, theta_cmd: float, dt: float) -> Tuple[float, float]:
    return plant.step(theta_cmd, dt)


@dataclass(frozen=True)
class Linearization:
    a_p: float
    b_p: float
    tau: float

    @property
    def transfer(self) -> RationalTransfer:
        """b_p / (s - a_p); the input delay `tau` is carried alongside."""
        return RationalTransfer.first_order(self.a_p, self.b_p)


def linearize_at(plant: CatsPlant, P0: float, At0: float) -> Linearization:
    c2 = plant.gas.c2
    return Linearization(a_p=-c2 * At0 * MM2_TO_M2, b_p=-c2 * P0 * MM2_TO_M2, tau=plant.actuator.delay)


def equilibrium_area(plant: CatsPlant, P: float) -> float:
    """Throat area [mm^2] that holds pressure P in steady state."""
    if P <= 0:
        raise ContractViolation(f"equilibrium needs P > 0, got {P}")
    # mass_flow_out is linear in A_t
    return plant.inflow(P) / mass_flow_out(P, 1.0, plant.gas)


def equilibrium_pressure(plant: CatsPlant, A_t: float) -> float:
    """Root of dP/dt = 0 at fixed area, bracketed on (0, p_max)."""
    lo, hi = 1.0, plant.p_max
    f_lo, f_hi = plant_derivative(plant, lo, A_t), plant_derivative(plant, hi, A_t)
    if f_lo * f_hi > 0:
        raise ContractViolation(f"no equilibrium pressure in (0, {plant.p_max}) for A_t={A_t} mm^2")
    return float(brentq(lambda p: plant_derivative(plant, p, A_t), lo, hi, xtol=1e-9, rtol=1e-14))


def simulate_actuator_step(
    actuator: ActuatorModel,
    theta_step: float,
    duration: float,
    dt_sim: float = 0.001,
    sample_dt: float = 0.005,
    theta0: float = 0.0,
) -> List[Tuple[float, float]]:
    """Open-loop step of the drive alone; samples (t, theta_mes) with the command switched at t=0."""
    actuator.reset(theta0, dt_sim)
    cmd = theta0 + theta_step
    every = int(round(sample_dt / dt_sim))
    steps = int(round(duration / dt_sim))
    out = [(0.0, actuator.theta_mes)]

    def rhs(x: np.ndarray, applied: float, t: float) -> np.ndarray:
        return np.array([actuator.rate(x[0], applied)])

    for k in range(1, steps + 1):
        applied = actuator.delayed(cmd)
        actuator.theta_mes = float(rk4_step(rhs, np.array([actuator.theta_mes]), applied, 0.0, dt_sim)[0])
        if k % every == 0:
            out.append((k * dt_sim, actuator.theta_mes))
    return out


def simulate_open_loop(
    plant: CatsPlant,
    theta_profile: Callable[[float], float],
    duration: float,
    dt_sim: float = 0.001,
    sample_dt: float = 0.05,
    P0: Optional[float] = None,
) -> List[Tuple[float, float, float]]:
    """
    Drive the plant with a commanded pintle profile; returns (t, P, theta_mes)
    samples. Starts at the equilibrium of the initial command unless P0 is given.
    """
    theta0 = theta_profile(0.0)
    if P0 is None:
        P0 = equilibrium_pressure(plant, plant.effective_area(theta0))
    plant.start(P0, theta0, dt_sim)
    every = int(round(sample_dt / dt_sim))
    steps = int(round(duration / dt_sim))
    out = [(0.0, plant.P, plant.actuator.theta_mes)]
    for k in range(steps):
        plant.step(theta_profile(k * dt_sim), dt_sim)
        if (k + 1) % every == 0:
            out.append(((k + 1) * dt_sim, plant.P, plant.actuator.theta_mes))
    return out
