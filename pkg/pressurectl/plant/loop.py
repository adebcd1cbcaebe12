"""
Normalized plant interface used by the closed-loop simulator.

Controllers see normalized pressure y = P / P_base and an area deviation
u = (A_t - A_t,op) / A_base around the design operating point.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Protocol, Tuple

from pressurectl.plant.cats import (
    CatsPlant,
    area_to_theta,
    equilibrium_area,
    equilibrium_pressure,
    linearize_at,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlantNominal:
    """First-order nominal model b_p / (s - a_p) with input delay tau, in loop units."""
    a_p: float
    b_p: float
    tau: float = 0.0


class LoopPlant(Protocol):
    y_op: float

    def start(self, y0: float, dt_sim: float) -> float:
        """Settle at output y0 (absolute loop units); returns the matching u0."""

    def measure(self) -> float: ...

    def command(self, u: float) -> bool:
        """Latch control u (deviation units); True when the command saturated."""

    def advance(self, dt: float) -> None: ...

    def set_disturbance(self, d0: float) -> None: ...

    @property
    def u_limits(self) -> Optional[Tuple[float, float]]: ...

    def nominal(self) -> PlantNominal: ...


class CatsLoop:
    def __init__(self, plant: CatsPlant, pressure_base: float, area_base: float, design_pressure: float) -> None:
        self.plant = plant
        self.pressure_base = pressure_base
        self.area_base = area_base
        self.y_op = design_pressure
        self.P_op = design_pressure * pressure_base
        self.A_op = equilibrium_area(plant, self.P_op)
        self._theta_cmd = 0.0

    def start(self, y0: float, dt_sim: float) -> float:
        A0 = equilibrium_area(self.plant, y0 * self.pressure_base)
        theta0, sat = area_to_theta(self.plant.valve, A0)
        if sat:
            logger.warning("SAT start y0=%s needs A_t=%.4g mm^2 outside travel", y0, A0)
        P0 = equilibrium_pressure(self.plant, self.plant.effective_area(theta0))
        self.plant.start(P0, theta0, dt_sim)
        self._theta_cmd = theta0
        return (self.plant.valve.linear_area(theta0) - self.A_op) / self.area_base

    def measure(self) -> float:
        return self.plant.P / self.pressure_base

    def command(self, u: float) -> bool:
        cmd = area_to_theta(self.plant.valve, self.A_op + u * self.area_base)
        self._theta_cmd = cmd.theta
        return cmd.saturated

    def advance(self, dt: float) -> None:
        self.plant.step(self._theta_cmd, dt)

    def set_disturbance(self, d0: float) -> None:
        self.plant.d0 = d0

    @property
    def theta_cmd(self) -> float:
        return self._theta_cmd

    @property
    def u_limits(self) -> Tuple[float, float]:
        valve = self.plant.valve
        lo = (valve.linear_area(valve.theta_min) - self.A_op) / self.area_base
        hi = (valve.linear_area(valve.theta_max) - self.A_op) / self.area_base
        return lo, hi

    def nominal(self) -> PlantNominal:
        lin = linearize_at(self.plant, self.P_op, self.A_op)
        return PlantNominal(
            a_p=lin.a_p,
            b_p=lin.b_p * self.area_base / self.pressure_base,
            tau=lin.tau,
        )
