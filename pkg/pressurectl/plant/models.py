"""
Physical parameter sets of the cold-air test setup.

Units: pressure Pa, area mm^2, lengths mm, pintle position in quadrature
counts (4000 qc per motor turn), mass flow kg/s.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from pressurectl.lintools.delay import DelayBuffer
from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)

QC_PER_TURN = 4000.0
MM2_TO_M2 = 1e-6


def characteristic_velocity(gamma: float, R: float, T: float) -> float:
    """c* of a calorically perfect gas through a choked throat [m/s]."""
    if gamma <= 1.0 or R <= 0 or T <= 0:
        raise ContractViolation(f"invalid gas properties gamma={gamma} R={R} T={T}")
    return math.sqrt(R * T / gamma) * ((gamma + 1.0) / 2.0) ** ((gamma + 1.0) / (2.0 * (gamma - 1.0)))


@dataclass(frozen=True)
class GasParams:
    R_specific: float = 296.8
    T: float = 293.0
    V: float = 0.05
    gamma: float = 1.4
    c_star: Optional[float] = None

    def __post_init__(self) -> None:
        if self.c_star is None:
            object.__setattr__(self, "c_star", characteristic_velocity(self.gamma, self.R_specific, self.T))
        for name in ("R_specific", "T", "V", "gamma", "c_star"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"GasParams.{name} must be > 0")

    @property
    def c1(self) -> float:
        return self.R_specific * self.T / self.V

    @property
    def c2(self) -> float:
        return self.c1 / self.c_star


def mass_flow_out(P: float, A_t: float, gas: GasParams) -> float:
    return P * A_t * MM2_TO_M2 / gas.c_star


@dataclass(frozen=True)
class InflowPolynomial:
    """Inflow mass-flow rate M(P) = c3 P^3 + c4 P^2 + c5 P + c6 [kg/s], P in Pa."""
    c3: float = 0.0
    c4: float = 0.0
    c5: float = 0.0
    c6: float = 0.0

    @property
    def coeffs(self) -> Tuple[float, float, float, float]:
        return (self.c3, self.c4, self.c5, self.c6)

    def __call__(self, P: float) -> float:
        return ((self.c3 * P + self.c4) * P + self.c5) * P + self.c6

    def derivative(self, P: float) -> float:
        return (3.0 * self.c3 * P + 2.0 * self.c4) * P + self.c5

    def is_positive_over(self, p_lo: float, p_hi: float, samples: int = 200) -> bool:
        grid = np.linspace(p_lo, p_hi, samples)
        return bool(np.all(np.polyval(self.coeffs, grid) > 0.0))


@dataclass(frozen=True)
class ValveGeometry:
    r0: float = 21.0
    y0: float = 20.0
    alpha: float = math.radians(15.0)
    R1: float = 66.0
    R2: float = 1.0
    theta_min: float = 0.0
    theta_max: float = 1.3e6
    eps_min: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.y0 < self.r0:
            raise ContractViolation(f"pintle radius y0={self.y0} must be in (0, r0={self.r0})")
        if not 0 < self.alpha < math.pi / 2:
            raise ContractViolation("half cone angle must be in (0, pi/2)")
        if self.R1 <= 0 or self.R2 <= 0:
            raise ContractViolation("drive-train ratios must be > 0")
        if self.theta_max <= self.theta_min:
            raise ContractViolation("theta_max must exceed theta_min")
        if not 0 < self.eps_min <= 1.0:
            raise ContractViolation("eps_min must be in (0, 1]")

    @property
    def travel_per_qc(self) -> float:
        """Pintle-radius change per quadrature count [mm/qc]."""
        return math.tan(self.alpha) * self.R2 / (self.R1 * QC_PER_TURN)

    @property
    def a1(self) -> float:
        return self.r0 ** 2 - self.y0 ** 2

    @property
    def a2(self) -> float:
        return 2.0 * self.y0 * self.travel_per_qc

    @property
    def a3(self) -> float:
        return -self.travel_per_qc ** 2

    @property
    def area_floor(self) -> float:
        return self.a1 * math.pi * self.eps_min

    def area(self, theta: float) -> float:
        """Valve polynomial without the travel check, floored at the annulus minimum."""
        return max((self.a1 + (self.a2 + self.a3 * theta) * theta) * math.pi, self.area_floor)

    def linear_area(self, theta: float) -> float:
        return (self.a1 + self.a2 * theta) * math.pi


@dataclass
class ActuatorModel:
    """First-order lag with pure command delay; state in quadrature counts."""
    tau_act: float = 0.05
    delay: float = 0.3
    theta_mes: float = 0.0
    delay_steps: int = 0
    _buffer: Optional[DelayBuffer] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.tau_act <= 0:
            raise ContractViolation(f"tau_act must be > 0, got {self.tau_act}")
        if self.delay < 0:
            raise ContractViolation(f"actuator delay must be >= 0, got {self.delay}")

    def reset(self, theta0: float, dt: float) -> None:
        steps = int(round(self.delay / dt))
        if abs(steps * dt - self.delay) > 1e-12:
            logger.debug("ACT_DELAY_QUANTIZED delay=%s dt=%s steps=%d", self.delay, dt, steps)
        self.delay_steps = steps
        self.theta_mes = float(theta0)
        self._buffer = DelayBuffer(max(steps, 1), dt)
        self._buffer.prime(float(theta0))

    def delayed(self, theta_cmd: float) -> float:
        """Command seen by the drive after the transport delay; records `theta_cmd`."""
        if self._buffer is None:
            raise ContractViolation("ActuatorModel.reset() must be called before use")
        if self.delay_steps == 0:
            return float(theta_cmd)
        applied = self._buffer.sample(self.delay_steps)
        self._buffer.push(theta_cmd)
        return applied

    def rate(self, theta_mes: float, theta_applied: float) -> float:
        return (theta_applied - theta_mes) / self.tau_act
