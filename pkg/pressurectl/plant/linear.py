import logging
from typing import Optional, Tuple

import numpy as np

from pressurectl.lintools.delay import DelayBuffer
from pressurectl.lintools.integrate import zoh_discretize
from pressurectl.lintools.transfer import RationalTransfer
from pressurectl.plant.loop import PlantNominal
from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)


class LinearDelayPlant:
    """
    y = W_p(s) [u(t - tau) + d0], advanced by the exact zero-order-hold step.

    Works in deviation units around zero, so y_op = 0.
    """

    y_op = 0.0

    def __init__(self, transfer: RationalTransfer, delay: float = 0.0,
                 u_limits: Optional[Tuple[float, float]] = None) -> None:
        if delay < 0:
            raise ContractViolation(f"delay must be >= 0, got {delay}")
        self.transfer = transfer
        self.delay = delay
        self.ss = transfer.to_state_space()
        self._u_limits = u_limits
        self.x = np.zeros(self.ss.n)
        self.d0 = 0.0
        self._u = 0.0
        self._phi: Optional[np.ndarray] = None
        self._gam: Optional[np.ndarray] = None
        self._buffer: Optional[DelayBuffer] = None
        self._lag = 0

    @classmethod
    def first_order(cls, a_p: float, b_p: float, delay: float = 0.0) -> "LinearDelayPlant":
        return cls(RationalTransfer.first_order(a_p, b_p), delay)

    def start(self, y0: float, dt_sim: float) -> float:
        A, b = self.ss.A, self.ss.b
        u0 = 0.0
        self.x = np.zeros(self.ss.n)
        if y0 != 0.0:
            if self.transfer.den[-1] == 0.0 or self.transfer.num[-1] == 0.0:
                raise ContractViolation(
                    f"plant has no finite nonzero DC gain; it can only start at y = 0, not {y0}")
            u0 = y0 / self.transfer.dc_gain()
            # equilibrium state for constant input u0
            self.x = -np.linalg.solve(A, b) * u0
        phi, gam = zoh_discretize(A, b, dt_sim)
        self._phi, self._gam = phi, gam[:, 0]
        self._lag = int(round(self.delay / dt_sim))
        self._buffer = DelayBuffer(max(self._lag, 1), dt_sim)
        self._buffer.prime(u0)
        self._u = u0
        return u0

    def measure(self) -> float:
        return float(self.ss.h @ self.x)

    def command(self, u: float) -> bool:
        if self._u_limits is not None:
            lo, hi = self._u_limits
            if u < lo or u > hi:
                self._u = min(max(u, lo), hi)
                return True
        self._u = u
        return False

    def advance(self, dt: float) -> None:
        if self._buffer is None:
            raise ContractViolation("LinearDelayPlant.start() must be called before advance()")
        if self._lag:
            applied = self._buffer.sample(self._lag)
            self._buffer.push(self._u)
        else:
            applied = self._u
        self.x = self._phi @ self.x + self._gam * (applied + self.d0)

    def set_disturbance(self, d0: float) -> None:
        self.d0 = d0

    @property
    def u_limits(self) -> Optional[Tuple[float, float]]:
        return self._u_limits

    def nominal(self) -> PlantNominal:
        if self.transfer.order != 1 or self.transfer.relative_degree != 1:
            raise ContractViolation("scalar nominal model needs a first-order plant")
        return PlantNominal(a_p=-self.transfer.den[1], b_p=self.transfer.gain, tau=self.delay)
