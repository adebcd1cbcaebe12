"""
Input/output signal generators for the general-order controllers:

    w1' = F w1 + g u_in,    w2' = F w2 + g y_p

F is the companion matrix of a monic Hurwitz polynomial and g = e_1, so
(sI - F)^{-1} g = [s^{k-1}, ..., s, 1]^T / det(sI - F).
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from pressurectl.lintools.integrate import rk4_step
from pressurectl.lintools.transfer import StateSpaceSiso
from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)


def companion(poly: Sequence[float]) -> np.ndarray:
    """Controllable-canonical companion matrix of a monic polynomial (descending)."""
    p = np.asarray(poly, dtype=float)
    if p.size == 0 or p[0] != 1.0:
        raise ContractViolation(f"companion needs a monic polynomial, got {p.tolist()}")
    k = p.size - 1
    F = np.zeros((k, k))
    if k:
        F[0, :] = -p[1:]
        F[1:, :-1] = np.eye(k - 1)
    return F


@dataclass
class SignalGenerators:
    F: np.ndarray
    g: np.ndarray
    w1: np.ndarray = field(default=None)
    w2: np.ndarray = field(default=None)
    faster_than: Optional[float] = None

    def __post_init__(self) -> None:
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float)) if np.size(self.F) else np.zeros((0, 0))
        self.g = np.asarray(self.g, dtype=float).reshape(-1)
        k = self.g.size
        if self.F.shape != (k, k):
            raise ContractViolation(f"generator F is {self.F.shape}, g has {k} entries")
        self.w1 = np.zeros(k) if self.w1 is None else np.asarray(self.w1, dtype=float).reshape(k)
        self.w2 = np.zeros(k) if self.w2 is None else np.asarray(self.w2, dtype=float).reshape(k)
        if k == 0:
            return
        ss = StateSpaceSiso(self.F, self.g, np.zeros(k))
        if not ss.is_hurwitz():
            raise ContractViolation(f"generator matrix F is not Hurwitz: eig={np.linalg.eigvals(self.F).tolist()}")
        if ss.controllability_rank() != k:
            raise ContractViolation("(F, g) is not controllable")
        if self.faster_than is not None:
            slowest = float(np.max(np.linalg.eigvals(self.F).real))
            if not slowest < self.faster_than:
                raise ContractViolation(
                    f"generator eigenvalues must be faster than the reference model: "
                    f"max Re eig F = {slowest:.6g} >= {self.faster_than:.6g}")

    @classmethod
    def from_poly(cls, poly: Sequence[float], faster_than: Optional[float] = None) -> "SignalGenerators":
        F = companion(poly)
        g = np.zeros(F.shape[0])
        if g.size:
            g[0] = 1.0
        return cls(F, g, faster_than=faster_than)

    @property
    def order(self) -> int:
        return self.g.size

    def char_poly(self) -> np.ndarray:
        return np.poly(self.F) if self.order else np.array([1.0])

    def settle(self, u_in: float, y_p: float) -> None:
        """Place both generators at their equilibrium for constant inputs."""
        if self.order == 0:
            return
        base = -np.linalg.solve(self.F, self.g)
        self.w1 = base * u_in
        self.w2 = base * y_p


def generators_step(gens: SignalGenerators, u_in: float, y_p: float, dt: float) -> SignalGenerators:
    """Advance (w1, w2) by one RK4 step with u_in and y_p held."""
    k = gens.order
    if k == 0:
        return gens
    F, g = gens.F, gens.g

    def derivative(x: np.ndarray, _u: float, _t: float) -> np.ndarray:
        return np.concatenate((F @ x[:k] + g * u_in, F @ x[k:] + g * y_p))

    x = rk4_step(derivative, np.concatenate((gens.w1, gens.w2)), u_in, 0.0, dt)
    gens.w1, gens.w2 = x[:k], x[k:]
    return gens
