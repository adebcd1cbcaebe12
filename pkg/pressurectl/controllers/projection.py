import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProjectionConfig:
    """Convex ball ||Theta|| <= Theta_max with tolerance band epsilon."""
    theta_max: float
    epsilon: float = 0.1

    def __post_init__(self) -> None:
        if not self.theta_max > 0 or not self.epsilon > 0:
            raise ContractViolation(f"projection needs theta_max > 0 and epsilon > 0, got {self}")

    @property
    def hard_bound(self) -> float:
        return self.theta_max * math.sqrt(1.0 + self.epsilon)

    def f(self, theta: np.ndarray) -> float:
        tm2 = self.theta_max ** 2
        return (float(theta @ theta) - tm2) / (self.epsilon * tm2)

    def grad_f(self, theta: np.ndarray) -> np.ndarray:
        return 2.0 * theta / (self.epsilon * self.theta_max ** 2)


def project(theta: np.ndarray, y: np.ndarray, cfg: ProjectionConfig) -> np.ndarray:
    """
    Projection operator: inside the ball, or moving inward, y passes unchanged;
    otherwise the component along grad f is scaled by (1 - f).
    """
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)
    f = cfg.f(theta)
    if f <= 0.0:
        return y
    grad = cfg.grad_f(theta)
    outward = float(y @ grad)
    if outward <= 0.0:
        return y
    return y - grad * (outward / float(grad @ grad)) * f


def projected_update(theta: np.ndarray, rate: np.ndarray, dt: float, cfg: Optional[ProjectionConfig]) -> np.ndarray:
    """
    Forward-Euler step of theta' = Proj(theta, rate). A discrete step that still
    crosses the hard bound is pulled back radially onto it.
    """
    if cfg is None:
        return theta + dt * rate
    new = theta + dt * project(theta, rate, cfg)
    norm = float(np.linalg.norm(new))
    bound = cfg.hard_bound
    if norm > bound:
        logger.debug("PROJ_CLIP norm=%.6g bound=%.6g", norm, bound)
        new = new * (bound / norm)
    return new
