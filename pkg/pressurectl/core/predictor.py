"""
Finite-horizon state predictor for the delayed generator pair.

With the plant output written as y = c^T w1 + d^T w2, the stacked state
w = [w1; w2] obeys w' = A w + b u(t - tau) with

    A = [[F, 0], [g c^T, F + g d^T]],   b = [g; 0]

and its value one delay ahead is

    w(t + tau) = e^{A tau} w(t) + int_0^tau e^{A s} b u(t - s) ds.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from pressurectl.lintools.delay import DelayBuffer
from pressurectl.lintools.integrate import integral_of_exp, matrix_exp
from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)


class Prediction(NamedTuple):
    w1: np.ndarray
    w2: np.ndarray
    warm_up: bool


@dataclass
class PredictorMatrices:
    A: np.ndarray
    b: np.ndarray
    tau: float
    dt: float

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        n2 = self.A.shape[0]
        if self.A.shape != (n2, n2) or self.b.size != n2 or n2 % 2:
            raise ContractViolation(f"predictor needs a square even-sized A and matching b, got {self.A.shape}, {self.b.shape}")
        m = int(round(self.tau / self.dt))
        if abs(m * self.dt - self.tau) > 1e-9 * max(1.0, self.tau):
            raise ContractViolation(f"predictor horizon {self.tau} s is not a multiple of dt={self.dt} s")
        self.m = m
        self.e_tau = matrix_exp(self.A, self.tau)
        # kernel samples e^{A s} b at s = j dt, j = 0..m
        self.kernel = np.array([matrix_exp(self.A, j * self.dt) @ self.b for j in range(m + 1)])

    @classmethod
    def from_generators(cls, F: np.ndarray, g: np.ndarray, c: Sequence[float], d: Sequence[float],
                        tau: float, dt: float) -> "PredictorMatrices":
        F = np.atleast_2d(np.asarray(F, dtype=float))
        g = np.asarray(g, dtype=float).reshape(-1)
        c = np.asarray(c, dtype=float).reshape(-1)
        d = np.asarray(d, dtype=float).reshape(-1)
        k = g.size
        A = np.zeros((2 * k, 2 * k))
        A[:k, :k] = F
        A[k:, :k] = np.outer(g, c)
        A[k:, k:] = F + np.outer(g, d)
        return cls(A, np.concatenate((g, np.zeros(k))), tau, dt)

    @property
    def half(self) -> int:
        return self.A.shape[0] // 2

    def zoh_weights(self) -> np.ndarray:
        """Exact cell integrals int_{(i-1)dt}^{i dt} e^{A s} ds b, one row per i = 1..m."""
        return np.array([integral_of_exp(self.A, (i - 1) * self.dt, i * self.dt) @ self.b
                         for i in range(1, self.m + 1)]).reshape(self.m, self.A.shape[0])


def predict_future(pred: PredictorMatrices, w1: np.ndarray, w2: np.ndarray,
                   u_history: DelayBuffer, u_now: float) -> Prediction:
    """
    Trapezoidal evaluation of the prediction integral on the m + 1 nodes
    s = j dt, with u(t) = u_now and u(t - j dt) read from the history.
    """
    k = pred.half
    w = np.concatenate((np.asarray(w1, dtype=float).reshape(k), np.asarray(w2, dtype=float).reshape(k)))
    if u_history.capacity < pred.m:
        raise ContractViolation(f"input history holds {u_history.capacity} samples, predictor needs {pred.m}")
    warm_up = not u_history.filled
    if warm_up:
        logger.debug("PREDICT warm-up: history has not covered the %.3g s horizon yet", pred.tau)
    out = pred.e_tau @ w
    if pred.m:
        u = np.concatenate(([u_now], [u_history.sample(j) for j in range(1, pred.m + 1)]))
        weights = np.full(pred.m + 1, pred.dt)
        weights[0] = weights[-1] = 0.5 * pred.dt
        out = out + (weights * u) @ pred.kernel
    return Prediction(out[:k], out[k:], warm_up)
