"""
Fixed-step integration and exact discretization helpers.

Everything here works on small dense numpy arrays; the matrix exponential is
scipy's scaling-and-squaring Pade implementation.
"""
import logging
from typing import Callable, Tuple

import numpy as np
from scipy.linalg import expm

from pressurectl.util.errors import ContractViolation, SimulationAbort

logger = logging.getLogger(__name__)

Derivative = Callable[[np.ndarray, float, float], np.ndarray]


def matrix_exp(A: np.ndarray, t: float) -> np.ndarray:
    """Return e^{A t}."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ContractViolation(f"matrix_exp needs a square matrix, got {A.shape}")
    return expm(A * t)


def rk4_step(derivative: Derivative, state: np.ndarray, u: float, t: float, dt: float) -> np.ndarray:
    """
    Classical 4th-order Runge-Kutta advance of `state` by `dt`, input held
    constant over the step.
    """
    if dt <= 0:
        raise ContractViolation(f"rk4_step needs dt > 0, got {dt}")
    x = np.asarray(state, dtype=float)
    k1 = derivative(x, u, t)
    k2 = derivative(x + 0.5 * dt * k1, u, t + 0.5 * dt)
    k3 = derivative(x + 0.5 * dt * k2, u, t + 0.5 * dt)
    k4 = derivative(x + dt * k3, u, t + dt)
    if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(k2))
            and np.all(np.isfinite(k3)) and np.all(np.isfinite(k4))):
        raise SimulationAbort(f"non-finite derivative at t={t:.6g} state={x.tolist()} input={u!r}")
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def zoh_discretize(A: np.ndarray, B: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact zero-order-hold discretization of x' = A x + B u.

    Returns (Phi, Gamma) with Phi = e^{A dt} and Gamma = int_0^dt e^{A s} ds B,
    both read off one augmented matrix exponential.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n, k = A.shape[0], B.shape[1]
    if B.shape[0] != n:
        raise ContractViolation(f"zoh_discretize: A is {A.shape}, B is {B.shape}")
    aug = np.zeros((n + k, n + k))
    aug[:n, :n] = A
    aug[:n, n:] = B
    E = expm(aug * dt)
    return E[:n, :n], E[:n, n:]


def integral_of_exp(A: np.ndarray, t0: float, t1: float) -> np.ndarray:
    """int_{t0}^{t1} e^{A s} ds, exact."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    _, cell = zoh_discretize(A, np.eye(n), t1 - t0)
    return matrix_exp(A, t0) @ cell
