import logging
from typing import Optional, Union

import numpy as np

from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)

Sample = Union[float, np.ndarray]


class DelayBuffer:
    """
    Fixed-capacity history of a sampled signal.

    `sample(j)` returns the value pushed j pushes ago. Lags not written yet
    return the prefill value, which `prime()` sets to the signal's initial value.
    Vector signals are stored when `width` is given.
    """

    def __init__(self, capacity: int, dt: float, prefill: Sample = 0.0, width: Optional[int] = None) -> None:
        if capacity < 0:
            raise ContractViolation(f"DelayBuffer capacity must be >= 0, got {capacity}")
        if dt <= 0:
            raise ContractViolation(f"DelayBuffer dt must be > 0, got {dt}")
        self.capacity = int(capacity)
        self.dt = float(dt)
        self.width = width
        shape = (self.capacity,) if width is None else (self.capacity, width)
        self._ring = np.zeros(shape)
        self._head = 0
        self._count = 0
        self.prefill = self._coerce(prefill)

    def _coerce(self, value: Sample) -> Sample:
        if self.width is None:
            return float(value)
        arr = np.array(value, dtype=float).reshape(-1)
        if arr.size == 1 and self.width != 1:
            arr = np.full(self.width, arr[0])
        if arr.size != self.width:
            raise ContractViolation(f"DelayBuffer expects width {self.width}, got {arr.size}")
        return arr

    def prime(self, value: Sample) -> None:
        """Forget the history; every lag reads `value` until overwritten."""
        self.prefill = self._coerce(value)
        self._head = 0
        self._count = 0

    def push(self, value: Sample) -> None:
        if self.capacity == 0:
            return
        self._ring[self._head] = self._coerce(value)
        self._head = (self._head + 1) % self.capacity
        if self._count < self.capacity:
            self._count += 1

    def sample(self, lag_steps: int) -> Sample:
        if not 1 <= lag_steps <= self.capacity:
            raise ContractViolation(f"lag {lag_steps} outside 1..{self.capacity}")
        if lag_steps > self._count:
            return self.prefill if self.width is None else self.prefill.copy()
        value = self._ring[(self._head - lag_steps) % self.capacity]
        return float(value) if self.width is None else value.copy()

    def history(self) -> np.ndarray:
        """All lags 1..capacity, most recent first."""
        if self.width is None:
            return np.array([self.sample(j) for j in range(1, self.capacity + 1)], dtype=float)
        return np.array([self.sample(j) for j in range(1, self.capacity + 1)], dtype=float).reshape(self.capacity, self.width)

    @property
    def filled(self) -> bool:
        return self._count >= self.capacity

    @property
    def span(self) -> float:
        return self.capacity * self.dt


def delay_sample(buf: DelayBuffer, lag_steps: int) -> Sample:
    return buf.sample(lag_steps)


def steps_for(delay: float, dt: float, what: str = "delay") -> int:
    """Number of whole `dt` steps in `delay`; rejects delays that are not a multiple."""
    if delay < 0:
        raise ContractViolation(f"{what} must be >= 0, got {delay}")
    steps = int(round(delay / dt))
    if abs(steps * dt - delay) > 1e-9 * max(1.0, delay):
        raise ContractViolation(f"{what} {delay} s is not a multiple of {dt} s")
    return steps
