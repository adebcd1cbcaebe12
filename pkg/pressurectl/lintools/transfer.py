"""
SISO transfer functions, state-space realizations and the SPR check.

Polynomials are stored in descending degree, monic, with the gain factored
out: W(s) = gain * Z(s) / R(s).
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from pressurectl.util.errors import ContractViolation

logger = logging.getLogger(__name__)


def _trim(coeffs: Sequence[float]) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(coeffs, dtype=float))
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    # leading round-off from ss2tf counts as zero
    nz = np.flatnonzero(np.abs(arr) > 1e-12 * scale)
    if nz.size == 0:
        return np.array([0.0])
    return arr[nz[0]:]


@dataclass(frozen=True)
class RationalTransfer:
    gain: float
    num: Tuple[float, ...]
    den: Tuple[float, ...]

    def __post_init__(self) -> None:
        num = tuple(float(c) for c in self.num)
        den = tuple(float(c) for c in self.den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if not num or not den:
            raise ContractViolation("numerator and denominator must be non-empty")
        if num[0] != 1.0 or den[0] != 1.0:
            raise ContractViolation(f"polynomials must be monic, got num[0]={num[0]} den[0]={den[0]}")
        if len(num) > len(den):
            raise ContractViolation(f"improper transfer function: deg num {len(num) - 1} > deg den {len(den) - 1}")

    @classmethod
    def from_coeffs(cls, num: Sequence[float], den: Sequence[float]) -> "RationalTransfer":
        """Build from raw descending coefficients, factoring the gain out."""
        n = _trim(num)
        d = _trim(den)
        if d[0] == 0.0:
            raise ContractViolation("denominator is identically zero")
        if n[0] == 0.0:
            return cls(0.0, (1.0,), tuple(d / d[0]))
        return cls(float(n[0] / d[0]), tuple(n / n[0]), tuple(d / d[0]))

    @classmethod
    def first_order(cls, a: float, b: float) -> "RationalTransfer":
        """b / (s - a)."""
        return cls(float(b), (1.0,), (1.0, -float(a)))

    @property
    def order(self) -> int:
        return len(self.den) - 1

    @property
    def relative_degree(self) -> int:
        return len(self.den) - len(self.num)

    def evaluate(self, s: complex) -> complex:
        return self.gain * np.polyval(self.num, s) / np.polyval(self.den, s)

    def frequency_response(self, omega: np.ndarray) -> np.ndarray:
        jw = 1j * np.asarray(omega, dtype=float)
        return self.gain * np.polyval(self.num, jw) / np.polyval(self.den, jw)

    def poles(self) -> np.ndarray:
        # np.roots takes the eigenvalues of the companion matrix
        if self.order == 0:
            return np.array([], dtype=complex)
        return np.roots(self.den)

    def zeros(self) -> np.ndarray:
        if len(self.num) == 1:
            return np.array([], dtype=complex)
        return np.roots(self.num)

    def dc_gain(self) -> float:
        return float(self.gain * self.num[-1] / self.den[-1])

    def to_state_space(self) -> "StateSpaceSiso":
        """Controllable canonical realization (scipy tf2ss); strictly proper only."""
        if self.relative_degree < 1:
            raise ContractViolation("only strictly proper transfer functions have a (A, b, h) realization")
        A, B, C, D = signal.tf2ss(self.gain * np.asarray(self.num), np.asarray(self.den))
        return StateSpaceSiso(A, B[:, 0], C[0, :])


class StateSpaceSiso:
    """x' = A x + b u, y = h^T x."""

    def __init__(self, A, b, h) -> None:
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        self.h = np.asarray(h, dtype=float).reshape(-1)
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.b.shape != (n,) or self.h.shape != (n,):
            raise ContractViolation(
                f"inconsistent dimensions A{self.A.shape} b{self.b.shape} h{self.h.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def char_poly(self) -> np.ndarray:
        return np.poly(self.A) if self.n else np.array([1.0])

    def transfer(self) -> RationalTransfer:
        num, den = signal.ss2tf(self.A, self.b.reshape(-1, 1), self.h.reshape(1, -1), np.zeros((1, 1)))
        return RationalTransfer.from_coeffs(num[0], den)

    def controllability_rank(self) -> int:
        if self.n == 0:
            return 0
        cols = [self.b]
        for _ in range(self.n - 1):
            cols.append(self.A @ cols[-1])
        return int(np.linalg.matrix_rank(np.column_stack(cols)))

    def is_hurwitz(self) -> bool:
        return self.n == 0 or bool(np.max(np.linalg.eigvals(self.A).real) < 0.0)


@dataclass(frozen=True)
class SprCheck:
    ok: bool
    reason: str = ""
    frequency: float = math.nan


def default_spr_grid(points: int = 1000) -> np.ndarray:
    return np.logspace(-3.0, 3.0, points)


def spr_violation(tf: RationalTransfer, freq_grid: Optional[Sequence[float]] = None) -> SprCheck:
    """
    Sampled SPR test: stable poles, relative degree 0 or 1, and Re{W(jw)} > 0
    on every grid frequency. A passing grid is a sufficient sampled check, not
    a proof.
    """
    grid = default_spr_grid() if freq_grid is None else np.asarray(freq_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ContractViolation("SPR frequency grid must be non-empty and positive")
    if grid.min() > 1e-3 or grid.max() < 1e3:
        raise ContractViolation("SPR frequency grid must span at least [1e-3, 1e3] rad/s")
    if tf.relative_degree not in (0, 1):
        return SprCheck(False, f"relative degree {tf.relative_degree} not in {{0, 1}}")
    poles = tf.poles()
    if poles.size and np.max(poles.real) >= 0.0:
        worst = poles[np.argmax(poles.real)]
        return SprCheck(False, f"pole {worst:.6g} not in the open left half plane")
    re = tf.frequency_response(np.sort(grid)).real
    bad = np.flatnonzero(re <= 0.0)
    if bad.size:
        w = float(np.sort(grid)[bad[0]])
        return SprCheck(False, f"Re W(jw) = {re[bad[0]]:.6g} <= 0", w)
    return SprCheck(True)


def is_spr(tf: RationalTransfer, freq_grid: Optional[Sequence[float]] = None) -> bool:
    return spr_violation(tf, freq_grid).ok
