"""
General-order (relative degree one) output-feedback adaptive control.

MRAC / CRM:  u = theta0 y_p + theta1^T w1 + theta2^T w2 + theta_r r
DR-CRM:      u = alpha1^T w1 + alpha2^T w2 + sum_i phi_i u(t - i dt) dt + k r

For n = 1 the output is the whole plant state: the generators are empty, y
itself takes their place in the DR-CRM law and the nominal parameters come
from the exact sampled matching of the scalar law (phi_i dt = lambda_i).

The nominal parameters solve the polynomial matching identities as small
linear systems; the adaptive laws are the same projected gradient laws as
the scalar controllers, without the constant-offset parameter.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from pressurectl.controllers.design import adaptation_rate, discrete_matching
from pressurectl.controllers.projection import ProjectionConfig, projected_update
from pressurectl.core.generators import SignalGenerators, generators_step
from pressurectl.core.predictor import PredictorMatrices
from pressurectl.lintools.delay import DelayBuffer, steps_for
from pressurectl.lintools.integrate import integral_of_exp, zoh_discretize
from pressurectl.lintools.transfer import RationalTransfer, StateSpaceSiso, spr_violation
from pressurectl.util.errors import ContractViolation, DesignGateError, SimulationAbort, SprGateError

logger = logging.getLogger(__name__)

GENERAL_MODES = ("mrac", "crm", "drcrm")


def _as_column(poly: np.ndarray, size: int) -> np.ndarray:
    p = np.atleast_1d(np.asarray(poly, dtype=float))
    if p.size > size:
        head = p[:p.size - size]
        if np.any(np.abs(head) > 1e-9 * max(1.0, float(np.max(np.abs(p))))):
            raise ContractViolation(f"polynomial {p.tolist()} exceeds degree {size - 1}")
        p = p[p.size - size:]
    return np.concatenate((np.zeros(size - p.size), p))


def _solve_identity(columns: List[np.ndarray], rhs: np.ndarray, size: int, what: str) -> np.ndarray:
    M = np.column_stack([_as_column(c, size) for c in columns])
    b = _as_column(rhs, size)
    x, *_ = np.linalg.lstsq(M, b, rcond=None)
    residual = float(np.max(np.abs(M @ x - b))) if size else 0.0
    if residual > 1e-8 * max(1.0, float(np.max(np.abs(b))) if size else 1.0):
        raise DesignGateError(f"{what} matching identity has no exact solution (residual {residual:.3g})")
    return x


def _monomials(k: int) -> List[np.ndarray]:
    """s^{k-1}, ..., s, 1 as descending coefficient arrays."""
    return [np.concatenate(([1.0], np.zeros(k - 1 - i))) for i in range(k)]


def _check_relative_degree_one(tf: RationalTransfer, what: str) -> None:
    if tf.relative_degree != 1:
        raise DesignGateError(f"{what} must have relative degree 1, got {tf.relative_degree}")


@dataclass(frozen=True)
class MracMatching:
    theta: np.ndarray            # (theta0, theta1, theta2, theta_r)
    generator_poly: np.ndarray


@dataclass(frozen=True)
class DrcrmMatching:
    theta: np.ndarray            # (alpha1, alpha2, phi_1..phi_m, k)
    beta1: np.ndarray
    beta2: np.ndarray
    k: float
    c: np.ndarray
    d: np.ndarray
    predictor: PredictorMatrices


def mrac_matching(plant_tf: RationalTransfer, ref_tf: RationalTransfer,
                  Lambda: Optional[Sequence[float]] = None) -> MracMatching:
    """
    Solve (Lambda - theta1^T a) R_p - k_p Z_p (theta2^T a + theta0 Lambda) = Z_p R_m
    with Lambda = Z_m and theta_r = k_m / k_p.
    """
    _check_relative_degree_one(plant_tf, "plant model")
    _check_relative_degree_one(ref_tf, "reference model")
    n = plant_tf.order
    if ref_tf.order != n:
        raise DesignGateError(f"reference model order {ref_tf.order} differs from plant order {n}")
    Zp, Rp, kp = np.array(plant_tf.num), np.array(plant_tf.den), plant_tf.gain
    Zm, Rm = np.array(ref_tf.num), np.array(ref_tf.den)
    lam = Zm if Lambda is None else np.asarray(Lambda, dtype=float)
    if lam.shape != Zm.shape or not np.allclose(lam, Zm, rtol=1e-9, atol=1e-12):
        raise DesignGateError("for relative degree one the generator polynomial must equal the reference-model zeros")
    k = n - 1
    cols = ([np.polymul(a, Rp) for a in _monomials(k)]
            + [kp * np.polymul(a, Zp) for a in _monomials(k)]
            + [kp * np.polymul(lam, Zp)])
    rhs = np.polysub(np.polymul(lam, Rp), np.polymul(Zp, Rm))
    x = _solve_identity(cols, rhs, 2 * n - 1, "MRAC")
    theta1, theta2, theta0 = x[:k], x[k:2 * k], x[2 * k]
    theta = np.concatenate(([theta0], theta1, theta2, [ref_tf.gain / kp]))
    return MracMatching(theta, lam)


def output_combination(plant_tf: RationalTransfer, gens: SignalGenerators) -> Tuple[np.ndarray, np.ndarray]:
    """c, d with y = c^T w1 + d^T w2 for generators driven by the plant's own input."""
    n = plant_tf.order
    if gens.order != n:
        raise ContractViolation(f"output combination needs order-{n} generators, got {gens.order}")
    lam = gens.char_poly()
    c = _as_column(plant_tf.gain * np.array(plant_tf.num), n)
    d = _as_column(np.polysub(lam, np.array(plant_tf.den)), n)
    return c, d


def drcrm_generator_poly(ref_tf: RationalTransfer, lambda0: float) -> np.ndarray:
    """(s + lambda0) Z_m(s), the order-n generator polynomial for the delayed design."""
    return np.polymul([1.0, lambda0], np.array(ref_tf.num))


def drcrm_matching(plant_tf: RationalTransfer, ref_tf: RationalTransfer, gens: SignalGenerators,
                   tau: float, dt: float) -> DrcrmMatching:
    """
    Delay-free matching (Lambda - beta1^T a) R_p - k_p Z_p beta2^T a = Z_p Lambda0 R_m,
    then moved one delay ahead through the predictor:
    alpha = beta^T e^{A tau} and phi_i dt = beta^T int_cell e^{A s} ds b.
    """
    _check_relative_degree_one(plant_tf, "plant model")
    _check_relative_degree_one(ref_tf, "reference model")
    n = plant_tf.order
    if ref_tf.order != n:
        raise DesignGateError(f"reference model order {ref_tf.order} differs from plant order {n}")
    lam = gens.char_poly()
    Zm = np.array(ref_tf.num)
    lam0, rem = np.polydiv(lam, Zm)
    if lam0.size != 2 or np.any(np.abs(rem) > 1e-9 * max(1.0, float(np.max(np.abs(lam))))):
        raise DesignGateError("generator polynomial must be (s + lambda0) times the reference-model zeros")
    Zp, Rp, kp = np.array(plant_tf.num), np.array(plant_tf.den), plant_tf.gain
    cols = ([np.polymul(a, Rp) for a in _monomials(n)]
            + [kp * np.polymul(a, Zp) for a in _monomials(n)])
    rhs = np.polysub(np.polymul(lam, Rp), np.polymul(np.polymul(Zp, lam0), np.array(ref_tf.den)))
    x = _solve_identity(cols, rhs, 2 * n, "DR-CRM")
    beta1, beta2 = x[:n], x[n:]
    k = ref_tf.gain / kp
    c, d = output_combination(plant_tf, gens)
    pred = PredictorMatrices.from_generators(gens.F, gens.g, c, d, tau, dt)
    beta = np.concatenate((beta1, beta2))
    alpha = beta @ pred.e_tau
    phi = (pred.zoh_weights() @ beta) / dt if pred.m else np.zeros(0)
    theta = np.concatenate((alpha, phi, [k]))
    return DrcrmMatching(theta, beta1, beta2, k, c, d, pred)


def drcrm_first_order_matching(plant_tf: RationalTransfer, ref_tf: RationalTransfer, dt: float, m: int) -> np.ndarray:
    """(alpha_y, phi_1..phi_m, k) placing the sampled first-order plant on the sampled reference model."""
    if plant_tf.order != 1 or ref_tf.order != 1:
        raise DesignGateError("first-order DR-CRM matching needs first-order plant and reference models")
    theta = discrete_matching(-plant_tf.den[-1], plant_tf.gain, -ref_tf.den[-1], dt, m)
    theta[1:-1] /= dt
    theta[-1] *= ref_tf.dc_gain()
    return theta


def _drcrm_regressors(gens: SignalGenerators, y_p: float, past: np.ndarray, r: float,
                      dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Control vector (history scaled by dt) and adaptation regressor."""
    states = np.concatenate((gens.w1, gens.w2)) if gens.order else np.array([y_p])
    return np.concatenate((states, past * dt, [r])), np.concatenate((states, past, [r]))


class GeneralRefModel:
    """
    x_m' = A_m x_m + b_m r(t - tau) + L e1, y_m = h_m^T x_m.

    Open-loop part by exact zero-order hold, then the closed-loop correction
    x_m += int_0^dt e^{-L h^T s} ds L e1 with e1 held. L = 0 leaves the
    open-loop update untouched.
    """

    def __init__(self, ref_tf: RationalTransfer, L: Optional[Sequence[float]] = None,
                 delay_steps: int = 0, dt: float = 0.05) -> None:
        self.transfer = ref_tf
        self.ss = ref_tf.to_state_space()
        n = self.ss.n
        self.L = np.zeros(n) if L is None else np.asarray(L, dtype=float).reshape(n)
        self.dt = dt
        self.delay_steps = delay_steps
        self.x = np.zeros(n)
        phi, gam = zoh_discretize(self.ss.A, self.ss.b, dt)
        self._phi, self._gam = phi, gam[:, 0]
        self._k_l = integral_of_exp(-np.outer(self.L, self.ss.h), 0.0, dt) @ self.L
        self._r_hist = DelayBuffer(delay_steps, dt) if delay_steps > 0 else None

    @property
    def y_m(self) -> float:
        return float(self.ss.h @ self.x)

    def error_transfer(self) -> RationalTransfer:
        closed = StateSpaceSiso(self.ss.A - np.outer(self.L, self.ss.h), self.ss.b, self.ss.h)
        return closed.transfer()

    def prime(self, r: float, y_m: float) -> None:
        dc = self.transfer.dc_gain()
        self.x = -np.linalg.solve(self.ss.A, self.ss.b) * (y_m / dc) if y_m else np.zeros(self.ss.n)
        if self._r_hist is not None:
            self._r_hist.prime(r)

    def advance(self, r: float, e1: float) -> float:
        r_d = r
        if self._r_hist is not None:
            r_d = self._r_hist.sample(self.delay_steps)
            self._r_hist.push(r)
        self.x = self._phi @ self.x + self._gam * r_d + self._k_l * e1
        return self.y_m


@dataclass
class GeneralAdaptiveState:
    mode: str
    theta: np.ndarray
    gamma: np.ndarray
    ref: GeneralRefModel
    sign_kp: int = 1
    dt: float = 0.05
    m: int = 0
    projection: Optional[ProjectionConfig] = None
    u_limits: Optional[Tuple[float, float]] = None
    u_history: Optional[DelayBuffer] = field(default=None, repr=False)
    reg_history: Optional[DelayBuffer] = field(default=None, repr=False)
    saturated: bool = False

    def __post_init__(self) -> None:
        if self.mode not in GENERAL_MODES:
            raise ContractViolation(f"unknown general mode '{self.mode}'")
        self.theta = np.asarray(self.theta, dtype=float).copy()
        self.gamma = np.asarray(self.gamma, dtype=float).copy()
        if self.theta.shape != self.gamma.shape:
            raise ContractViolation(f"theta {self.theta.shape} and gamma {self.gamma.shape} differ in shape")
        if np.any(self.gamma < 0):
            raise ContractViolation("adaptation rates must be >= 0")
        if self.sign_kp not in (-1, 1):
            raise ContractViolation(f"sign_kp must be -1 or 1, got {self.sign_kp}")
        if self.mode == "drcrm":
            if self.ref.delay_steps != self.m:
                raise ContractViolation(
                    f"reference delay ({self.ref.delay_steps} steps) differs from the regressor lag ({self.m} steps)")
            if self.u_history is None:
                self.u_history = DelayBuffer(self.m, self.dt)
            if self.reg_history is None:
                self.reg_history = DelayBuffer(self.m, self.dt, width=self.theta.size)
            if self.reg_history.capacity != self.m:
                raise ContractViolation("adaptation regressor lag must equal the compensated delay")

    def emit(self, omega: np.ndarray) -> float:
        u = float(self.theta @ omega)
        if not math.isfinite(u):
            raise SimulationAbort(f"general {self.mode} control is not finite (theta={self.theta.tolist()})")
        self.saturated = False
        if self.u_limits is not None:
            lo, hi = self.u_limits
            if u < lo or u > hi:
                logger.debug("SAT mode=%s u=%.6g limits=(%.6g, %.6g)", self.mode, u, lo, hi)
                u = min(max(u, lo), hi)
                self.saturated = True
        return u

    def adapt(self, e1: float, regressor: np.ndarray, dt: float) -> None:
        rate = -self.sign_kp * self.gamma * e1 * regressor
        self.theta = projected_update(self.theta, rate, dt, self.projection)


def mrac_general_step(state: GeneralAdaptiveState, gens: SignalGenerators, y_p: float, r: float, dt: float) -> float:
    if state.mode not in ("mrac", "crm"):
        raise ContractViolation(f"mrac_general_step needs MRAC or CRM, got {state.mode}")
    if not (math.isfinite(y_p) and math.isfinite(r)):
        raise SimulationAbort(f"non-finite input y_p={y_p!r} r={r!r}")
    e1 = y_p - state.ref.y_m
    omega = np.concatenate(([y_p], gens.w1, gens.w2, [r]))
    u = state.emit(omega)
    state.adapt(e1, omega, dt)
    state.ref.advance(r, e1)
    generators_step(gens, u, y_p, dt)
    return u


def drcrm_general_step(state: GeneralAdaptiveState, gens: SignalGenerators, y_p: float, r: float, dt: float) -> float:
    if state.mode != "drcrm":
        raise ContractViolation(f"drcrm_general_step needs DRCRM, got {state.mode}")
    if not (math.isfinite(y_p) and math.isfinite(r)):
        raise SimulationAbort(f"non-finite input y_p={y_p!r} r={r!r}")
    m = state.m
    e1 = y_p - state.ref.y_m
    control, regressor = _drcrm_regressors(gens, y_p, state.u_history.history(), r, dt)
    u = state.emit(control)
    if m:
        lagged = state.reg_history.sample(m)
        state.reg_history.push(regressor)
        u_delayed = state.u_history.sample(m)
    else:
        lagged = regressor
        u_delayed = u
    state.adapt(e1, lagged, dt)
    state.ref.advance(r, e1)
    generators_step(gens, u_delayed, y_p, dt)
    state.u_history.push(u)
    return u


def design_general(
    plant_tf: RationalTransfer,
    ref_tf: RationalTransfer,
    mode: str,
    tau: float = 0.0,
    dt: float = 0.05,
    L: Optional[Sequence[float]] = None,
    ell: Optional[float] = None,
    lambda0: Optional[float] = None,
    gamma: Union[None, float, Sequence[float]] = None,
    projection_margin: Optional[float] = 1.0,
    epsilon: float = 0.1,
    u_limits: Optional[Tuple[float, float]] = None,
) -> Tuple[GeneralAdaptiveState, SignalGenerators]:
    """
    Nominal parameters, rates and reference model for a general-order plant.

    The CRM gain defaults to L = ell b_m / (h_m^T b_m) with ell = ||gamma||.
    Raises SprGateError when W_m (MRAC) or W_e (CRM, DR-CRM) is not SPR.
    """
    if mode not in GENERAL_MODES:
        raise DesignGateError(f"unknown general mode '{mode}'")
    if plant_tf.gain == 0:
        raise DesignGateError("plant high-frequency gain k_p must be non-zero")
    _check_relative_degree_one(plant_tf, "plant model")
    _check_relative_degree_one(ref_tf, "reference model")
    slowest = float(np.max(ref_tf.poles().real))
    if not slowest < 0:
        raise DesignGateError(f"reference model is not stable (pole real part {slowest:.6g})")
    tau_m = -1.0 / slowest

    m = 0
    if mode == "drcrm":
        try:
            m = steps_for(tau, dt, "compensated delay")
        except ContractViolation as exc:
            raise DesignGateError(str(exc)) from exc
        if plant_tf.order == 1:
            gens = SignalGenerators.from_poly([1.0])
            theta = drcrm_first_order_matching(plant_tf, ref_tf, dt, m)
        else:
            lambda0 = 3.0 * abs(slowest) if lambda0 is None else lambda0
            if not -lambda0 < slowest:
                raise DesignGateError(
                    f"generator pole -{lambda0:.6g} must be faster than the reference model ({slowest:.6g})")
            gens = SignalGenerators.from_poly(drcrm_generator_poly(ref_tf, lambda0))
            theta = drcrm_matching(plant_tf, ref_tf, gens, m * dt, dt).theta
    else:
        matching = mrac_matching(plant_tf, ref_tf)
        gens = SignalGenerators.from_poly(matching.generator_poly)
        theta = matching.theta

    if gamma is None:
        rates = np.array([adaptation_rate(v, tau_m, 1.0) for v in theta])
        if mode == "drcrm" and m:
            lead = theta.size - m - 1
            rates[lead:lead + m] = float(np.mean(rates[lead:lead + m]))
    elif np.ndim(gamma) == 0:
        rates = np.full(theta.size, float(gamma))
    else:
        rates = np.asarray(gamma, dtype=float)
        if rates.size != theta.size:
            raise DesignGateError(f"{mode} needs {theta.size} adaptation rates, got {rates.size}")

    ref_ss = ref_tf.to_state_space()
    if mode == "mrac":
        gain_vec = np.zeros(ref_ss.n)
    elif L is not None:
        gain_vec = np.asarray(L, dtype=float).reshape(ref_ss.n)
    else:
        ell = float(np.linalg.norm(rates)) if ell is None else ell
        gain_vec = ell * ref_ss.b / float(ref_ss.h @ ref_ss.b)
    ref = GeneralRefModel(ref_tf, gain_vec, delay_steps=m, dt=dt)

    checked = ref_tf if mode == "mrac" else ref.error_transfer()
    check = spr_violation(checked)
    if not check.ok:
        name = "W_m" if mode == "mrac" else "W_e"
        raise SprGateError(f"{name} is not SPR: {check.reason}", check.frequency)

    projection = None
    if projection_margin is not None:
        norm = float(np.linalg.norm(theta))
        projection = ProjectionConfig((1.0 + projection_margin) * (norm if norm > 0 else 1.0), epsilon)
    logger.info("DESIGN_GENERAL mode=%s n=%d m=%d theta=%s L=%s",
                mode, plant_tf.order, m, np.round(theta, 6).tolist(), np.round(gain_vec, 6).tolist())
    state = GeneralAdaptiveState(
        mode, theta, rates, ref, sign_kp=1 if plant_tf.gain > 0 else -1, dt=dt, m=m,
        projection=projection, u_limits=u_limits,
    )
    return state, gens


class GeneralAdaptiveController:
    """General-order controller behind the simulator's controller protocol."""

    def __init__(self, state: GeneralAdaptiveState, gens: SignalGenerators) -> None:
        self.state = state
        self.gens = gens
        self.y_m = state.ref.y_m
        self.e1 = 0.0

    @property
    def mode(self) -> str:
        return f"{self.state.mode}-general"

    def start(self, y_p: float, r: float, u0: float) -> None:
        self.state.ref.prime(r, y_p)
        self.gens.settle(u0, y_p)
        if self.state.u_history is not None:
            self.state.u_history.prime(u0)
        if self.state.reg_history is not None:
            _, regressor = _drcrm_regressors(self.gens, y_p, np.full(self.state.m, u0), r, self.state.dt)
            self.state.reg_history.prime(regressor)
        self.y_m = y_p
        self.e1 = 0.0

    def step(self, y_p: float, r: float, dt: float) -> float:
        self.y_m = self.state.ref.y_m
        self.e1 = y_p - self.y_m
        if self.state.mode == "drcrm":
            return drcrm_general_step(self.state, self.gens, y_p, r, dt)
        return mrac_general_step(self.state, self.gens, y_p, r, dt)

    @property
    def parameters(self) -> np.ndarray:
        return self.state.theta.copy()

    @property
    def saturated(self) -> bool:
        return self.state.saturated
