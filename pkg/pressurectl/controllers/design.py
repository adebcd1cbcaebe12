"""
Step-by-step controller design for the first-order plant model
b_p e^{-s tau} / (s - a_p) and a first-order reference model.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from pressurectl.config import (
    ControllerConfig,
    DesignSettings,
    PiSettings,
    ProjectionSettings,
    RefModelConfig,
    controller_delay_steps,
    expected_parameter_count,
)
from pressurectl.controllers.pi import PiConfig, PiController
from pressurectl.controllers.projection import ProjectionConfig
from pressurectl.controllers.scalar import ScalarAdaptiveController, ScalarAdaptiveState, ScalarRefModel
from pressurectl.lintools.delay import steps_for
from pressurectl.lintools.transfer import RationalTransfer, spr_violation
from pressurectl.plant.loop import PlantNominal
from pressurectl.util.errors import ConfigError, ContractViolation, DesignGateError, SprGateError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResponseTargets:
    """Step-response targets for the reference model."""
    sse: float = 0.0               # %
    rise_time: float = 0.6         # s, 10-90 %
    settling_time: float = 1.5     # s, 5 % band
    overshoot: float = 10.0        # %

    @classmethod
    def from_settings(cls, settings: DesignSettings) -> "ResponseTargets":
        return cls(settings.sse, settings.rise_time, settings.settling_time, settings.overshoot)


def reference_model_for(spec: ResponseTargets, margin: float = 0.9, tau_m_scale: float = 1.0) -> Tuple[float, float]:
    """
    (a_m, b_m) of a unity-gain first-order model meeting the rise and settling
    targets: rise = tau ln 9, settling(5 %) = tau ln 20.
    """
    if spec.rise_time <= 0 or spec.settling_time <= 0:
        raise DesignGateError("rise and settling targets must be > 0")
    if spec.overshoot < 0 or spec.sse < 0:
        raise DesignGateError("overshoot and steady-state error targets must be >= 0")
    tau_m = margin * min(spec.settling_time / math.log(20.0), spec.rise_time / math.log(9.0)) * tau_m_scale
    logger.info("DESIGN_REF tau_m=%.4f rise=%.3f settle=%.3f", tau_m, tau_m * math.log(9.0), tau_m * math.log(20.0))
    a_m = -1.0 / tau_m
    return a_m, -a_m


def adaptation_rate(theta_star_nominal: float, tau_m: float, r_bar: float) -> float:
    """Gamma_ii = |theta*| / (3 tau_m r_bar^2)."""
    if tau_m <= 0 or r_bar <= 0:
        raise ContractViolation(f"adaptation_rate needs tau_m > 0 and r_bar > 0, got {tau_m}, {r_bar}")
    return abs(theta_star_nominal) / (3.0 * tau_m * r_bar ** 2)


def continuous_matching(a_p: float, b_p: float, a_m: float, b_m: float) -> Tuple[float, float]:
    """(theta0, theta_r) solving a_p + b_p theta0 = a_m and b_p theta_r = b_m."""
    return (a_m - a_p) / b_p, b_m / b_p


def discrete_matching(a_p: float, b_p: float, a_m: float, dt: float, m: int) -> np.ndarray:
    """
    Exact sampled-data matching for the delayed first-order plant under
    zero-order hold: returns (alpha_y, lambda_1..lambda_m, k).

    With Phi = e^{a dt} and Gamma_p = b_p (Phi_p - 1) / a_p, the control
    u_k = theta0 * y_{k+m} + theta_r * r_k places the sampled plant on the
    sampled reference model; y_{k+m} is expanded through the input history.
    """
    phi_p = math.exp(a_p * dt)
    gam_p = b_p * dt if a_p == 0 else b_p * math.expm1(a_p * dt) / a_p
    phi_m = math.exp(a_m * dt)
    gam_m = -math.expm1(a_m * dt)
    theta0 = (phi_m - phi_p) / gam_p
    theta_r = gam_m / gam_p
    lambdas = [theta0 * phi_p ** (i - 1) * gam_p for i in range(1, m + 1)]
    return np.array([theta0 * phi_p ** m] + lambdas + [theta_r])


def pi_design(nominal: PlantNominal, tau_m: float, lag: float, phase_margin_deg: float) -> Tuple[float, float]:
    """
    PI with the integral zero on the plant pole (T_i = -1/a_p). The loop is
    then K_p b_p e^{-s tau_eff} / s, so crossover is K_p b_p; it is capped by
    the reference bandwidth and by the phase-margin target.
    """
    if nominal.a_p >= 0:
        raise DesignGateError(f"PI pole cancellation needs a stable plant pole, got a_p={nominal.a_p}")
    t_i = -1.0 / nominal.a_p
    tau_eff = nominal.tau + lag
    w_c = 1.0 / tau_m
    if tau_eff > 0:
        w_c = min(w_c, (math.pi / 2.0 - math.radians(phase_margin_deg)) / tau_eff)
    if w_c <= 0:
        raise DesignGateError(f"phase margin {phase_margin_deg} deg is not reachable")
    return w_c / nominal.b_p, t_i


def crm_error_transfer(a_m: float, ell: float) -> RationalTransfer:
    """W_e = 1 / (s - a_m + ell) for the first-order closed-loop reference model."""
    return RationalTransfer(1.0, (1.0,), (1.0, ell - a_m))


def design_controller(
    plant_nominal: PlantNominal,
    spec: ResponseTargets,
    mode: str,
    settings: Optional[DesignSettings] = None,
    r_bar: float = 1.0,
    lag: float = 0.0,
    u_limits: Optional[Tuple[float, float]] = None,
) -> ControllerConfig:
    """Full controller configuration from the nominal plant and the step targets."""
    s = settings or DesignSettings(mode=mode)
    a_p, b_p, tau = plant_nominal.a_p, plant_nominal.b_p, plant_nominal.tau
    if b_p == 0:
        raise DesignGateError("plant gain b_p must be non-zero")
    r_bar = s.r_bar or r_bar
    a_m, b_m = reference_model_for(spec, s.margin, s.tau_m_scale)
    tau_m = -1.0 / a_m
    limits = {}
    if u_limits is not None:
        limits = {"u_min": u_limits[0], "u_max": u_limits[1]}

    if mode == "pi":
        k_p, t_i = pi_design(plant_nominal, tau_m, lag, s.pi_phase_margin_deg)
        logger.info("DESIGN mode=pi k_p=%.5g t_i=%.5g", k_p, t_i)
        return ControllerConfig(mode="pi", dt=s.dt, sign_bp=1 if b_p > 0 else -1,
                                pi=PiSettings(k_p=k_p, t_i=t_i), **limits)

    if mode not in ("mrac", "crm", "drcrm"):
        raise DesignGateError(f"unknown controller mode '{mode}'")

    theta3_base = s.theta3_rate if s.theta3_rate is not None else adaptation_rate(s.theta3_nominal, tau_m, 1.0)
    gamma3 = s.p3 * theta3_base
    delay = 0.0
    if mode == "drcrm":
        try:
            m = steps_for(tau, s.dt, "plant delay")
        except ContractViolation as exc:
            raise DesignGateError(str(exc)) from exc
        nominal = discrete_matching(a_p, b_p, a_m, s.dt, m)
        lambdas = nominal[1:-1]
        g_lambda = s.gamma_lambda
        if g_lambda is None:
            g_lambda = adaptation_rate(float(np.mean(np.abs(lambdas))), tau_m, r_bar) if m else 0.0
        theta = list(nominal) + [0.0]
        gamma = ([s.p1 * adaptation_rate(nominal[0], tau_m, r_bar)]
                 + [g_lambda] * m
                 + [s.p2 * adaptation_rate(nominal[-1], tau_m, r_bar), gamma3])
        delay = m * s.dt
    else:
        theta0, theta_r = continuous_matching(a_p, b_p, a_m, b_m)
        gamma = [s.p1 * adaptation_rate(theta0, tau_m, r_bar),
                 s.p2 * adaptation_rate(theta_r, tau_m, r_bar), gamma3]
        if tau > 0:
            theta0, theta_r = s.derating * theta0, s.derating * theta_r
        theta = [theta0, theta_r, 0.0]

    ell = 0.0
    if mode in ("crm", "drcrm"):
        # rates and ell move together so ell = |gamma| holds at every scale
        gamma = [g * s.crm_scale for g in gamma]
        ell = s.ell if s.ell is not None else float(np.linalg.norm(gamma))
        check = spr_violation(crm_error_transfer(a_m, ell))
        if not check.ok:
            raise SprGateError(f"W_e = 1/(s - a_m + ell) with ell={ell:.6g}: {check.reason}", check.frequency)
        if ell < 0:
            raise DesignGateError(f"CRM gain ell={ell} must be >= 0")

    norm = float(np.linalg.norm(theta))
    theta_max = (1.0 + s.projection_margin) * (norm if norm > 0 else 1.0)
    logger.info("DESIGN mode=%s a_m=%.5g ell=%.5g theta=%s gamma=%s theta_max=%.5g",
                mode, a_m, ell, np.round(theta, 6).tolist(), np.round(gamma, 6).tolist(), theta_max)
    return ControllerConfig(
        mode=mode,
        dt=s.dt,
        sign_bp=1 if b_p > 0 else -1,
        delay=delay,
        reference=RefModelConfig(a_m=a_m, b_m=b_m, ell=ell),
        theta0=[float(v) for v in theta],
        gamma=[float(v) for v in gamma],
        projection=ProjectionSettings(theta_max=theta_max, epsilon=s.epsilon),
        **limits,
    )


def build_controller(cfg: ControllerConfig, u_limits: Optional[Tuple[float, float]] = None):
    """Instantiate a PiController or ScalarAdaptiveController from its config."""
    limits = u_limits
    if cfg.u_min is not None and cfg.u_max is not None:
        limits = (cfg.u_min, cfg.u_max)
    if cfg.mode == "pi":
        if cfg.pi is None:
            raise ConfigError("controller.pi section is required for mode 'pi'")
        lo, hi = limits if limits is not None else (None, None)
        try:
            return PiController(PiConfig(cfg.pi.k_p, cfg.pi.t_i, u_min=lo, u_max=hi))
        except ContractViolation as exc:
            raise ConfigError(f"controller.pi: {exc}") from exc
    if cfg.reference is None:
        raise ConfigError(f"controller.reference is required for mode '{cfg.mode}'")
    expected = expected_parameter_count(cfg)
    if len(cfg.theta0) != expected or len(cfg.gamma) != expected:
        raise ConfigError(
            f"controller mode '{cfg.mode}' needs {expected} entries in theta0 and gamma, "
            f"got {len(cfg.theta0)} and {len(cfg.gamma)}")
    m = controller_delay_steps(cfg) if cfg.mode == "drcrm" else 0
    try:
        ref = ScalarRefModel(
            cfg.reference.a_m, cfg.reference.b_m,
            ell=0.0 if cfg.mode == "mrac" else cfg.reference.ell,
            delay_steps=m, dt=cfg.dt,
        )
        projection = None
        if cfg.projection is not None:
            projection = ProjectionConfig(cfg.projection.theta_max, cfg.projection.epsilon)
        state = ScalarAdaptiveState.create(
            cfg.mode, cfg.theta0, cfg.gamma, sign_bp=cfg.sign_bp, dt=cfg.dt,
            delay=m * cfg.dt, projection=projection, u_limits=limits,
        )
    except ContractViolation as exc:
        raise ConfigError(f"controller: {exc}") from exc
    return ScalarAdaptiveController(state, ref)
