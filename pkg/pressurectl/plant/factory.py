import logging
import math

from pressurectl.config import PlantConfig
from pressurectl.lintools.transfer import RationalTransfer
from pressurectl.plant.cats import CatsPlant
from pressurectl.plant.linear import LinearDelayPlant
from pressurectl.plant.loop import CatsLoop
from pressurectl.plant.models import ActuatorModel, GasParams, InflowPolynomial, ValveGeometry
from pressurectl.util.errors import ConfigError, ContractViolation

logger = logging.getLogger(__name__)


def cats_plant_from_config(cfg: PlantConfig) -> CatsPlant:
    try:
        gas = GasParams(
            R_specific=cfg.gas.R_specific, T=cfg.gas.T, V=cfg.gas.V,
            gamma=cfg.gas.gamma, c_star=cfg.gas.c_star,
        )
        valve = ValveGeometry(
            r0=cfg.valve.r0, y0=cfg.valve.y0, alpha=math.radians(cfg.valve.alpha_deg),
            R1=cfg.valve.R1, R2=cfg.valve.R2,
            theta_min=cfg.valve.theta_min, theta_max=cfg.valve.theta_max, eps_min=cfg.valve.eps_min,
        )
        actuator = ActuatorModel(tau_act=cfg.actuator.tau_act, delay=cfg.actuator.delay)
    except ContractViolation as exc:
        raise ConfigError(f"plant: {exc}") from exc
    inflow = InflowPolynomial(cfg.inflow.c3, cfg.inflow.c4, cfg.inflow.c5, cfg.inflow.c6)
    return CatsPlant(gas, inflow, valve, actuator, p_max=cfg.p_max)


def build_plant(cfg: PlantConfig):
    """Loop-ready plant (CatsLoop or LinearDelayPlant) for a plant section."""
    if cfg.kind == "cats":
        norm = cfg.normalization
        plant = cats_plant_from_config(cfg)
        lo, hi = 0.01 * cfg.p_max, 0.99 * cfg.p_max
        if not plant.inflow.is_positive_over(lo, hi):
            logger.warning("INFLOW_NONPOSITIVE range=[%g, %g] Pa", lo, hi)
        return CatsLoop(plant, norm.pressure_base, norm.area_base, norm.design_pressure)
    lin = cfg.linear
    if lin is None:
        raise ConfigError("plant.kind is 'linear' but the 'linear' section is missing")
    try:
        if lin.num is not None and lin.den is not None:
            transfer = RationalTransfer.from_coeffs(lin.num, lin.den)
        elif lin.a_p is not None and lin.b_p is not None:
            transfer = RationalTransfer.first_order(lin.a_p, lin.b_p)
        else:
            raise ConfigError("plant.linear needs (a_p, b_p) or (num, den)")
        limits = None
        if lin.u_min is not None and lin.u_max is not None:
            limits = (lin.u_min, lin.u_max)
        return LinearDelayPlant(transfer, lin.delay, u_limits=limits)
    except ContractViolation as exc:
        raise ConfigError(f"plant.linear: {exc}") from exc
