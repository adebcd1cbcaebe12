"""
Configuration schemas for runs, plants, controllers, design and scenarios.

A run file is YAML with top-level sections `plant`, `scenario`, and optionally
`controller` and `design`.
"""
import logging
import math
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar

from pydantic import BaseModel, Field, ValidationError

from pressurectl.util.errors import ConfigError
from pressurectl.util.io import line_of, read_yaml

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)

ControllerMode = Literal["pi", "mrac", "crm", "drcrm"]
ADAPTIVE_MODES = ("mrac", "crm", "drcrm")


def field_check(*fields: str):
    # Pydantic v1 vs v2 compatibility
    try:
        from pydantic import field_validator  # type: ignore[attr-defined]
    except ImportError:
        from pydantic import validator
        return validator(*fields, allow_reuse=True)
    return field_validator(*fields)


class StrictModel(BaseModel):
    # Forbid unknown keys across Pydantic v1/v2
    try:  # Pydantic v2
        model_config = {"extra": "forbid"}  # type: ignore[attr-defined]
    except Exception:
        class Config:  # Pydantic v1
            extra = "forbid"


class GasConfig(StrictModel):
    R_specific: float = 296.8      # J/(kg K), nitrogen
    T: float = 293.0               # K
    V: float = 0.05                # m^3, free chamber volume
    gamma: float = 1.4
    c_star: Optional[float] = None  # m/s; derived from gamma, R, T when omitted


class InflowConfig(StrictModel):
    # M(P) = c3 P^3 + c4 P^2 + c5 P + c6 [kg/s], P in Pa
    c3: float = -7.68e-21
    c4: float = 0.0
    c5: float = 0.0
    c6: float = 0.8


class ValveConfig(StrictModel):
    r0: float = 21.0               # mm
    y0: float = 20.0               # mm
    alpha_deg: float = 15.0        # deg, half cone angle
    R1: float = 66.0               # gear reduction
    R2: float = 1.0                # mm per spindle turn
    theta_min: float = 0.0         # qc
    theta_max: float = 1.3e6       # qc
    eps_min: float = 1.0


class ActuatorConfig(StrictModel):
    tau_act: float = 0.05          # s
    delay: float = 0.3             # s


class NormalizationConfig(StrictModel):
    pressure_base: float = 2.5e6   # Pa
    area_base: float = 350.0       # mm^2
    design_pressure: float = 0.7   # normalized


class LinearPlantConfig(StrictModel):
    """Either first-order (a_p, b_p) or a general num/den (descending coefficients)."""
    a_p: Optional[float] = None
    b_p: Optional[float] = None
    num: Optional[List[float]] = None
    den: Optional[List[float]] = None
    delay: float = 0.3             # s
    u_min: Optional[float] = None
    u_max: Optional[float] = None


class PlantConfig(StrictModel):
    kind: Literal["cats", "linear"] = "cats"
    gas: GasConfig = Field(default_factory=GasConfig)
    inflow: InflowConfig = Field(default_factory=InflowConfig)
    valve: ValveConfig = Field(default_factory=ValveConfig)
    actuator: ActuatorConfig = Field(default_factory=ActuatorConfig)
    normalization: NormalizationConfig = Field(default_factory=NormalizationConfig)
    linear: Optional[LinearPlantConfig] = None
    p_max: float = 4.0e6           # Pa, abort bound


class RefModelConfig(StrictModel):
    a_m: float                     # 1/s
    b_m: float                     # 1/s
    ell: float = 0.0               # CRM feedback gain


class ProjectionSettings(StrictModel):
    theta_max: float
    epsilon: float = 0.1


class PiSettings(StrictModel):
    k_p: float
    t_i: float                     # s


class ControllerConfig(StrictModel):
    mode: ControllerMode
    dt: float = 0.05               # s, controller period
    sign_bp: int = -1
    delay: float = 0.0             # s, compensated input delay (drcrm)
    reference: Optional[RefModelConfig] = None
    theta0: List[float] = Field(default_factory=list)
    gamma: List[float] = Field(default_factory=list)
    projection: Optional[ProjectionSettings] = None
    pi: Optional[PiSettings] = None
    u_min: Optional[float] = None
    u_max: Optional[float] = None

    @field_check("sign_bp")
    def _sign(cls, v):
        if v not in (-1, 1):
            raise ValueError("sign_bp must be -1 or 1")
        return v

    @field_check("dt")
    def _positive_dt(cls, v):
        if not v > 0:
            raise ValueError("dt must be > 0")
        return v


class NominalPlantConfig(StrictModel):
    a_p: float
    b_p: float
    tau: float = 0.0


class DesignSettings(StrictModel):
    mode: ControllerMode = "drcrm"
    # reference-model targets
    sse: float = 0.0               # %
    rise_time: float = 0.6         # s, 10-90 %
    settling_time: float = 1.5     # s, 5 % band
    overshoot: float = 10.0        # %
    margin: float = 0.9
    tau_m_scale: float = 1.0
    # tuning knobs
    dt: float = 0.05               # s
    derating: float = 0.5
    p1: float = 1.0
    p2: float = 1.0
    p3: float = 3.0
    theta3_nominal: float = 0.2
    theta3_rate: Optional[float] = None
    gamma_lambda: Optional[float] = None
    crm_scale: float = 1.0
    ell: Optional[float] = None
    projection_margin: float = 1.0
    epsilon: float = 0.1
    pi_phase_margin_deg: float = 55.0
    r_bar: Optional[float] = None
    nominal: Optional[NominalPlantConfig] = None


class Segment(StrictModel):
    t: float                       # s, segment start
    value: float                   # normalized reference
    ramp: float = 0.0              # s, linear transition time from previous value


class DisturbanceStep(StrictModel):
    t: float                       # s
    value: float                   # qc (cats) or input units (linear)


class NoiseConfig(StrictModel):
    kind: Literal["none", "uniform", "gaussian"] = "none"
    amplitude: float = 0.0         # normalized; half-width (uniform) or std (gaussian)
    seed: int = 0


class WindowConfig(StrictModel):
    start: float
    end: float
    label: str = ""


class ScenarioConfig(StrictModel):
    duration: float                # s
    dt_sim: float = 0.001          # s
    dt_ctrl: float = 0.05          # s
    r_bar: float = 1.0             # operating-range amplitude for rate design
    reference: List[Segment]
    disturbance: List[DisturbanceStep] = Field(default_factory=list)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    windows: List[WindowConfig] = Field(default_factory=list)

    @field_check("reference")
    def _nonempty(cls, v):
        if not v:
            raise ValueError("reference needs at least one segment")
        return v


class RunConfig(StrictModel):
    name: Optional[str] = None
    description: Optional[str] = None
    plant: PlantConfig = Field(default_factory=PlantConfig)
    design: DesignSettings = Field(default_factory=DesignSettings)
    controller: Optional[ControllerConfig] = None
    scenario: ScenarioConfig


def validate_model(model: Type[M], data: Dict[str, Any]) -> M:
    # Pydantic v1 vs v2 compatibility
    try:
        return model.model_validate(data)  # type: ignore[attr-defined]
    except AttributeError:
        return model.parse_obj(data)  # type: ignore[attr-defined]


def dump_model(model: BaseModel) -> Dict[str, Any]:
    try:
        return model.model_dump(exclude_none=True)  # type: ignore[attr-defined]
    except AttributeError:
        return model.dict(exclude_none=True)  # type: ignore[attr-defined]


def _first_error(exc: ValidationError):
    err = exc.errors()[0]
    loc = tuple(err.get("loc", ()))
    return loc, err.get("msg", str(exc))


def load_model(model: Type[M], path: str, section: Optional[str] = None) -> M:
    """Read YAML at `path` and validate it (or one of its sections) as `model`."""
    data = read_yaml(path)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1, path=path)
    if section is not None:
        if section not in data:
            raise ConfigError(f"missing section '{section}'", path=path)
        data = data[section]
    try:
        return validate_model(model, data)
    except ValidationError as exc:
        loc, msg = _first_error(exc)
        full = ((section,) if section else ()) + loc
        dotted = ".".join(str(p) for p in full)
        raise ConfigError(f"{dotted}: {msg}", line=line_of(path, full), path=path) from exc


def load_run_config(path: str) -> RunConfig:
    logger.debug("CONFIG_LOAD path=%s", path)
    return load_model(RunConfig, path)


def controller_delay_steps(cfg: ControllerConfig) -> int:
    steps = int(round(cfg.delay / cfg.dt))
    if cfg.delay < 0 or not math.isclose(steps * cfg.dt, cfg.delay, rel_tol=0.0, abs_tol=1e-9):
        raise ConfigError(f"controller delay {cfg.delay} s is not a multiple of dt={cfg.dt} s")
    return steps


def expected_parameter_count(cfg: ControllerConfig) -> int:
    if cfg.mode == "pi":
        return 0
    if cfg.mode == "drcrm":
        return controller_delay_steps(cfg) + 3
    return 3
