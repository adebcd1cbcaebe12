from pressurectl.lintools.delay import DelayBuffer, delay_sample, steps_for
from pressurectl.lintools.integrate import integral_of_exp, matrix_exp, rk4_step, zoh_discretize
from pressurectl.lintools.transfer import (
    RationalTransfer,
    SprCheck,
    StateSpaceSiso,
    default_spr_grid,
    is_spr,
    spr_violation,
)

__all__ = [
    "DelayBuffer",
    "delay_sample",
    "steps_for",
    "integral_of_exp",
    "matrix_exp",
    "rk4_step",
    "zoh_discretize",
    "RationalTransfer",
    "SprCheck",
    "StateSpaceSiso",
    "default_spr_grid",
    "is_spr",
    "spr_violation",
]
