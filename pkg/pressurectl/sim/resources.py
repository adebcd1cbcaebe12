"""
Memory and per-cycle operation counts of the embedded control law.

For p adaptive parameters the stored floats are p states, p parameters, p
products, one control value, p adaptation terms, the reference-model terms
(a_m, b_m, ell, y_m), one tracking error, p rates and p + 4 projection terms.
Per cycle the control law costs 2p - 1 operations, the adaptive law 3p, the
reference model and error 7 (5 for MRAC, which has no ell pull), and the
projection 6p + 11. MRAC also stores one reference-model term fewer.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Dict

from pressurectl.config import ControllerConfig, controller_delay_steps

logger = logging.getLogger(__name__)

BYTES_PER_FLOAT = 4
PI_FLOATS = 8      # k_p, t_i, e, e_prev, integrator, u, u_min, u_max
PI_OPS = 9


@dataclass(frozen=True)
class ResourceEstimate:
    floats: int
    bytes: int
    ops_per_cycle: int
    flops: float

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


def resource_estimate(cfg: ControllerConfig) -> ResourceEstimate:
    if cfg.mode == "pi":
        floats, ops = PI_FLOATS, PI_OPS
    else:
        m = controller_delay_steps(cfg) if cfg.mode == "drcrm" else 0
        p = m + 3
        ref_terms = 3 if cfg.mode == "mrac" else 4
        floats = 5 * p + 1 + ref_terms + 1 + (p + 4)
        ops = (2 * p - 1) + 3 * p + (5 if cfg.mode == "mrac" else 7) + (6 * p + 11)
    estimate = ResourceEstimate(floats, floats * BYTES_PER_FLOAT, ops, ops / cfg.dt)
    logger.info("RESOURCES mode=%s floats=%d bytes=%d ops=%d flops=%.6g",
                cfg.mode, estimate.floats, estimate.bytes, estimate.ops_per_cycle, estimate.flops)
    return estimate
