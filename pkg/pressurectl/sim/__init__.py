from pressurectl.sim.metrics import StepMetrics, compute_metrics, step_metrics
from pressurectl.sim.resources import ResourceEstimate, resource_estimate
from pressurectl.sim.runner import (
    controller_config_for,
    controller_factory,
    design_for,
    nominal_for,
    reference_response,
    run_batch,
    run_closed_loop,
)
from pressurectl.sim.scenario import Scenario, StepWindow
from pressurectl.sim.trace import SimTrace
