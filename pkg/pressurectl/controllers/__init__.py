from pressurectl.controllers.design import (
    ResponseTargets,
    adaptation_rate,
    build_controller,
    continuous_matching,
    crm_error_transfer,
    design_controller,
    discrete_matching,
    pi_design,
    reference_model_for,
)
from pressurectl.controllers.pi import PiConfig, PiController, pi_step
from pressurectl.controllers.projection import ProjectionConfig, project, projected_update
from pressurectl.controllers.scalar import (
    AdaptiveMode,
    ScalarAdaptiveController,
    ScalarAdaptiveState,
    ScalarRefModel,
    drcrm_scalar_step,
    mrac_scalar_step,
)
