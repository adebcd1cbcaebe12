from pressurectl.core.general import (
    DrcrmMatching,
    GeneralAdaptiveController,
    GeneralAdaptiveState,
    GeneralRefModel,
    MracMatching,
    design_general,
    drcrm_general_step,
    drcrm_matching,
    mrac_general_step,
    mrac_matching,
    output_combination,
)
from pressurectl.core.generators import SignalGenerators, companion, generators_step
from pressurectl.core.predictor import Prediction, PredictorMatrices, predict_future
