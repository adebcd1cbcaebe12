from pressurectl.calibration.fitting import (
    ActuatorFit,
    InflowFit,
    fit_first_order_delay,
    fit_inflow_polynomial,
    read_inflow_points,
    read_step_trace,
    steady_inflow,
    write_plant_section,
)
