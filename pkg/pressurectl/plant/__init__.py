from pressurectl.plant.cats import (
    CatsPlant,
    Linearization,
    ThetaCommand,
    area_to_theta,
    equilibrium_area,
    equilibrium_pressure,
    linearize_at,
    plant_derivative,
    plant_step,
    simulate_actuator_step,
    simulate_open_loop,
    throat_area,
)
from pressurectl.plant.linear import LinearDelayPlant
from pressurectl.plant.loop import CatsLoop, LoopPlant, PlantNominal
from pressurectl.plant.models import (
    ActuatorModel,
    GasParams,
    InflowPolynomial,
    ValveGeometry,
    characteristic_velocity,
    mass_flow_out,
)
