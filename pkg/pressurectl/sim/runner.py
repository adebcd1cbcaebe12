"""
Two-rate closed-loop engine.

Every controller period the noisy output is read, the controller produces a
command in deviation units and the plant latches it; the plant then integrates
with the command held for dt_ctrl / dt_sim substeps.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Protocol, Sequence

import numpy as np

from pressurectl.config import ControllerConfig, DesignSettings, RunConfig
from pressurectl.controllers.design import ResponseTargets, build_controller, design_controller
from pressurectl.plant.loop import CatsLoop, LoopPlant, PlantNominal
from pressurectl.sim.scenario import Scenario
from pressurectl.sim.trace import SimTrace
from pressurectl.util.errors import SimulationAbort

logger = logging.getLogger(__name__)


class Controller(Protocol):
    mode: str
    y_m: float
    e1: float

    def start(self, y_p: float, r: float, u0: float) -> None: ...

    def step(self, y_p: float, r: float, dt: float) -> float: ...

    @property
    def parameters(self) -> np.ndarray: ...

    @property
    def saturated(self) -> bool: ...


def run_closed_loop(plant: LoopPlant, controller: Controller, scenario: Scenario, label: str = "") -> SimTrace:
    """Run one scenario; a plant or controller abort returns the partial trace."""
    dt_ctrl, dt_sim = scenario.dt_ctrl, scenario.dt_sim
    trace = SimTrace(label=label or getattr(controller, "mode", ""), dt=dt_ctrl)
    y_op = plant.y_op
    noise = scenario.noise_samples()
    logger.info("SIM_START label=%s ticks=%d substeps=%d", trace.label, scenario.ticks, scenario.substeps)
    try:
        r0 = scenario.reference(0.0)
        plant.set_disturbance(scenario.disturbance(0.0))
        u0 = plant.start(r0, dt_sim)
        controller.start(plant.measure() - y_op, r0 - y_op, u0)
        for k in range(scenario.ticks):
            t = k * dt_ctrl
            d0 = scenario.disturbance(t)
            plant.set_disturbance(d0)
            r = scenario.reference(t)
            y = plant.measure() + noise[k]
            u = controller.step(y - y_op, r - y_op, dt_ctrl)
            sat = plant.command(u) or controller.saturated
            trace.append(t, r, controller.y_m + y_op, y, u, controller.e1, controller.parameters, d0, sat)
            for _ in range(scenario.substeps):
                plant.advance(dt_sim)
    except SimulationAbort as exc:
        trace.aborted = True
        trace.diagnostic = exc.diagnostic
        logger.error("SIM_ABORT label=%s t=%.4f diagnostic=%s", trace.label,
                     trace.t[-1] if trace.t else 0.0, exc.diagnostic)
        return trace
    logger.info("SIM_DONE label=%s rows=%d peak_e1=%.4g", trace.label, len(trace), trace.peak_abs("e1"))
    return trace


def reference_response(ref_model, scenario: Scenario, label: str = "reference") -> SimTrace:
    """
    Reference model alone, stepped at dt_ctrl with e1 = 0. Works with any model
    exposing y_m, prime(r, y_m) and advance(r, e1, dt).
    """
    dt = scenario.dt_ctrl
    trace = SimTrace(label=label, dt=dt)
    r0 = scenario.reference(0.0)
    ref_model.prime(r0, r0)
    for k in range(scenario.ticks):
        t = k * dt
        r = scenario.reference(t)
        y_m = ref_model.y_m
        trace.append(t, r, y_m, y_m, 0.0, 0.0, np.zeros(0), 0.0, False)
        ref_model.advance(r, 0.0, dt)
    return trace


def run_batch(plant_factory: Callable[[], LoopPlant], controller_factories: Sequence[Callable[[], Controller]],
              scenario: Scenario, jobs: int = 1, labels: Optional[Sequence[str]] = None) -> List[SimTrace]:
    """Independent runs on fresh plants; results keep the order of `controller_factories`."""
    names = list(labels) if labels is not None else [""] * len(controller_factories)

    def one(i: int) -> SimTrace:
        return run_closed_loop(plant_factory(), controller_factories[i](), scenario, names[i])

    if jobs <= 1:
        return [one(i) for i in range(len(controller_factories))]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, range(len(controller_factories))))


def nominal_for(run: RunConfig, plant: LoopPlant) -> PlantNominal:
    """Design-time plant model: the configured nominal override, else the plant's own."""
    if run.design.nominal is not None:
        n = run.design.nominal
        return PlantNominal(n.a_p, n.b_p, n.tau)
    return plant.nominal()


def controller_config_for(run: RunConfig, plant: LoopPlant, mode: Optional[str] = None,
                          settings: Optional[DesignSettings] = None) -> ControllerConfig:
    """Explicit controller section when it matches `mode`, otherwise a fresh design."""
    mode = mode or (run.controller.mode if run.controller is not None else run.design.mode)
    if run.controller is not None and run.controller.mode == mode:
        return run.controller
    return design_for(run, plant, mode, settings)


def design_for(run: RunConfig, plant: LoopPlant, mode: str,
               settings: Optional[DesignSettings] = None) -> ControllerConfig:
    s = settings or run.design
    lag = plant.plant.actuator.tau_act if isinstance(plant, CatsLoop) else 0.0
    return design_controller(nominal_for(run, plant), ResponseTargets.from_settings(s), mode, s,
                             r_bar=run.scenario.r_bar, lag=lag)


def controller_factory(cfg: ControllerConfig, plant: LoopPlant) -> Callable[[], Controller]:
    limits = plant.u_limits
    return lambda: build_controller(cfg, limits)


