import math

import numpy as np
import pytest

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
from pressurectl.util.errors import ContractViolation, SimulationAbort


# --- projection ---------------------------------------------------------------

def test_projection_passes_inside_ball():
    cfg = ProjectionConfig(theta_max=1.0, epsilon=0.1)
    y = np.array([3.0, -2.0])
    assert np.array_equal(project(np.array([0.5, 0.5]), y, cfg), y)


def test_projection_on_hard_bound_deflects_to_tangent():
    cfg = ProjectionConfig(theta_max=1.0, epsilon=0.1)
    theta = np.array([math.sqrt(1.1), 0.0])
    assert cfg.f(theta) == pytest.approx(1.0)
    out = project(theta, np.array([1.0, 1.0]), cfg)
    assert out == pytest.approx([0.0, 1.0], abs=1e-12)


def test_projection_between_bounds_scales_radial_part():
    cfg = ProjectionConfig(theta_max=1.0, epsilon=0.1)
    theta = np.array([1.02, 0.0])
    f = (1.02 ** 2 - 1.0) / 0.1
    out = project(theta, np.array([1.0, 0.5]), cfg)
    assert out == pytest.approx([1.0 - f, 0.5])


def test_projection_inward_direction_unchanged():
    cfg = ProjectionConfig(theta_max=1.0, epsilon=0.1)
    theta = np.array([1.04, 0.0])
    y = np.array([-1.0, 0.3])
    assert np.array_equal(project(theta, y, cfg), y)


def test_projected_update_never_exceeds_hard_bound():
    cfg = ProjectionConfig(theta_max=2.0, epsilon=0.1)
    rng = np.random.default_rng(5)
    theta = np.zeros(4)
    for _ in range(2000):
        theta = projected_update(theta, rng.normal(scale=50.0, size=4), 0.05, cfg)
        assert np.linalg.norm(theta) <= cfg.hard_bound * (1.0 + 1e-12)


def test_projection_config_validation():
    with pytest.raises(ContractViolation):
        ProjectionConfig(theta_max=0.0)


# --- PI -----------------------------------------------------------------------

def test_pi_constant_error_for_one_second():
    cfg = PiConfig(k_p=2.0, t_i=1.0)
    for _ in range(20):
        u = pi_step(cfg, 1.0, 0.05)
    assert u == pytest.approx(4.0)


def test_pi_zero_error_keeps_integrator():
    cfg = PiConfig(k_p=2.0, t_i=1.0, integrator=0.3)
    u = pi_step(cfg, 0.0, 0.05)
    assert cfg.integrator == pytest.approx(0.3)
    assert u == pytest.approx(2.0 * 0.3)

    cfg = PiConfig(k_p=2.0, t_i=1.0)
    assert pi_step(cfg, 0.0, 0.05) == 0.0
    assert cfg.integrator == 0.0


def test_pi_anti_windup_freezes_integrator():
    cfg = PiConfig(k_p=2.0, t_i=1.0, u_min=-1.0, u_max=1.0)
    for _ in range(10):
        u = pi_step(cfg, 1.0, 0.05)
    assert u == 1.0
    assert cfg.saturated
    assert cfg.integrator == 0.0


def test_pi_rejects_bad_inputs():
    with pytest.raises(ContractViolation):
        PiConfig(k_p=1.0, t_i=0.0)
    with pytest.raises(SimulationAbort):
        pi_step(PiConfig(k_p=1.0, t_i=1.0), float("nan"), 0.05)


def test_pi_controller_starts_bumpless():
    ctrl = PiController(PiConfig(k_p=-2.0, t_i=1.3))
    ctrl.start(y_p=0.1, r=0.1, u0=0.4)
    assert ctrl.step(0.1, 0.1, 0.05) == pytest.approx(0.4)


# --- scalar adaptive ----------------------------------------------------------

def _mrac(mode="mrac", theta=(0.5, -1.0, 0.0), gamma=(1.0, 1.0, 1.0), ell=0.0):
    state = ScalarAdaptiveState.create(mode, list(theta), list(gamma), sign_bp=-1, dt=0.05)
    return state, ScalarRefModel(-2.0, 2.0, ell=ell, dt=0.05)


def test_reference_model_contract():
    with pytest.raises(ContractViolation):
        ScalarRefModel(1.0, -1.0)
    with pytest.raises(ContractViolation):
        ScalarRefModel(-2.0, 1.0)
    with pytest.raises(ContractViolation):
        ScalarRefModel(-2.0, 2.0, ell=-0.1)


def test_reference_model_exact_discretization():
    ref = ScalarRefModel(-2.0, 2.0, dt=0.05)
    ref.advance(1.0, 0.0, 0.05)
    assert ref.y_m == pytest.approx(1.0 - math.exp(-0.1))


def test_crm_feedback_pulls_toward_plant():
    open_loop = ScalarRefModel(-2.0, 2.0, ell=0.0)
    closed = ScalarRefModel(-2.0, 2.0, ell=5.0)
    open_loop.advance(0.0, 1.0, 0.05)
    closed.advance(0.0, 1.0, 0.05)
    assert open_loop.y_m == 0.0
    assert closed.y_m == pytest.approx(1.0 - math.exp(-0.25))


def test_mrac_control_law_and_frozen_parameters():
    state, ref = _mrac()
    ref.y_m = 0.3
    u = mrac_scalar_step(state, ref, y_p=0.3, r=1.0, dt=0.05)
    assert u == pytest.approx(0.5 * 0.3 - 1.0)
    assert state.theta.tolist() == [0.5, -1.0, 0.0]


def test_mrac_sign_rule_increases_theta0():
    state, ref = _mrac()
    ref.y_m = 0.0
    mrac_scalar_step(state, ref, y_p=0.2, r=0.0, dt=0.05)
    assert state.theta[0] > 0.5


def test_state_validation():
    with pytest.raises(ContractViolation):
        ScalarAdaptiveState.create("mrac", [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ContractViolation):
        ScalarAdaptiveState.create("drcrm", [0.0] * 9, [1.0] * 9, dt=0.05, delay=0.32)
    with pytest.raises(ContractViolation):
        ScalarAdaptiveState.create("drcrm", [0.0] * 8, [1.0] * 8, dt=0.05, delay=0.3)
    state = ScalarAdaptiveState.create("drcrm", [0.0] * 9, [1.0] * 9, dt=0.05, delay=0.3)
    assert state.m == 6


def test_non_finite_measurement_aborts():
    state, ref = _mrac()
    with pytest.raises(SimulationAbort):
        mrac_scalar_step(state, ref, y_p=float("inf"), r=1.0, dt=0.05)


def test_crm_with_zero_gain_is_bit_identical_to_mrac():
    rng = np.random.default_rng(2)
    inputs = rng.normal(size=(200, 2))
    runs = []
    for mode in ("mrac", "crm"):
        state, ref = _mrac(mode=mode, theta=(0.2, -0.4, 0.0), gamma=(2.0, 2.0, 1.0), ell=0.0)
        us = [mrac_scalar_step(state, ref, y, r, 0.05) for y, r in inputs]
        runs.append((us, state.theta.copy(), ref.y_m))
    assert runs[0][0] == runs[1][0]
    assert np.array_equal(runs[0][1], runs[1][1])
    assert runs[0][2] == runs[1][2]


def test_drcrm_regressor_and_history():
    state = ScalarAdaptiveState.create("drcrm", [0.1, 0.2, 0.3, -1.0, 0.0], [0.0] * 5, dt=0.05, delay=0.1)
    ref = ScalarRefModel(-2.0, 2.0, delay_steps=2, dt=0.05)
    state.u_history.prime(0.5)
    ref.prime(1.0, 0.0)
    u = drcrm_scalar_step(state, ref, y_p=0.0, r=1.0, dt=0.05)
    assert u == pytest.approx(0.2 * 0.5 + 0.3 * 0.5 - 1.0)
    assert state.u_history.sample(1) == pytest.approx(u)
    assert state.u_history.sample(2) == pytest.approx(0.5)


def test_drcrm_zero_error_freezes_all_parameters():
    theta = [0.1, 0.2, 0.3, -1.0, 0.05]
    state = ScalarAdaptiveState.create("drcrm", theta, [3.0] * 5, dt=0.05, delay=0.1)
    ref = ScalarRefModel(-2.0, 2.0, delay_steps=2, dt=0.05)
    ref.prime(0.0, 0.4)
    drcrm_scalar_step(state, ref, y_p=0.4, r=0.0, dt=0.05)
    assert state.theta.tolist() == theta


def test_drcrm_reference_delay_must_match_history():
    state = ScalarAdaptiveState.create("drcrm", [0.0] * 5, [0.0] * 5, dt=0.05, delay=0.1)
    with pytest.raises(ContractViolation):
        drcrm_scalar_step(state, ScalarRefModel(-2.0, 2.0, delay_steps=1, dt=0.05), 0.0, 0.0, 0.05)


def test_controller_saturation_flag():
    state = ScalarAdaptiveState.create("mrac", [0.0, 10.0, 0.0], [0.0] * 3, u_limits=(-1.0, 1.0))
    ctrl = ScalarAdaptiveController(state, ScalarRefModel(-2.0, 2.0))
    ctrl.start(0.0, 0.0, 0.0)
    assert ctrl.step(0.0, 1.0, 0.05) == 1.0
    assert ctrl.saturated
    assert ctrl.mode == AdaptiveMode.MRAC.value
