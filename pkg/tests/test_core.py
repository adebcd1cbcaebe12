import math

import numpy as np
import pytest
from scipy.integrate import quad_vec

from pressurectl.controllers.design import ResponseTargets, build_controller, design_controller
from pressurectl.controllers.scalar import ScalarAdaptiveController, ScalarAdaptiveState, ScalarRefModel
from pressurectl.core.general import (
    GeneralAdaptiveController,
    GeneralRefModel,
    design_general,
    drcrm_generator_poly,
    drcrm_matching,
    mrac_matching,
)
from pressurectl.core.generators import SignalGenerators, companion, generators_step
from pressurectl.core.predictor import PredictorMatrices, predict_future
from pressurectl.lintools.delay import DelayBuffer
from pressurectl.lintools.integrate import matrix_exp
from pressurectl.lintools.transfer import RationalTransfer, is_spr
from pressurectl.plant.linear import LinearDelayPlant
from pressurectl.plant.loop import PlantNominal
from pressurectl.config import ScenarioConfig, Segment
from pressurectl.sim.runner import run_closed_loop
from pressurectl.sim.scenario import Scenario
from pressurectl.util.errors import ContractViolation, SprGateError

REF_2 = RationalTransfer(6.0, (1.0, 1.5), (1.0, 5.0, 6.0))
PLANT_2 = RationalTransfer(2.0, (1.0, 1.0), (1.0, 1.0, -2.0))


# --- generators ---------------------------------------------------------------

def test_companion_matrix():
    F = companion([1.0, 3.0, 2.0])
    assert F.tolist() == [[-3.0, -2.0], [1.0, 0.0]]
    assert np.allclose(np.poly(F), [1.0, 3.0, 2.0])


def test_generator_dc_gain():
    gens = SignalGenerators.from_poly([1.0, 5.0])
    for _ in range(400):
        generators_step(gens, 1.0, 0.0, 0.01)
    assert gens.w1[0] == pytest.approx(0.2, rel=1e-6)
    assert gens.w2[0] == 0.0


def test_generator_homogeneous_decay():
    gens = SignalGenerators.from_poly([1.0, 3.0, 2.0])
    w0 = np.array([1.0, -0.5])
    gens.w1 = w0.copy()
    for _ in range(100):
        generators_step(gens, 0.0, 0.0, 0.01)
    assert gens.w1 == pytest.approx(matrix_exp(gens.F, 1.0) @ w0, abs=1e-7)


def test_generator_construction_checks():
    with pytest.raises(ContractViolation):
        SignalGenerators.from_poly([1.0, -1.0])
    with pytest.raises(ContractViolation):
        SignalGenerators.from_poly([1.0, 1.0], faster_than=-2.0)
    with pytest.raises(ContractViolation):
        SignalGenerators(np.diag([-1.0, -2.0]), np.array([1.0, 0.0]))
    assert SignalGenerators.from_poly([1.0, 5.0], faster_than=-2.0).order == 1


# --- predictor ----------------------------------------------------------------

def _predictor(tau=0.3, dt=0.05):
    return PredictorMatrices.from_generators([[-2.0]], [1.0], [0.5], [0.3], tau, dt)


def _history(pred, u, t0):
    buf = DelayBuffer(pred.m, pred.dt)
    for j in range(pred.m, 0, -1):
        buf.push(u(t0 - j * pred.dt))
    return buf


def test_predictor_block_structure():
    pred = _predictor()
    assert pred.A.tolist() == [[-2.0, 0.0], [0.5, -1.7]]
    assert pred.b.tolist() == [1.0, 0.0]
    assert pred.m == 6


def test_predict_future_zero_input():
    pred = _predictor()
    w1, w2 = np.array([1.0]), np.array([-0.5])
    out = predict_future(pred, w1, w2, _history(pred, lambda t: 0.0, 0.0), 0.0)
    expected = pred.e_tau @ np.array([1.0, -0.5])
    assert np.concatenate((out.w1, out.w2)) == pytest.approx(expected, abs=1e-15)
    assert not out.warm_up


def test_predict_future_constant_input_closed_form():
    pred = _predictor(tau=0.3, dt=5e-4)
    c = 0.7
    w = np.array([1.0, -0.5])
    out = predict_future(pred, w[:1], w[1:], _history(pred, lambda t: c, 0.0), c)
    closed = pred.e_tau @ w + np.linalg.solve(pred.A, (pred.e_tau - np.eye(2)) @ (pred.b * c))
    assert np.concatenate((out.w1, out.w2)) == pytest.approx(closed, rel=1e-6)


def _oracle(pred, w, u, t0):
    integral, _ = quad_vec(lambda s: matrix_exp(pred.A, s) @ pred.b * u(t0 - s), 0.0, pred.tau, epsabs=1e-13)
    return pred.e_tau @ w + integral


def test_predict_future_matches_forward_solution():
    pred = _predictor(tau=0.3, dt=5e-4)
    w = np.array([1.0, -0.5])
    t0 = 1.0
    out = predict_future(pred, w[:1], w[1:], _history(pred, math.sin, t0), math.sin(t0))
    assert np.concatenate((out.w1, out.w2)) == pytest.approx(_oracle(pred, w, math.sin, t0), rel=1e-6)


def test_predict_future_second_order_convergence():
    w = np.array([1.0, -0.5])
    t0 = 1.0
    errors = []
    for dt in (0.05, 0.025, 0.0125):
        pred = _predictor(tau=0.3, dt=dt)
        out = predict_future(pred, w[:1], w[1:], _history(pred, math.sin, t0), math.sin(t0))
        errors.append(np.linalg.norm(np.concatenate((out.w1, out.w2)) - _oracle(pred, w, math.sin, t0)))
    slopes = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
    assert all(1.8 < s < 2.2 for s in slopes)


def test_predict_future_flags_warm_up():
    pred = _predictor()
    out = predict_future(pred, np.zeros(1), np.zeros(1), DelayBuffer(pred.m, pred.dt), 0.0)
    assert out.warm_up
    with pytest.raises(ContractViolation):
        predict_future(pred, np.zeros(1), np.zeros(1), DelayBuffer(2, pred.dt), 0.0)


# --- matching -----------------------------------------------------------------

def test_mrac_matching_closes_loop_on_reference_model():
    """(Lambda - theta1) R_p - k_p Z_p (theta0 Lambda + theta2) = Z_p R_m."""
    matching = mrac_matching(PLANT_2, REF_2)
    theta0, theta1, theta2, theta_r = matching.theta
    lam = matching.generator_poly
    Zp, Rp, kp = np.array(PLANT_2.num), np.array(PLANT_2.den), PLANT_2.gain
    lhs = np.polysub(np.polymul(np.polysub(lam, [theta1]), Rp),
                     kp * np.polymul(Zp, np.polyadd(theta0 * lam, [theta2])))
    rhs = np.polymul(Zp, np.array(REF_2.den))
    assert np.trim_zeros(lhs, "f") == pytest.approx(rhs)
    assert theta_r == pytest.approx(REF_2.gain / PLANT_2.gain)


def test_drcrm_matching_delay_free_identity():
    lam_poly = drcrm_generator_poly(REF_2, 6.0)
    gens = SignalGenerators.from_poly(lam_poly)
    matching = drcrm_matching(PLANT_2, REF_2, gens, tau=0.0, dt=0.05)
    b1, b2 = matching.beta1, matching.beta2
    Zp, Rp, kp = np.array(PLANT_2.num), np.array(PLANT_2.den), PLANT_2.gain
    lhs = np.polysub(np.polymul(np.polysub(lam_poly, b1), Rp), kp * np.polymul(Zp, b2))
    rhs = np.polymul(np.polymul(Zp, [1.0, 6.0]), np.array(REF_2.den))
    assert np.trim_zeros(lhs, "f") == pytest.approx(rhs)
    assert matching.theta[:4] == pytest.approx(np.concatenate((b1, b2)))


def test_drcrm_matching_with_delay_layout():
    gens = SignalGenerators.from_poly(drcrm_generator_poly(REF_2, 6.0))
    matching = drcrm_matching(PLANT_2, REF_2, gens, tau=0.3, dt=0.05)
    assert matching.theta.size == 4 + 6 + 1
    beta = np.concatenate((matching.beta1, matching.beta2))
    assert matching.theta[:4] == pytest.approx(beta @ matching.predictor.e_tau)


# --- SPR gate -----------------------------------------------------------------

def test_second_order_error_transfer_spr_depends_on_gain():
    assert not is_spr(GeneralRefModel(REF_2, [1.5, -1.5]).error_transfer())
    assert is_spr(GeneralRefModel(REF_2, [0.5, 0.0]).error_transfer())


def test_design_general_rejects_non_spr_error_transfer():
    with pytest.raises(SprGateError) as excinfo:
        design_general(PLANT_2, REF_2, "crm", L=[1.5, -1.5])
    # Re W_e(jw) = (54 - 6 w^2) / |D|^2 turns negative just above 3 rad/s
    assert 3.0 < excinfo.value.frequency < 3.2
    state, gens = design_general(PLANT_2, REF_2, "crm", L=[0.5, 0.0])
    assert state.theta.size == 4
    assert gens.order == 1


def test_general_drcrm_regressor_lag_equals_delay():
    state, gens = design_general(PLANT_2, REF_2, "drcrm", tau=0.3, dt=0.05, L=[0.5, 0.0])
    assert state.m == 6
    assert state.reg_history.capacity * state.dt == pytest.approx(0.3)
    assert state.ref.delay_steps == 6
    assert gens.order == 2


def test_general_zero_error_freezes_parameters():
    state, gens = design_general(PLANT_2, REF_2, "drcrm", tau=0.3, dt=0.05, L=[0.5, 0.0])
    ctrl = GeneralAdaptiveController(state, gens)
    ctrl.start(0.0, 0.0, 0.0)
    before = state.theta.copy()
    for _ in range(20):
        ctrl.step(0.0, 0.0, 0.05)
    assert np.array_equal(state.theta, before)
    assert ctrl.mode == "drcrm-general"


def test_crm_with_zero_gain_matches_mrac_general():
    runs = []
    for mode in ("mrac", "crm"):
        state, gens = design_general(PLANT_2, REF_2, mode, L=[0.0, 0.0], gamma=0.5, projection_margin=None)
        state.theta = 0.8 * state.theta
        ctrl = GeneralAdaptiveController(state, gens)
        ctrl.start(0.0, 0.0, 0.0)
        runs.append([ctrl.step(0.1 * k % 0.7, 1.0, 0.05) for k in range(100)])
    assert runs[0] == runs[1]


def _step_scenario(duration=15.0):
    cfg = ScenarioConfig(duration=duration, dt_sim=0.01, dt_ctrl=0.05,
                         reference=[Segment(t=0.0, value=0.0), Segment(t=1.0, value=1.0)])
    return Scenario(cfg, "step")


def test_first_order_general_mrac_reproduces_scalar():
    plant_tf = RationalTransfer.first_order(-1.0, -2.0)
    a_m = -2.0
    ref_tf = RationalTransfer.first_order(a_m, -a_m)
    gamma = [0.4, 0.3]
    state, gens = design_general(plant_tf, ref_tf, "mrac", gamma=gamma, projection_margin=None)
    state.theta = 0.5 * state.theta
    general = GeneralAdaptiveController(state, gens)

    scalar_state = ScalarAdaptiveState.create("mrac", list(state.theta) + [0.0], gamma + [0.0], sign_bp=-1)
    scalar = ScalarAdaptiveController(scalar_state, ScalarRefModel(a_m, -a_m))

    scenario = _step_scenario()
    t_general = run_closed_loop(LinearDelayPlant(plant_tf), general, scenario)
    t_scalar = run_closed_loop(LinearDelayPlant(plant_tf), scalar, scenario)
    assert np.max(np.abs(t_general.column("y_p") - t_scalar.column("y_p"))) <= 1e-9
    assert np.max(np.abs(t_general.theta_matrix() - t_scalar.theta_matrix()[:, :2])) <= 1e-9


def test_first_order_general_drcrm_reproduces_scalar():
    nominal = PlantNominal(a_p=-0.754, b_p=-0.989, tau=0.3)
    cfg = design_controller(nominal, ResponseTargets(), "drcrm")
    cfg.gamma = cfg.gamma[:-1] + [0.0]
    a_m, ell, dt = cfg.reference.a_m, cfg.reference.ell, cfg.dt
    rates = np.asarray(cfg.gamma[:-1])
    rates[1:-1] /= dt
    plant_tf = RationalTransfer.first_order(nominal.a_p, nominal.b_p)
    state, gens = design_general(plant_tf, RationalTransfer.first_order(a_m, -a_m), "drcrm",
                                 tau=nominal.tau, dt=dt, ell=ell, gamma=rates, projection_margin=None)
    assert gens.order == 0
    assert state.theta[0] == pytest.approx(cfg.theta0[0], rel=1e-12)
    assert state.theta[1:-1] * dt == pytest.approx(cfg.theta0[1:-2], rel=1e-12)
    assert state.theta[-1] == pytest.approx(cfg.theta0[-2], rel=1e-12)

    scenario = _step_scenario()
    t_general = run_closed_loop(LinearDelayPlant(plant_tf, nominal.tau), GeneralAdaptiveController(state, gens), scenario)
    t_scalar = run_closed_loop(LinearDelayPlant(plant_tf, nominal.tau), build_controller(cfg), scenario)
    assert not t_general.aborted and not t_scalar.aborted
    assert np.max(np.abs(t_general.column("y_p") - t_scalar.column("y_p"))) <= 1e-9
    assert np.max(np.abs(t_general.column("u") - t_scalar.column("u"))) <= 1e-9


def test_first_order_drcrm_without_delay_is_crm():
    plant_tf = RationalTransfer.first_order(-1.0, -2.0)
    ref_tf = RationalTransfer.first_order(-2.0, 2.0)
    crm_state, crm_gens = design_general(plant_tf, ref_tf, "crm", gamma=[0.4, 0.3], ell=1.5, projection_margin=None)
    dr_state, dr_gens = design_general(plant_tf, ref_tf, "drcrm", tau=0.0, gamma=[0.4, 0.3], ell=1.5,
                                       projection_margin=None)
    assert dr_state.m == 0
    assert dr_state.theta.size == crm_state.theta.size
    start = 0.5 * crm_state.theta
    crm_state.theta, dr_state.theta = start.copy(), start.copy()

    scenario = _step_scenario()
    t_crm = run_closed_loop(LinearDelayPlant(plant_tf), GeneralAdaptiveController(crm_state, crm_gens), scenario)
    t_dr = run_closed_loop(LinearDelayPlant(plant_tf), GeneralAdaptiveController(dr_state, dr_gens), scenario)
    for name in ("y_p", "u"):
        assert np.max(np.abs(t_crm.column(name) - t_dr.column(name))) <= 1e-9
    assert np.max(np.abs(t_crm.theta_matrix() - t_dr.theta_matrix())) <= 1e-9
