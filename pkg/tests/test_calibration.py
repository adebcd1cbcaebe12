import logging

import numpy as np
import pandas as pd
import pytest
import yaml

from pressurectl.calibration.fitting import (
    fit_first_order_delay,
    fit_inflow_polynomial,
    read_inflow_points,
    read_step_trace,
    steady_inflow,
    write_plant_section,
)
from pressurectl.plant.cats import simulate_actuator_step
from pressurectl.plant.models import ActuatorModel, GasParams, InflowPolynomial
from pressurectl.util.errors import ConfigError, FitError

KNOWN = InflowPolynomial(c3=-5e-21, c4=1e-14, c5=-2e-8, c6=0.8)


def _points_from(poly, gas, pressures):
    """Steady points (P_ss, A_t) whose balance inflow follows `poly`."""
    return [(P, gas.c1 * poly(P) / (gas.c2 * P * 1e-6)) for P in pressures]


def test_fit_recovers_known_cubic():
    gas = GasParams()
    points = _points_from(KNOWN, gas, [1.0e6, 1.5e6, 2.0e6, 2.5e6, 3.0e6])
    fit = fit_inflow_polynomial(points, gas)
    assert fit.degree == 3
    for got, want in zip(fit.polynomial.coeffs, KNOWN.coeffs):
        assert got == pytest.approx(want, rel=1e-6)


def test_four_points_interpolate_exactly():
    gas = GasParams()
    points = _points_from(KNOWN, gas, [1.0e6, 1.7e6, 2.2e6, 3.1e6])
    fit = fit_inflow_polynomial(points, gas)
    for P, A in points:
        target = steady_inflow(P, A, gas)
        assert abs(fit.polynomial(P) - target) <= 1e-9 * abs(target)


def test_flat_low_pressure_points_give_flat_fit():
    gas = GasParams()
    flat = InflowPolynomial(c6=0.8)
    points = _points_from(flat, gas, [0.5e6, 0.8e6, 1.2e6, 1.6e6])
    fit = fit_inflow_polynomial(points, gas)
    assert fit.polynomial(0.6e6) == pytest.approx(fit.polynomial(0.7e6), rel=1e-9)


def test_repeated_pressure_degrades_with_warning(caplog):
    gas = GasParams()
    points = [(1.5e6, 200.0)] * 5
    with caplog.at_level(logging.WARNING):
        fit = fit_inflow_polynomial(points, gas)
    assert fit.degree == 0
    assert fit.polynomial.c3 == 0.0 and fit.polynomial.c4 == 0.0 and fit.polynomial.c5 == 0.0
    assert fit.polynomial.c6 == pytest.approx(steady_inflow(1.5e6, 200.0, gas))
    assert "FIT_DEGRADED" in caplog.text


def test_inflow_fit_rejects_empty_or_negative():
    with pytest.raises(FitError):
        fit_inflow_polynomial([], GasParams())
    with pytest.raises(FitError):
        fit_inflow_polynomial([(-1.0, 100.0)], GasParams())


def test_actuator_fit_recovers_simulated_parameters():
    trace = simulate_actuator_step(ActuatorModel(tau_act=0.1, delay=0.3), 1000.0, duration=2.0)
    fit = fit_first_order_delay(trace, 1000.0)
    assert fit.tau_act == pytest.approx(0.1, abs=0.005)
    assert fit.delay == pytest.approx(0.3, abs=0.005)
    assert fit.y_final == pytest.approx(1000.0, rel=1e-6)


def test_actuator_fit_zero_delay():
    trace = simulate_actuator_step(ActuatorModel(tau_act=0.1, delay=0.0), 500.0, duration=1.5)
    fit = fit_first_order_delay(trace, 500.0)
    assert fit.delay <= 0.005


def test_actuator_fit_with_noise_over_seeds():
    clean = simulate_actuator_step(ActuatorModel(tau_act=0.1, delay=0.3), 1000.0, duration=4.0)
    t = np.array([p[0] for p in clean])
    y = np.array([p[1] for p in clean])
    taus = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = y + rng.normal(0.0, 10.0, size=y.size)
        taus.append(fit_first_order_delay(list(zip(t, noisy)), 1000.0).tau_act)
    assert abs(np.mean(taus) - 0.1) / 0.1 < 0.05


def test_actuator_fit_rejects_unsettled_trace():
    t = np.linspace(0.0, 1.0, 200)
    ramp = list(zip(t, 100.0 * t))
    with pytest.raises(FitError):
        fit_first_order_delay(ramp, 100.0)


def test_csv_readers_check_columns(tmp_path):
    good = tmp_path / "points.csv"
    pd.DataFrame({"P_ss": [1.0e6, 2.0e6], "A_t": [200.0, 150.0]}).to_csv(good, index=False)
    assert read_inflow_points(str(good)) == [(1.0e6, 200.0), (2.0e6, 150.0)]

    bad = tmp_path / "step.csv"
    pd.DataFrame({"t": [0.0, 0.1], "theta": [0.0, 1.0]}).to_csv(bad, index=False)
    with pytest.raises(ConfigError) as excinfo:
        read_step_trace(str(bad))
    assert "theta_mes" in str(excinfo.value)


def test_write_plant_section_keeps_comments(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(
        "# bench configuration\n"
        "plant:\n"
        "  actuator:\n"
        "    tau_act: 0.05  # s\n"
        "    delay: 0.3\n"
        "scenario:\n"
        "  duration: 10.0\n"
        "  reference:\n"
        "    - {t: 0.0, value: 0.7}\n"
    )
    write_plant_section(str(cfg), inflow=KNOWN)
    text = cfg.read_text()
    assert "# bench configuration" in text
    assert "# s" in text
    data = yaml.safe_load(text)
    assert data["plant"]["inflow"]["c6"] == pytest.approx(0.8)
    assert data["plant"]["actuator"]["tau_act"] == pytest.approx(0.05)
