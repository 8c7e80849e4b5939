import math

import numpy as np
import pytest

from core.errors import ConfigurationError
from models.controller import EscConfig, build_model
from services.esc_service import (
    EscController,
    EscState,
    esc_dither,
    esc_gradient_estimate,
    esc_step,
    washout,
)
from services.plant_service import SampledDataLoop, run_loop


def siso_config(**overrides):
    values = dict(amplitude=0.2, k_esc=0.05, omegas=(6.0,))
    values.update(overrides)
    return build_model(EscConfig, **values)


def test_gradient_estimate_demodulates_cost():
    cfg = siso_config()
    t = math.pi / 12.0  # sin(6 t) = 1
    assert esc_gradient_estimate(cfg, 1.0, t)[0] == pytest.approx(10.0)
    assert esc_dither(cfg, t)[0] == pytest.approx(0.2)


@pytest.mark.parametrize("u0, r", [(0.0, 1.0), (3.0, 1.0), (-2.0, 0.5)])
def test_demodulated_cost_averages_to_gradient(u0, r):
    cfg = siso_config(omegas=(2.0 * math.pi,))
    t = np.arange(1000) / 1000.0
    cost = (u0 + esc_dither(cfg, t) - r) ** 2
    average = np.mean((2.0 / cfg.amplitude) * cost * np.sin(2.0 * math.pi * t))
    assert average == pytest.approx(2.0 * (u0 - r), abs=1e-9)


def test_step_integrates_descent_direction():
    cfg = siso_config()
    state = EscState(integrator=np.array([0.5]), t=math.pi / 12.0)
    u, new_state = esc_step(cfg, state, 1.0, 0.1)
    assert new_state.integrator[0] == pytest.approx(0.5 - 0.1 * 0.05 * 10.0)
    assert new_state.t == pytest.approx(math.pi / 12.0 + 0.1)
    assert u[0] == pytest.approx(new_state.integrator[0] + 0.2 * math.sin(6.0 * new_state.t))


def test_zero_gain_applies_pure_dither():
    cfg = siso_config(k_esc=0.0)
    controller = EscController(cfg, dt=0.05, initial_input=[1.5])
    for k in range(20):
        out = controller.step(np.array([float(k)]), k)
        assert out.u[0] == pytest.approx(1.5 + 0.2 * math.sin(6.0 * 0.05 * (k + 1)))


def test_cost_channels_are_summed():
    cfg = siso_config()
    summed = EscController(cfg, dt=0.05)
    single = EscController(cfg, dt=0.05)
    for k in range(5):
        a = summed.step(np.array([1.0, 2.0]), k)
        b = single.step(np.array([3.0]), k)
        assert np.array_equal(a.u, b.u)


def test_step_rejects_non_positive_dt():
    with pytest.raises(ConfigurationError):
        esc_step(siso_config(), EscState(integrator=np.zeros(1)), 1.0, 0.0)


def test_rejects_non_positive_amplitude():
    with pytest.raises(ConfigurationError) as info:
        siso_config(amplitude=0.0)
    assert info.value.field == "amplitude"


def test_rejects_repeated_frequencies():
    with pytest.raises(ConfigurationError) as info:
        siso_config(omegas=(30.0, 30.0))
    assert info.value.field == "omegas"


def test_converges_near_static_minimizer(siso_plant):
    controller = EscController(siso_config(), dt=0.05)
    trace = run_loop(SampledDataLoop(plant=siso_plant, controller=controller, sample_time=0.05, horizon=2000))
    tail = trace.signal("u")[-400:, 0]
    assert np.mean(tail) == pytest.approx(1.0, abs=0.05)
    # The dither never stops
    assert np.ptp(tail) > 0.3


def test_washout_hand_example():
    cfg = siso_config(highpass=2.0)
    filtered, baseline = washout(cfg, 1.0, 3.0, 0.1)
    assert filtered == pytest.approx(2.0)
    assert baseline == pytest.approx(1.4)
    # The first sample seeds the baseline
    assert washout(cfg, None, 5.0, 0.1) == (0.0, 5.0)


def test_no_corner_demodulates_raw_cost():
    assert washout(siso_config(), None, 3.0, 0.1) == (3.0, None)


def test_washout_ignores_constant_cost():
    cfg = siso_config(highpass=1.0)
    controller = EscController(cfg, dt=0.05, initial_input=[0.7])
    for k in range(50):
        out = controller.step(np.array([4.0]), k)
        assert out.delta_u[0] == pytest.approx(0.7)
        assert np.all(out.gradient == 0.0)


def test_rejects_non_positive_corner():
    with pytest.raises(ConfigurationError) as info:
        siso_config(highpass=0.0)
    assert info.value.field == "highpass"


def test_washout_still_finds_minimizer(siso_plant):
    controller = EscController(siso_config(highpass=1.0), dt=0.05)
    trace = run_loop(SampledDataLoop(plant=siso_plant, controller=controller, sample_time=0.05, horizon=4000))
    assert np.mean(trace.signal("u")[-400:, 0]) == pytest.approx(1.0, abs=0.05)
