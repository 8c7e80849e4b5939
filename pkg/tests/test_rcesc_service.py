import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from config.scenarios import EXAMPLE2_SCENARIO
from core.errors import ConfigurationError, ContractViolationError, SimulationDivergedError
from models.controller import DitherKind, DitherSchedule, RcescConfig, build_model
from services.plant_service import SampledDataLoop, run_loop
from services.rcesc_service import RcescController, dither_value, gradient_to_target_model, normalize
from services.scenario_service import scenario_service


def test_normalize_hand_values():
    assert normalize([1.0], 0.9)[0] == pytest.approx(1.0 / 1.9)
    assert normalize([0.0], 0.9)[0] == 0.0
    assert normalize([4.0], 0.0)[0] == 4.0


def test_normalize_rejects_negative_cost():
    with pytest.raises(ContractViolationError) as info:
        normalize([-0.1], 0.5)
    assert info.value.block == "normalization"


@pytest.mark.parametrize("cost", [math.nan, math.inf])
def test_normalize_rejects_non_finite_cost(cost):
    with pytest.raises(ContractViolationError) as info:
        normalize([cost], 0.5)
    assert info.value.block == "normalization"


@given(cost=st.floats(0.0, 1e6), nu=st.floats(1e-2, 10.0))
def test_normalize_is_bounded(cost, nu):
    z = normalize([cost], nu)[0]
    assert 0.0 <= z < 1.0 / nu


def test_target_model_from_gradient():
    assert gradient_to_target_model(np.array([[3.0, 4.0]]), 1e-4).tolist() == [[0.6, 0.0, 0.0, 0.8]]
    assert gradient_to_target_model(np.array([[5e-5]]), 1e-4)[0, 0] == pytest.approx(0.5)
    assert gradient_to_target_model(np.array([[0.0, 0.0]]), 1e-4).tolist() == [[0.0, 0.0, 0.0, 0.0]]


@given(
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2),
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2),
)
def test_target_model_rows_have_at_most_unit_norm(first, second):
    target = gradient_to_target_model(np.array([first, second]), 1e-4)
    assert target.shape == (2, 4)
    assert np.all(np.linalg.norm(target, axis=1) <= 1.0 + 1e-12)
    # Only the block diagonals carry entries
    assert np.all(target[:, [1, 2]] == 0.0)


def test_dither_kinds():
    decaying = DitherSchedule(kind=DitherKind.DECAYING_SINUSOID, amplitude=(0.02,), omegas=(6.0,), tau=100.0)
    assert dither_value(decaying, 0, 1.0, 1).tolist() == [0.0]
    assert dither_value(decaying, 50, 1.0, 1)[0] == pytest.approx(0.02 * math.exp(-0.5) * math.sin(300.0))

    constant = DitherSchedule(kind=DitherKind.SINUSOID, amplitude=(0.1, 0.2), omegas=(30.0, 50.0))
    assert np.allclose(dither_value(constant, 3, 1.0, 2), [0.1 * math.sin(90.0), 0.2 * math.sin(150.0)])

    decay = DitherSchedule(kind=DitherKind.EXP_DECAY, amplitude=(1.0,), tau=10.0)
    assert dither_value(decay, 10, 1.0, 1)[0] == pytest.approx(math.exp(-1.0))

    assert dither_value(DitherSchedule(kind=DitherKind.NONE), 7, 1.0, 2).tolist() == [0.0, 0.0]


@given(k=st.integers(0, 5000), sample_time=st.sampled_from([0.05, 1.0, 5.0]))
def test_decaying_dither_stays_under_envelope(k, sample_time):
    schedule = DitherSchedule(kind=DitherKind.DECAYING_SINUSOID, amplitude=(0.02,), omegas=(3.0, 5.0), tau=500.0)
    d = dither_value(schedule, k, sample_time, 2)
    assert np.all(np.abs(d) <= 0.02 * math.exp(-k * sample_time / 500.0) + 1e-18)


def test_sinusoidal_dither_needs_frequencies():
    with pytest.raises(ConfigurationError):
        build_model(DitherSchedule, kind="sinusoid", amplitude=0.1)


def test_dither_frequency_count_must_match_inputs(example1):
    cfg = scenario_service.rcesc_config(example1)
    with pytest.raises(ConfigurationError):
        build_model(
            RcescConfig,
            rcac=cfg.rcac,
            kf=cfg.kf,
            dither=DitherSchedule(kind=DitherKind.SINUSOID, omegas=(1.0, 2.0)),
        )


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_first_input_is_zero(name):
    scenario = scenario_service.load_scenario(name)
    controller = RcescController(scenario_service.rcesc_config(scenario), scenario.sim.sample_time)
    out = controller.step(np.array([1.0]), 0)
    assert np.array_equal(out.u, np.zeros(scenario.plant.input_dim))


def test_step_reports_component_signals(example2):
    controller = RcescController(scenario_service.rcesc_config(example2), 1.0)
    for k, cost in enumerate([5.0, 4.0, 4.5, 3.0]):
        out = controller.step(np.array([cost]), k)
        assert out.z[0] == pytest.approx(cost / (1.0 + 0.2 * cost))
        assert out.gradient.shape == (2,)
        assert out.theta.shape == (2,)
        assert np.allclose(out.u, out.delta_u + out.dither)
        assert np.array_equal(out.theta, controller.rcac.theta)


def test_step_rejects_wrong_cost_size(example1):
    controller = RcescController(scenario_service.rcesc_config(example1), 1.0)
    with pytest.raises(ConfigurationError):
        controller.step(np.array([1.0, 2.0]), 0)


def test_closed_loop_stays_finite(example1, siso_plant):
    controller = RcescController(scenario_service.rcesc_config(example1), 1.0)
    trace = run_loop(SampledDataLoop(plant=siso_plant, controller=controller, sample_time=1.0, horizon=300))
    assert len(trace) == 300
    assert np.all(np.isfinite(trace.signal("u")))
    assert np.all(np.isfinite(trace.signal("theta")))


def test_dither_does_not_depend_on_the_plant():
    short = EXAMPLE2_SCENARIO.replace("horizon = 1000", "horizon = 200")
    other = short.replace("reference = 0:1,2; 500:-1,-2", "reference = 0:1.5,2.5")
    first = scenario_service.run_scenario(scenario_service.parse_scenario(short)).trace
    second = scenario_service.run_scenario(scenario_service.parse_scenario(other)).trace
    assert not np.array_equal(first.signal("J"), second.signal("J"))
    assert np.array_equal(first.signal("d"), second.signal("d"))


def test_covariance_resets_on_schedule(example1):
    cfg = scenario_service.rcesc_config(example1)
    assert cfg.rcac.reset_period == 10
    controller = RcescController(cfg, 1.0)
    for k in range(25):
        controller.step(np.array([1.0 + 0.1 * k]), k)
    # Samples 10 and 20
    assert controller.rcac.resets == 2


def test_rate_penalty_tracks_previous_output(example2):
    controller = RcescController(scenario_service.rcesc_config(example2), 1.0)
    for k, cost in enumerate([5.0, 4.0, 4.5, 3.0]):
        out = controller.step(np.array([cost]), k)
        assert np.array_equal(controller.rcac.delta_u, out.delta_u)


def test_nan_cost_stops_the_loop(example1):
    class NanPlant:
        input_dim = 1
        cost_dim = 1

        def sample(self, t):
            return np.array([np.nan]) if t >= 3.0 else np.array([1.0])

        def hold(self, u, dt, substeps, step):
            pass

        def observe(self):
            return None

    controller = RcescController(scenario_service.rcesc_config(example1), 1.0)
    with pytest.raises(SimulationDivergedError) as info:
        run_loop(SampledDataLoop(plant=NanPlant(), controller=controller, sample_time=1.0, horizon=10))
    assert info.value.step == 3
    assert info.value.block == "normalization"
