import json

import numpy as np
import pytest

from config.scenarios import EXAMPLE2_SCENARIO
from core.errors import TraceWriteError
from models.trace import SimulationTrace, column_name, column_signal
from services.scenario_service import scenario_service, summarize_trace
from services.storage_service import storage_service


@pytest.fixture
def short_example2():
    scenario = scenario_service.parse_scenario(EXAMPLE2_SCENARIO.replace("horizon = 1000", "horizon = 12"))
    return scenario_service.run_scenario(scenario)


def test_columns_follow_signal_layout(short_example2, tmp_path):
    path = storage_service.export_csv(short_example2.trace, tmp_path / "example2_rcesc.csv")
    header = path.read_text().splitlines()[0].split(",")
    expected = (
        ["t_seconds", "u_1[input]", "u_2[input]", "delta_u_1[input]", "delta_u_2[input]", "d_1[input]", "d_2[input]"]
        + ["J_1[cost]", "z_1[1]", "theta_1[1]", "theta_2[1]", "grad_1[cost/input]", "grad_2[cost/input]"]
    )
    assert header == expected
    assert len(path.read_text().splitlines()) == 13


def test_reloaded_trace_gives_the_same_summary(short_example2, tmp_path):
    path = storage_service.export_csv(short_example2.trace, tmp_path / "trace.csv")
    reloaded = storage_service.load_trace(path, sample_time=1.0)
    for name in short_example2.trace.signal_names():
        assert np.array_equal(reloaded.signal(name), short_example2.trace.signal(name))
    assert summarize_trace(reloaded, "example2", "rcesc") == short_example2.summary


def test_empty_trace_writes_header_only(tmp_path):
    path = storage_service.export_csv(SimulationTrace(sample_time=1.0), tmp_path / "empty.csv")
    assert path.read_text() == "t_seconds\n"


def test_error_footer(tmp_path):
    trace = SimulationTrace(sample_time=1.0)
    trace.append(0.0, u=np.array([1.0]))
    path = storage_service.export_csv(trace, tmp_path / "diverged.csv", error="boom (block=plant, step=1)")
    assert path.read_text().splitlines()[-1] == "# error: boom (block=plant, step=1)"
    assert len(storage_service.load_trace(path, sample_time=1.0)) == 1


def test_unwritable_destination(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(TraceWriteError) as info:
        storage_service.export_csv(SimulationTrace(sample_time=1.0), blocker / "trace.csv")
    assert info.value.exit_code == 3


def test_summaries_are_json(short_example2, tmp_path):
    path = storage_service.write_summaries([short_example2.summary], tmp_path / "summary.json")
    payload = json.loads(path.read_text())
    assert payload[0]["scenario"] == "example2"
    assert payload[0]["steps"] == 12


def test_rerun_writes_identical_bytes(tmp_path):
    scenario = scenario_service.load_scenario("example1")
    first = storage_service.export_csv(scenario_service.run_scenario(scenario).trace, tmp_path / "a.csv")
    second = storage_service.export_csv(scenario_service.run_scenario(scenario).trace, tmp_path / "b.csv")
    assert first.read_bytes() == second.read_bytes()


def test_column_units():
    assert column_name("x", 2) == "x_2[1]"
    assert column_name("extra", 1) == "extra_1"
    assert column_signal("delta_u_2[input]") == "delta_u"
    assert column_signal("grad_1[cost/input]") == "grad"
    assert column_signal("extra_1") == "extra"
