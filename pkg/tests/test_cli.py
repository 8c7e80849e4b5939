import json
import sys

import pytest

from config.scenarios import EXAMPLE1_SCENARIO, EXAMPLE3_SCENARIO
from config.settings import settings
from main import main
from utils.logger import setup_logging


@pytest.fixture
def restore_logging():
    yield
    setup_logging(level=settings.LOG_LEVEL, stream=sys.__stderr__)


def test_list(capsys):
    assert main(["list"]) == 0
    assert "example3" in capsys.readouterr().out


def test_validate_builtin(capsys):
    assert main(["validate", "example2"]) == 0
    assert "ok: example2" in capsys.readouterr().out


def test_validate_rejects_bad_file(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(EXAMPLE1_SCENARIO.replace("k_esc = 0.05", "k_esc = -1"))
    assert main(["validate", str(path)]) == 1


def test_run_writes_trace_and_summary(tmp_path, capsys):
    assert main(["run", "example1", "--controller", "constant", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "example1_constant.csv").is_file()
    summary = json.loads((tmp_path / "example1_summary.json").read_text())
    assert summary[0]["terminal_cost"] == 25.0


def test_run_reports_divergence(tmp_path):
    path = tmp_path / "explode.ini"
    path.write_text(
        EXAMPLE3_SCENARIO.replace("name = example3", "name = explode")
        + "\n[constant]\nvalue = 0, 1000\n"
    )
    assert main(["run", str(path), "--controller", "constant", "--out", str(tmp_path)]) == 2
    assert (tmp_path / "explode_constant.csv").read_text().splitlines()[-1].startswith("# error:")


def test_run_reports_unwritable_output(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["run", "example1", "--controller", "constant", "--out", str(blocker)]) == 3


def test_logs_stay_off_stdout(capsys, restore_logging):
    assert main(["--log-level", "debug", "list"]) == 0
    captured = capsys.readouterr()
    assert "example1" in captured.out
    assert "rcesc-toolkit: output=" in captured.err
    assert "DEBUG" not in captured.out


def test_rejects_unknown_log_level(capsys, restore_logging):
    assert main(["--log-level", "chatty", "list"]) == 1
    assert "unknown log level" in capsys.readouterr().err
