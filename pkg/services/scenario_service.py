import asyncio
import configparser
import io
import math
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from config.scenarios import BUILTIN_SCENARIOS
from config.settings import settings
from core.errors import ConfigurationError, ScenarioParseError, SimulationDivergedError
from models.controller import DitherKind, RcescConfig, configuration_error
from models.scenario import ControllerKind, PlantKind, RcescSection, Scenario
from models.trace import RunResult, SimulationTrace, SummaryReport
from services.esc_service import EscController
from services.plant_service import (
    ControllerOutput,
    SampledDataLoop,
    StaticMap,
    StaticMapPlant,
    VanDerPolPlant,
    run_loop,
)
from services.rcesc_service import RcescController
from utils.logger import get_logger

logger = get_logger(__name__)

SECTIONS = ("scenario", "plant", "sim", "rcac", "kf", "rcesc", "dither", "esc", "constant", "output")

COST_THRESHOLDS = (1e-1, 1e-2)


def threshold_label(threshold: float) -> str:
    return f"{threshold:.0e}"


class ConstantController:
    """Holds one input forever; the open-loop baseline."""
    name = "constant"

    def __init__(self, value: Sequence[float]):
        self.value = np.asarray(value, dtype=float).copy()
        self.input_dim = self.value.size

    def step(self, cost: np.ndarray, k: int) -> ControllerOutput:
        return ControllerOutput(u=self.value.copy())


def summarize_trace(
    trace: SimulationTrace,
    scenario: str,
    controller: str,
    error: Optional[str] = None,
    diverged_at_step: Optional[int] = None,
) -> SummaryReport:
    """Summary metrics computed from the trace rows alone."""
    n = len(trace)
    report = SummaryReport(
        scenario=scenario,
        controller=controller,
        steps=n,
        sample_time=trace.sample_time,
        time_below={threshold_label(x): None for x in COST_THRESHOLDS},
        error=error,
        diverged_at_step=diverged_at_step,
    )
    if n == 0:
        return report

    cost = trace.signal("J").sum(axis=1)
    u = trace.signal("u")
    window = -(-n // 10)

    time_below = {}
    for threshold in COST_THRESHOLDS:
        below = np.nonzero(cost < threshold)[0]
        time_below[threshold_label(threshold)] = trace.t[below[0]] if below.size else None

    dither = trace.signal("d")
    return report.model_copy(
        update={
            "terminal_cost": float(cost[-1]),
            "time_below": time_below,
            "final_window_u_peak_to_peak": float(np.max(np.ptp(u[-window:], axis=0))),
            "final_window_max_dither": float(np.max(np.abs(dither[-window:]))) if dither.size else None,
            "final_input": u[-1].tolist(),
        }
    )


def _format_value(value) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_format_value(item) for item in value)
    return str(value)


def _error_line(error: configparser.Error) -> Optional[int]:
    line = getattr(error, "lineno", None)
    if line is None and getattr(error, "errors", None):
        line = error.errors[0][0]
    return line


class ScenarioService:
    def list_builtins(self) -> List[Tuple[str, str]]:
        """(name, description) for every built-in scenario."""
        return [(name, self.parse_scenario(text, origin=name).description or "") for name, text in BUILTIN_SCENARIOS.items()]

    def load_scenario(self, source: str) -> Scenario:
        """Built-in name, path to a scenario file, or a file in the scenario directory."""
        if source in BUILTIN_SCENARIOS:
            return self.parse_scenario(BUILTIN_SCENARIOS[source], origin=f"<builtin {source}>")

        candidates = [Path(source), Path(settings.SCENARIO_DIR) / source, Path(settings.SCENARIO_DIR) / f"{source}.ini"]
        for path in candidates:
            if path.is_file():
                return self.parse_scenario(path.read_text(), origin=str(path))
        raise ConfigurationError(f"no built-in scenario or file named {source!r}", field="scenario")

    def parse_scenario(self, text: str, origin: str = "<string>") -> Scenario:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        try:
            parser.read_string(text, source=origin)
        except configparser.Error as e:
            raise ScenarioParseError(str(e).splitlines()[0], line=_error_line(e)) from e

        unknown = [name for name in parser.sections() if name not in SECTIONS]
        if unknown:
            raise ConfigurationError(f"unknown section [{unknown[0]}]", field=unknown[0])
        if not parser.has_section("scenario"):
            raise ScenarioParseError(f"{origin} has no [scenario] section")

        data = dict(parser["scenario"])
        for name in parser.sections():
            if name != "scenario":
                data[name] = dict(parser[name])
        try:
            return Scenario.model_validate(data)
        except ValidationError as e:
            raise configuration_error(e) from e

    def serialize_scenario(self, scenario: Scenario) -> str:
        """Scenario file text that parses back to an equal Scenario."""
        data = scenario.model_dump(exclude_none=True)
        parser = configparser.ConfigParser(interpolation=None)
        parser["scenario"] = {key: _format_value(value) for key, value in data.items() if not isinstance(value, dict)}
        for name in SECTIONS[1:]:
            section = data.get(name)
            if not isinstance(section, dict):
                continue
            if name == "plant":
                section["reference"] = "; ".join(
                    f"{piece['start']!r}:{_format_value(piece['value'])}" for piece in section["reference"]
                )
            parser[name] = {key: _format_value(value) for key, value in section.items()}
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    def rcesc_config(self, scenario: Scenario) -> RcescConfig:
        m = scenario.plant.input_dim
        rcac, kf = scenario.rcac, scenario.kf
        options = scenario.rcesc or RcescSection()
        try:
            return RcescConfig.model_validate(
                {
                    "nu": options.nu,
                    "eps": options.eps,
                    "rcac": {**rcac.model_dump(), "m": m, "p": 1, "l_f": m},
                    "kf": {**kf.model_dump(), "m": m, "channels": 1},
                    "dither": scenario.dither_schedule,
                }
            )
        except ValidationError as e:
            raise configuration_error(e) from e

    def build_plant(self, scenario: Scenario):
        spec = scenario.plant
        if spec.kind is PlantKind.VAN_DER_POL:
            return VanDerPolPlant(state=np.asarray(spec.initial_state), window=spec.window)
        return StaticMapPlant(StaticMap(spec.kind, spec.reference), initial_input=spec.initial_input)

    def esc_step_size(self, scenario: Scenario) -> float:
        return scenario.esc.sample_time or scenario.sim.sample_time

    def build_loop(self, scenario: Scenario, controller: ControllerKind) -> SampledDataLoop:
        try:
            scenario.require(controller)
        except ValueError as e:
            raise ConfigurationError(str(e), field=controller.value) from e

        sim = scenario.sim
        tag = f"{scenario.name}/{controller.value}"
        initial_input = scenario.plant.initial_input
        sample_time, horizon, substeps = sim.sample_time, sim.horizon, sim.substeps

        if controller is ControllerKind.RCESC:
            cfg = self.rcesc_config(scenario)
            if cfg.dither.kind is DitherKind.NONE:
                logger.warning(f"[{tag}] No dither configured, the gradient estimate relies on the controller's own motion")
            if sim.horizon < cfg.kf.depth:
                logger.warning(f"[{tag}] Horizon {sim.horizon} is shorter than the KF lag depth {cfg.kf.depth}")
            law = RcescController(cfg, sim.sample_time, initial_input, tag=tag)
        elif controller is ControllerKind.ESC:
            # Same simulated duration at the ESC rate
            sample_time = self.esc_step_size(scenario)
            horizon = max(1, round(sim.horizon * sim.sample_time / sample_time))
            substeps = max(1, math.ceil(sim.substeps * sample_time / sim.sample_time))
            law = EscController(scenario.esc, sample_time, initial_input)
        else:
            value = scenario.constant.value if scenario.constant is not None and scenario.constant.value else None
            if value is None:
                value = initial_input if initial_input is not None else (0.0,) * scenario.plant.input_dim
            law = ConstantController(value)

        return SampledDataLoop(
            plant=self.build_plant(scenario),
            controller=law,
            sample_time=sample_time,
            horizon=horizon,
            substeps=substeps,
            tag=tag,
        )

    def run_scenario(self, scenario: Scenario, controller: Optional[ControllerKind] = None) -> RunResult:
        """
        Run one controller on the scenario. Divergence does not raise: the
        partial trace comes back with the error recorded in the summary.
        """
        kind = controller or scenario.controller
        loop = self.build_loop(scenario, kind)
        error, step = None, None
        try:
            trace = run_loop(loop)
        except SimulationDivergedError as e:
            trace = e.trace if e.trace is not None else SimulationTrace(sample_time=loop.sample_time)
            error, step = str(e), e.step
            logger.warning(f"[{loop.tag}] Run stopped after {len(trace)} samples")

        summary = summarize_trace(trace, scenario.name, kind.value, error=error, diverged_at_step=step)
        logger.info(f"[{loop.tag}] Terminal cost {summary.terminal_cost}")
        return RunResult(trace=trace, summary=summary)

    async def run_many(self, jobs: Iterable[Tuple[Scenario, ControllerKind]]) -> List[RunResult]:
        semaphore = asyncio.Semaphore(settings.MAX_CONCURRENT_RUNS)

        async def run_one(scenario: Scenario, controller: ControllerKind) -> RunResult:
            async with semaphore:
                return await asyncio.to_thread(self.run_scenario, scenario, controller)

        jobs = list(jobs)
        results = await asyncio.gather(*(run_one(s, c) for s, c in jobs), return_exceptions=True)
        for (scenario, controller), result in zip(jobs, results):
            if isinstance(result, BaseException):
                logger.error(f"[{scenario.name}/{controller.value}] Run failed: {result}")
                raise result
        return list(results)

    def compare(self, scenario: Scenario) -> List[RunResult]:
        """ESC baseline and RC/ESC on the same scenario, run concurrently."""
        return asyncio.run(self.run_many([(scenario, ControllerKind.ESC), (scenario, ControllerKind.RCESC)]))


scenario_service = ScenarioService()
