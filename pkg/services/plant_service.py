from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from core.errors import ConfigurationError, SimulationDivergedError, ToolkitError
from models.scenario import DEFAULT_VDP_STATE, DEFAULT_WINDOW, PlantKind, ReferencePiece
from models.trace import SimulationTrace
from utils.logger import get_logger

logger = get_logger(__name__)


class StaticMap:
    """
    Quadratic cost J = ||u - r(t)||^2 with a piecewise-constant reference.

    A piece applies for t strictly after its start, so a switch at 500 s
    takes effect from the first sample after 500 s.
    """

    def __init__(self, kind: PlantKind, reference: Sequence[ReferencePiece]):
        if not kind.is_static:
            raise ConfigurationError(f"{kind.value} is not a static map", field="plant.kind")
        if not reference:
            raise ConfigurationError("a static map needs at least one reference piece", field="plant.reference")
        for piece in reference:
            if len(piece.value) != kind.input_dim:
                raise ConfigurationError(
                    f"reference value {piece.value} has {len(piece.value)} components, expected {kind.input_dim}",
                    field="plant.reference",
                )
        self.kind = kind
        self.input_dim = kind.input_dim
        self.pieces = sorted(reference, key=lambda piece: piece.start)
        self._values = [np.asarray(piece.value, dtype=float) for piece in self.pieces]

    def reference_at(self, t: float) -> np.ndarray:
        current = self._values[0]
        for piece, value in zip(self.pieces[1:], self._values[1:]):
            if piece.start < t:
                current = value
            else:
                break
        return current


def eval_static_map(static_map: StaticMap, u: np.ndarray, t: float) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (static_map.input_dim,):
        raise ConfigurationError(
            f"input has shape {u.shape}, expected ({static_map.input_dim},)", field="u"
        )
    error = u - static_map.reference_at(t)
    return np.array([float(error @ error)])


class Plant(Protocol):
    input_dim: int
    cost_dim: int

    def sample(self, t: float) -> np.ndarray:
        """Measured cost at sample time t."""

    def hold(self, u: np.ndarray, dt: float, substeps: int, step: int) -> None:
        """Apply u with zero-order hold over the next dt seconds."""

    def observe(self) -> Optional[np.ndarray]:
        """Plant state for the trace, None for memoryless plants."""


class StaticMapPlant:
    """Static map sampled with the input held since the previous sample."""
    cost_dim = 1

    def __init__(self, static_map: StaticMap, initial_input: Optional[Sequence[float]] = None):
        self.static_map = static_map
        self.input_dim = static_map.input_dim
        held = np.zeros(self.input_dim) if initial_input is None else np.asarray(initial_input, dtype=float)
        self.held = held.copy()

    def sample(self, t: float) -> np.ndarray:
        return eval_static_map(self.static_map, self.held, t)

    def hold(self, u: np.ndarray, dt: float, substeps: int, step: int) -> None:
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise SimulationDivergedError("non-finite input applied to static map", step=step, block="plant")
        self.held = u.copy()

    def observe(self) -> Optional[np.ndarray]:
        return None


def _vdp_rhs(x: np.ndarray, gains: np.ndarray) -> np.ndarray:
    x1, x2 = x
    return np.array([x2, -x1 - (x2 * x2 - 1.0) * x2 + gains[0] * x1 + gains[1] * x2])


@dataclass
class VanDerPolPlant:
    """
    Self-excited oscillator with state-feedback gains (K1, K2) as the input.
    The cost is the moving population standard deviation of each state over
    the last `window` seconds, summed. States are recorded at every RK4
    substep, so the window covers the same span whatever rate drives it.
    """
    state: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_VDP_STATE, dtype=float))
    window: float = DEFAULT_WINDOW
    gains: np.ndarray = field(default_factory=lambda: np.zeros(2))
    input_dim: int = 2
    cost_dim: int = 1

    def __post_init__(self):
        if not self.window > 0:
            raise ConfigurationError("cost window must be positive", field="plant.window")
        self.state = np.asarray(self.state, dtype=float).copy()
        if self.state.shape != (2,):
            raise ConfigurationError("Van der Pol state has two components", field="plant.initial_state")
        self.x1_window: deque = deque([float(self.state[0])])
        self.x2_window: deque = deque([float(self.state[1])])

    def record(self, x: np.ndarray, h: float) -> None:
        """Append one substep state; the buffers hold round(window / h) of them."""
        n = max(1, round(self.window / h))
        if self.x1_window.maxlen != n:
            self.x1_window = deque(self.x1_window, maxlen=n)
            self.x2_window = deque(self.x2_window, maxlen=n)
        self.x1_window.append(float(x[0]))
        self.x2_window.append(float(x[1]))

    def sample(self, t: float) -> np.ndarray:
        return np.array([vdp_cost(self)])

    def hold(self, u: np.ndarray, dt: float, substeps: int, step: int) -> None:
        step_vdp(self, u, dt, substeps, step=step)

    def observe(self) -> Optional[np.ndarray]:
        return self.state.copy()


def step_vdp(
    plant: VanDerPolPlant,
    gains: np.ndarray,
    dt: float,
    substeps: int,
    step: Optional[int] = None,
) -> np.ndarray:
    """Advance the oscillator by dt with fixed-step RK4, gains held constant."""
    if dt <= 0 or substeps < 1:
        raise ConfigurationError("dt must be positive and substeps at least 1", field="sim")
    gains = np.asarray(gains, dtype=float).copy()
    if gains.shape != (2,):
        raise ConfigurationError("Van der Pol input is the gain pair (K1, K2)", field="u")
    plant.gains = gains

    h = dt / substeps
    x = plant.state.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(substeps):
            a = _vdp_rhs(x, gains)
            b = _vdp_rhs(x + 0.5 * h * a, gains)
            c = _vdp_rhs(x + 0.5 * h * b, gains)
            d = _vdp_rhs(x + h * c, gains)
            x = x + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            plant.record(x, h)
    if not np.all(np.isfinite(x)):
        raise SimulationDivergedError("Van der Pol state is no longer finite", step=step, block="plant")
    plant.state = x
    return x.copy()


def vdp_cost(plant: VanDerPolPlant) -> float:
    return float(np.std(plant.x1_window) + np.std(plant.x2_window))


class Controller(Protocol):
    name: str
    input_dim: int

    def step(self, cost: np.ndarray, k: int) -> "ControllerOutput":
        """Consume J_k and return the input u_k to hold over [k T_s, (k+1) T_s)."""


@dataclass
class ControllerOutput:
    u: np.ndarray
    delta_u: Optional[np.ndarray] = None
    dither: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None
    gradient: Optional[np.ndarray] = None


@dataclass
class SampledDataLoop:
    plant: Plant
    controller: Controller
    sample_time: float
    horizon: int
    substeps: int = 1
    tag: str = "loop"


def run_loop(loop: SampledDataLoop) -> SimulationTrace:
    """
    Run sample k = 0..horizon-1: sample J_k, ask the controller for u_k,
    record the row, then hold u_k across the next interval.

    Failures during stepping come back as SimulationDivergedError carrying the
    step index and the rows recorded so far.
    """
    if loop.horizon < 1:
        raise ConfigurationError("horizon must be at least 1", field="sim.horizon")
    if loop.sample_time <= 0:
        raise ConfigurationError("sample time must be positive", field="sim.sample_time")
    if loop.substeps < 1:
        raise ConfigurationError("substeps must be at least 1", field="sim.substeps")
    if loop.controller.input_dim != loop.plant.input_dim:
        raise ConfigurationError(
            f"controller drives {loop.controller.input_dim} inputs, plant takes {loop.plant.input_dim}",
            field="plant.kind",
        )

    trace = SimulationTrace(sample_time=loop.sample_time)
    logger.info(f"[{loop.tag}] Running {loop.horizon} samples at T_s={loop.sample_time}")
    for k in range(loop.horizon):
        t = k * loop.sample_time
        try:
            cost = loop.plant.sample(t)
            out = loop.controller.step(cost, k)
            if not np.all(np.isfinite(out.u)):
                raise SimulationDivergedError("control input is no longer finite", block=loop.controller.name)
            trace.append(
                t,
                u=out.u,
                delta_u=out.delta_u,
                d=out.dither,
                J=cost,
                z=out.z,
                theta=out.theta,
                grad=out.gradient,
                x=loop.plant.observe(),
            )
            loop.plant.hold(out.u, loop.sample_time, loop.substeps, k)
        except SimulationDivergedError as e:
            if e.step is None:
                e.step = k
            e.trace = trace
            logger.error(f"[{loop.tag}] {e}")
            raise
        except ConfigurationError:
            raise
        except ToolkitError as e:
            logger.error(f"[{loop.tag}] {e.message} at step {k}")
            raise SimulationDivergedError(
                e.message, step=k, block=getattr(e, "block", None), trace=trace
            ) from e

    logger.info(f"[{loop.tag}] Finished {len(trace)} samples")
    return trace
