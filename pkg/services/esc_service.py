from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from core.errors import ConfigurationError, SimulationDivergedError
from models.controller import EscConfig
from services.plant_service import ControllerOutput
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class EscState:
    integrator: np.ndarray
    t: float = 0.0
    # Low-passed cost removed by the washout; starts at the first sample
    baseline: Optional[float] = None


def esc_dither(cfg: EscConfig, t: float) -> np.ndarray:
    return cfg.amplitude * np.sin(np.asarray(cfg.omegas) * t)


def esc_gradient_estimate(cfg: EscConfig, cost: float, t: float) -> np.ndarray:
    """Demodulated cost (2/a) J sin(w t), one component per input."""
    return (2.0 / cfg.amplitude) * cost * np.sin(np.asarray(cfg.omegas) * t)


def washout(cfg: EscConfig, baseline: Optional[float], cost: float, dt: float) -> Tuple[float, Optional[float]]:
    """
    High-pass the cost with a forward-Euler first-order filter at
    cfg.highpass rad/s. Returns (filtered cost, next baseline); without a
    corner frequency the cost passes through.
    """
    if cfg.highpass is None:
        return cost, baseline
    if baseline is None:
        baseline = cost
    return cost - baseline, baseline + dt * cfg.highpass * (cost - baseline)


def esc_step(cfg: EscConfig, state: EscState, cost: float, dt: float) -> Tuple[np.ndarray, EscState]:
    """
    One forward-Euler step of the descent integrator.

    Returns the input to apply until the next step, dither included.
    """
    if dt <= 0:
        raise ConfigurationError("ESC step must be positive", field="esc.sample_time")
    filtered, baseline = washout(cfg, state.baseline, cost, dt)
    gradient = esc_gradient_estimate(cfg, filtered, state.t)
    integrator = state.integrator - dt * cfg.k_esc * gradient
    t_next = state.t + dt
    u = integrator + esc_dither(cfg, t_next)
    if not np.all(np.isfinite(u)):
        raise SimulationDivergedError("ESC input is no longer finite", block="esc")
    return u, EscState(integrator=integrator, t=t_next, baseline=baseline)


class EscController:
    """Sinusoidal-perturbation ESC driven at a fixed controller step."""
    name = "esc"

    def __init__(self, cfg: EscConfig, dt: float, initial_input: Optional[Sequence[float]] = None):
        self.cfg = cfg
        self.dt = dt
        self.input_dim = cfg.m
        start = np.zeros(cfg.m) if initial_input is None else np.asarray(initial_input, dtype=float)
        self.state = EscState(integrator=start.copy())

    def step(self, cost: np.ndarray, k: int) -> ControllerOutput:
        # Multi-channel costs are descended on their sum
        total = float(np.sum(cost))
        filtered, _ = washout(self.cfg, self.state.baseline, total, self.dt)
        gradient = esc_gradient_estimate(self.cfg, filtered, self.state.t)
        u, self.state = esc_step(self.cfg, self.state, total, self.dt)
        return ControllerOutput(
            u=u,
            delta_u=self.state.integrator.copy(),
            dither=esc_dither(self.cfg, self.state.t),
            gradient=gradient,
        )
