from typing import Optional, Sequence

import numpy as np

from core.errors import ConfigurationError, ContractViolationError
from models.controller import DitherKind, DitherSchedule, RcescConfig
from services.gradkf_service import kf_step, new_gradkf_state
from services.plant_service import ControllerOutput
from services.rcac_service import (
    advance_history,
    build_regressor,
    control_output,
    new_rcac_state,
    reset_covariance,
    rls_update,
    stacked_history,
)
from utils.logger import get_logger

logger = get_logger(__name__)


def normalize(cost: Sequence[float], nu: float) -> np.ndarray:
    """z = J / (1 + nu J), elementwise; maps [0, inf) into [0, 1/nu)."""
    cost = np.atleast_1d(np.asarray(cost, dtype=float))
    if np.any(~np.isfinite(cost)) or np.any(cost < 0):
        raise ContractViolationError(f"cost must be finite and non-negative, got {cost.tolist()}", block="normalization")
    return cost / (1.0 + nu * cost)


def gradient_to_target_model(gradient: np.ndarray, eps: float) -> np.ndarray:
    """
    Target model N (p x m^2) from a p x m gradient estimate.

    Row i is scaled by its norm, or by eps when the norm is below eps;
    column i of the scaled gradient becomes the diagonal of the i-th
    m x m block of N.
    """
    gradient = np.atleast_2d(np.asarray(gradient, dtype=float))
    p, m = gradient.shape
    norms = np.linalg.norm(gradient, axis=1)
    scaled = gradient / np.where(norms >= eps, norms, eps)[:, np.newaxis]
    target = np.zeros((p, m * m))
    for i in range(m):
        target[:, i * m + i] = scaled[:, i]
    return target


def dither_value(schedule: DitherSchedule, k: int, sample_time: float, m: int) -> np.ndarray:
    t = k * sample_time
    amplitude = np.broadcast_to(np.asarray(schedule.amplitude, dtype=float), (m,))
    if schedule.kind is DitherKind.NONE:
        return np.zeros(m)
    decay = np.exp(-t / schedule.tau)
    if schedule.kind is DitherKind.EXP_DECAY:
        return amplitude * decay
    wave = np.sin(np.asarray(schedule.omegas, dtype=float) * t)
    if schedule.kind is DitherKind.SINUSOID:
        return amplitude * wave
    return amplitude * decay * wave


class RcescController:
    """
    Retrospective-cost ESC: normalization, KF gradient estimate, target
    model, RCAC and dither, evaluated in that order once per sample.
    """
    name = "rcesc"

    def __init__(
        self,
        cfg: RcescConfig,
        sample_time: float,
        initial_input: Optional[Sequence[float]] = None,
        tag: str = "rcesc",
    ):
        if sample_time <= 0:
            raise ConfigurationError("sample time must be positive", field="sim.sample_time")
        self.cfg = cfg
        self.sample_time = sample_time
        self.input_dim = cfg.rcac.m
        self.tag = tag
        start = np.zeros(self.input_dim) if initial_input is None else np.asarray(initial_input, dtype=float)
        self.previous_input = start.copy()
        self.rcac = new_rcac_state(cfg.rcac, initial_input=start, tag=tag)
        self.kf = new_gradkf_state(cfg.kf, tag=tag)

    def step(self, cost: np.ndarray, k: int) -> ControllerOutput:
        cost = np.atleast_1d(np.asarray(cost, dtype=float))
        if cost.shape != (self.cfg.rcac.p,):
            raise ConfigurationError(
                f"cost has shape {cost.shape}, expected ({self.cfg.rcac.p},)", field="plant.kind"
            )

        z = normalize(cost, self.cfg.nu)
        period = self.cfg.rcac.reset_period
        if period is not None and k > 0 and k % period == 0:
            reset_covariance(self.rcac, self.cfg.rcac)
        gradient = kf_step(self.kf, self.cfg.kf, cost, self.previous_input)
        target_model = gradient_to_target_model(gradient, self.cfg.eps)

        regressor = build_regressor(self.rcac, self.cfg.rcac)
        inputs, regressors = stacked_history(self.rcac, self.cfg.rcac)
        rls_update(self.rcac, self.cfg.rcac, target_model, z, inputs, regressors, regressor)
        delta_u = control_output(self.rcac, self.cfg.rcac)

        dither = dither_value(self.cfg.dither, k, self.sample_time, self.input_dim)
        u = delta_u + dither
        advance_history(self.rcac, self.cfg.rcac, u, z, delta_u=delta_u)
        self.previous_input = u.copy()

        return ControllerOutput(
            u=u,
            delta_u=delta_u,
            dither=dither,
            z=z,
            theta=self.rcac.theta.copy(),
            gradient=gradient.ravel(),
        )
