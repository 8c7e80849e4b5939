from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from core.errors import ConfigurationError, SimulationDivergedError
from models.controller import GradKfConfig
from utils.logger import get_logger

logger = get_logger(__name__)

# Innovation covariances worse conditioned than this are not inverted
CONDITION_LIMIT = 1e12


@dataclass
class GradKfState:
    """
    Per-channel estimate x_hat = [grad J_i, b_i] and covariance.

    `inputs` holds u_{k-1}, u_{k-2}, ... and `costs` holds J_k, J_{k-1}, ...
    (newest first), each deep enough for the largest lag.
    """
    xhat: np.ndarray
    P: np.ndarray
    inputs: deque
    costs: deque
    skipped: int = 0
    tag: str = field(default="gradkf", repr=False)


def new_gradkf_state(cfg: GradKfConfig, tag: str = "gradkf") -> GradKfState:
    n = cfg.m + 1
    P = np.empty((cfg.channels, n, n))
    for i in range(cfg.channels):
        _, _, p0 = cfg.weights(i)
        P[i] = p0 * np.eye(n)
    return GradKfState(
        xhat=np.zeros((cfg.channels, n)),
        P=P,
        inputs=deque(maxlen=cfg.depth),
        costs=deque(maxlen=cfg.depth),
        tag=tag,
    )


def measurement_model(state: GradKfState, cfg: GradKfConfig) -> tuple:
    """
    Observation matrix H (rows [u_{k-1-j}', 1]) and per-channel measurements
    for j in (0, k_1, ..., k_m). Rows whose history is not there yet stay zero.
    """
    n = cfg.m + 1
    rows = (0,) + tuple(cfg.lags)
    H = np.zeros((n, n))
    G = np.zeros((cfg.channels, n))
    for r, lag in enumerate(rows):
        if lag < len(state.inputs) and lag < len(state.costs):
            H[r, : cfg.m] = state.inputs[lag]
            H[r, cfg.m] = 1.0
            G[:, r] = state.costs[lag]
    return H, G


def _update_channel(state: GradKfState, cfg: GradKfConfig, channel: int, H: np.ndarray, g: np.ndarray) -> bool:
    q, r, _ = cfg.weights(channel)
    n = cfg.m + 1
    prior = state.P[channel] + q * np.eye(n)
    S = H @ prior @ H.T + r * np.eye(n)
    S = 0.5 * (S + S.T)
    if np.linalg.cond(S) > CONDITION_LIMIT:
        state.skipped += 1
        logger.debug(f"[{state.tag}] Innovation covariance of channel {channel} is ill-conditioned, update skipped")
        return False
    try:
        factor = cho_factor(S)
    except LinAlgError:
        state.skipped += 1
        logger.debug(f"[{state.tag}] Innovation covariance of channel {channel} is not positive definite, update skipped")
        return False

    # K = prior H' S^{-1}
    gain = cho_solve(factor, H @ prior).T
    state.xhat[channel] = state.xhat[channel] + gain @ (g - H @ state.xhat[channel])
    posterior = (np.eye(n) - gain @ H) @ prior
    state.P[channel] = 0.5 * (posterior + posterior.T)
    return True


def kf_step(state: GradKfState, cfg: GradKfConfig, cost: Sequence[float], previous_input: Sequence[float]) -> np.ndarray:
    """
    Push (J_k, u_{k-1}) and run one predict/update per cost channel under the
    random-walk model. Returns the gradient estimate, channels x m.
    """
    cost = np.atleast_1d(np.asarray(cost, dtype=float))
    previous_input = np.atleast_1d(np.asarray(previous_input, dtype=float))
    if cost.shape != (cfg.channels,):
        raise ConfigurationError(f"cost has shape {cost.shape}, expected ({cfg.channels},)", field="kf.channels")
    if previous_input.shape != (cfg.m,):
        raise ConfigurationError(f"input has shape {previous_input.shape}, expected ({cfg.m},)", field="kf.m")

    state.costs.appendleft(cost.copy())
    state.inputs.appendleft(previous_input.copy())
    H, G = measurement_model(state, cfg)
    for channel in range(cfg.channels):
        _update_channel(state, cfg, channel, H, G[channel])

    if not np.all(np.isfinite(state.xhat)):
        raise SimulationDivergedError("gradient estimate is no longer finite", block="gradient_estimator")
    return gradient_estimate(state, cfg)


def gradient_estimate(state: GradKfState, cfg: GradKfConfig) -> np.ndarray:
    return state.xhat[:, : cfg.m].copy()


def kf_covariance(state: GradKfState, channel: int) -> np.ndarray:
    if not 0 <= channel < state.P.shape[0]:
        raise ConfigurationError(f"channel {channel} out of range 0..{state.P.shape[0] - 1}", field="channel")
    return state.P[channel].copy()
