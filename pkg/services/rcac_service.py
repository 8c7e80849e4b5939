from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, block_diag, cho_factor, cho_solve

from core.errors import ConfigurationError, SimulationDivergedError
from models.controller import RcacConfig, RcacPenalty, RcacStructure
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class RcacState:
    """
    Adaptive controller state.

    Histories are newest-first: u_buf[0] is u_{k-1}, z_buf[0] is z_{k-1},
    phi_buf[0] is phi_{k-1}. `information` is P^{-1}, kept alongside P so the
    update never has to invert P itself. `delta_u` is the last controller
    output phi theta, the target of the RATE penalty.
    """
    theta: np.ndarray
    P: np.ndarray
    information: np.ndarray
    u_buf: deque
    z_buf: deque
    phi_buf: deque
    zeta: np.ndarray
    delta_u: np.ndarray
    phi: Optional[np.ndarray] = None
    resets: int = 0
    skipped: int = 0
    tag: str = field(default="rcac", repr=False)


def new_rcac_state(cfg: RcacConfig, initial_input: Optional[Sequence[float]] = None, tag: str = "rcac") -> RcacState:
    """theta_0 = 0, P_0 = p0 I, zero-filled histories."""
    n = cfg.l_theta
    u_depth = max(cfg.l_c, cfg.l_f) if cfg.structure is RcacStructure.GENERAL_IO else cfg.l_f
    z_depth = max(cfg.l_c, 2)
    u_buf = deque((np.zeros(cfg.m) for _ in range(u_depth)), maxlen=u_depth)
    if initial_input is not None:
        u_buf[0] = np.asarray(initial_input, dtype=float).copy()
    return RcacState(
        theta=np.zeros(n),
        P=cfg.p0 * np.eye(n),
        information=np.eye(n) / cfg.p0,
        u_buf=u_buf,
        z_buf=deque((np.zeros(cfg.p) for _ in range(z_depth)), maxlen=z_depth),
        phi_buf=deque((np.zeros((cfg.m, n)) for _ in range(cfg.l_f)), maxlen=cfg.l_f),
        zeta=np.zeros(cfg.p),
        delta_u=np.zeros(cfg.m),
        tag=tag,
    )


def build_regressor(state: RcacState, cfg: RcacConfig) -> np.ndarray:
    """
    Regressor phi_k (m x l_theta) from the stored histories.

    GENERAL_IO: kron of [u_{k-1} .. u_{k-l_c}, z_{k-1} .. z_{k-l_c}] with I_m,
    matching theta = vec[P_1 .. P_lc, Q_1 .. Q_lc] (column-major).
    PID: kron of [z_{k-1}, zeta_{k-1}, z_{k-1} - z_{k-2}], restricted to the
    mask, with I_m; each input channel gets its own gain per term.
    """
    if cfg.structure is RcacStructure.GENERAL_IO:
        past = [state.u_buf[i] for i in range(cfg.l_c)] + [state.z_buf[i] for i in range(cfg.l_c)]
        row = np.concatenate(past)
        phi = np.kron(row[np.newaxis, :], np.eye(cfg.m))
    else:
        z1 = float(state.z_buf[0][0])
        z2 = float(state.z_buf[1][0])
        terms = {"p": z1, "i": float(state.zeta[0]), "d": z1 - z2}
        row = np.array([terms[term] for term in cfg.pid_mask])
        phi = np.kron(row[np.newaxis, :], np.eye(cfg.m))
    state.phi = phi
    return phi


def control_output(state: RcacState, cfg: RcacConfig) -> np.ndarray:
    phi = state.phi if state.phi is not None else build_regressor(state, cfg)
    return phi @ state.theta


def retrospective_variable(
    target_model: np.ndarray,
    performance: np.ndarray,
    inputs: np.ndarray,
    regressors: np.ndarray,
    theta_hat: np.ndarray,
) -> np.ndarray:
    """z_hat = z - N (U - Phi theta_hat): the performance had theta_hat been used."""
    return performance - target_model @ (inputs - regressors @ theta_hat)


def rls_update(
    state: RcacState,
    cfg: RcacConfig,
    target_model: np.ndarray,
    performance: np.ndarray,
    inputs: np.ndarray,
    regressors: np.ndarray,
    regressor: np.ndarray,
) -> bool:
    """
    One recursive least-squares step on the retrospective cost plus the
    r_u-weighted control penalty. The penalty pulls phi theta towards zero
    (EFFORT) or towards the previous output state.delta_u (RATE).

    With A = [N Phi; phi], R = diag(I_p, r_u I_m) and Xi = P^{-1} + A'RA,
    the new covariance is Xi^{-1}, which equals P - P A' Gamma A P with
    Gamma = R - R A Xi^{-1} A' R. Returns False and leaves the state as is
    when Xi cannot be factored.
    """
    p, m = cfg.p, cfg.m
    target_model = np.asarray(target_model, dtype=float)
    if target_model.shape != (p, cfg.l_f * m):
        raise ConfigurationError(
            f"target model has shape {target_model.shape}, expected ({p}, {cfg.l_f * m})",
            field="rcac.l_f",
        )

    A = np.vstack([target_model @ regressors, regressor])
    weights = block_diag(np.eye(p), cfg.r_u * np.eye(m))
    xi = state.information + A.T @ weights @ A
    xi = 0.5 * (xi + xi.T)
    try:
        factor = cho_factor(xi)
    except LinAlgError:
        state.skipped += 1
        logger.debug(f"[{state.tag}] Xi is not positive definite, update skipped")
        return False

    P_new = cho_solve(factor, np.eye(xi.shape[0]))
    P_new = 0.5 * (P_new + P_new.T)
    innovation = np.concatenate(
        [
            performance - target_model @ (inputs - regressors @ state.theta),
            regressor @ state.theta - penalty_target(state, cfg),
        ]
    )
    theta_new = state.theta - P_new @ A.T @ weights @ innovation
    if not (np.all(np.isfinite(theta_new)) and np.all(np.isfinite(P_new))):
        raise SimulationDivergedError("RCAC coefficients are no longer finite", block="rcac")

    state.theta = theta_new
    state.P = P_new
    state.information = xi
    return True


def penalty_target(state: RcacState, cfg: RcacConfig) -> np.ndarray:
    if cfg.penalty is RcacPenalty.RATE:
        return state.delta_u
    return np.zeros(cfg.m)


def reset_covariance(state: RcacState, cfg: RcacConfig) -> None:
    """Return P to p0 I; theta is kept, so past data only survives through it."""
    n = cfg.l_theta
    state.P = cfg.p0 * np.eye(n)
    state.information = np.eye(n) / cfg.p0
    state.resets += 1
    logger.debug(f"[{state.tag}] Covariance reset ({state.resets})")


def stacked_history(state: RcacState, cfg: RcacConfig) -> tuple:
    """(U_k, Phi_k): the last l_f applied inputs and regressors, newest first."""
    inputs = np.concatenate([state.u_buf[i] for i in range(cfg.l_f)])
    regressors = np.vstack([state.phi_buf[i] for i in range(cfg.l_f)])
    return inputs, regressors


def advance_history(
    state: RcacState,
    cfg: RcacConfig,
    u: np.ndarray,
    z: np.ndarray,
    delta_u: Optional[np.ndarray] = None,
) -> None:
    """Shift in u_k, z_k and the regressor used at step k; accumulate zeta."""
    if state.phi is None:
        build_regressor(state, cfg)
    state.u_buf.appendleft(np.asarray(u, dtype=float).copy())
    state.z_buf.appendleft(np.asarray(z, dtype=float).copy())
    state.phi_buf.appendleft(state.phi.copy())
    state.zeta = state.zeta + np.asarray(z, dtype=float)
    if delta_u is not None:
        state.delta_u = np.asarray(delta_u, dtype=float).copy()
    state.phi = None
