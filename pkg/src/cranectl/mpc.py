"""Constrained receding-horizon tracking controller.

Predictions over H_p steps are linear in the move sequence
dU = (du(k), ..., du(k+H_u-1)); inputs are held after the control horizon
and the disturbance estimate is held over the prediction horizon:

    Y = Psi x + Gamma u(k-1) + Theta dU + Xi F

The tracking cost sum |y - r|_Q^2 + |du|_R^2 gives a QP in dU with input
bounds (cumulative sums of moves) and workspace bounds (through Theta).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import Infeasible, InvalidParameter, MaxIterations
from .model import DiscretePlantModel
from .observer import StateObserver, state_observer_step  # noqa: F401  (re-export)
from .qp import solve_qp


@dataclass(frozen=True)
class MpcConfig:
    H_p: int = 20
    H_u: int = 3
    Q: tuple[float, float, float] = (5000.0, 5000.0, 5000.0)
    R: tuple[float, float, float] = (1e-3, 1e-3, 1e-3)
    u_min: tuple[float, float, float] = (-24.0, -24.0, -24.0)
    u_max: tuple[float, float, float] = (24.0, 24.0, 24.0)
    y_min: tuple[float, float, float] = (0.0, 0.0, 1e-3)
    y_max: tuple[float, float, float] = (0.6, 0.6, 0.6)
    output_constraints: bool = True
    tol: float = 1e-9
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.H_p >= self.H_u >= 1:
            raise InvalidParameter("need H_p >= H_u >= 1")
        if min(self.Q) < 0 or min(self.R) < 0 or max(self.Q) == 0:
            raise InvalidParameter("weights must be >= 0 with Q not all zero")
        if any(lo >= hi for lo, hi in zip(self.u_min, self.u_max)):
            raise InvalidParameter("u_min must be < u_max")
        if any(lo >= hi for lo, hi in zip(self.y_min, self.y_max)):
            raise InvalidParameter("y_min must be < y_max")


@dataclass(frozen=True)
class PredictionMatrices:
    Psi: np.ndarray
    Gamma: np.ndarray
    Theta: np.ndarray
    Xi: np.ndarray
    H_p: int
    H_u: int


@dataclass
class MpcState:
    u_prev: np.ndarray = field(default_factory=lambda: np.zeros(3))
    last_dU: np.ndarray | None = None
    fallbacks: int = 0


@dataclass
class MpcDiagnostics:
    status: str
    active: int
    cost: float
    fallback: bool
    iterations: int = 0


def build_prediction(model: DiscretePlantModel, H_p: int, H_u: int) -> PredictionMatrices:
    if not H_p >= H_u >= 1:
        raise InvalidParameter("need H_p >= H_u >= 1")
    A, B, W, C = model.A, model.B, model.W_d, model.C
    ny, nx = C.shape
    nu = B.shape[1]
    nd = W.shape[1]
    powers = [np.eye(nx)]
    for _ in range(H_p):
        powers.append(A @ powers[-1])
    # S[i] = sum_{p<i} A^p B
    S = [np.zeros((nx, nu))]
    for i in range(1, H_p + 1):
        S.append(S[-1] + powers[i - 1] @ B)
    Psi = np.zeros((ny * H_p, nx))
    Gamma = np.zeros((ny * H_p, nu))
    Theta = np.zeros((ny * H_p, nu * H_u))
    Xi = np.zeros((ny * H_p, nd * H_p))
    for i in range(1, H_p + 1):
        r = slice(ny * (i - 1), ny * i)
        Psi[r] = C @ powers[i]
        Gamma[r] = C @ S[i]
        for j in range(min(i, H_u)):
            Theta[r, nu * j:nu * (j + 1)] = C @ S[i - j]
        for j in range(i):
            Xi[r, nd * j:nd * (j + 1)] = C @ powers[i - 1 - j] @ W
    return PredictionMatrices(Psi, Gamma, Theta, Xi, H_p, H_u)


def lift_disturbance(f_hat: Sequence[float], H_p: int) -> np.ndarray:
    return np.tile(np.asarray(f_hat, dtype=float), H_p)


def free_response(mats: PredictionMatrices, x_hat: np.ndarray, u_prev: np.ndarray,
                  F: np.ndarray) -> np.ndarray:
    return mats.Psi @ x_hat + mats.Gamma @ u_prev + mats.Xi @ F


def build_constraints(mats: PredictionMatrices, cfg: MpcConfig, x_hat: np.ndarray,
                      u_prev: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stack input and (optionally) workspace rows as W dU <= w."""
    nu = len(u_prev)
    Hu, Hp = mats.H_u, mats.H_p
    Omega = np.kron(np.tril(np.ones((Hu, Hu))), np.eye(nu))
    Umax = np.tile(cfg.u_max, Hu)
    Umin = np.tile(cfg.u_min, Hu)
    I1 = np.tile(u_prev, Hu)
    rows = [Omega, -Omega]
    rhs = [Umax - I1, -Umin + I1]
    if cfg.output_constraints:
        free = free_response(mats, x_hat, u_prev, F)
        rows += [mats.Theta, -mats.Theta]
        rhs += [np.tile(cfg.y_max, Hp) - free, -np.tile(cfg.y_min, Hp) + free]
    return np.vstack(rows), np.concatenate(rhs)


def qp_matrices(mats: PredictionMatrices, cfg: MpcConfig, x_hat: np.ndarray,
                u_prev: np.ndarray, Y_ref: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Qb = np.tile(cfg.Q, mats.H_p)
    Rb = np.tile(cfg.R, mats.H_u)
    E = free_response(mats, x_hat, u_prev, F) - np.ravel(Y_ref)
    TQ = mats.Theta.T * Qb
    H = TQ @ mats.Theta + np.diag(Rb)
    g = TQ @ E
    return 0.5 * (H + H.T), g


class MpcController:
    def __init__(self, model: DiscretePlantModel, cfg: MpcConfig | None = None,
                 u0: Sequence[float] = (0.0, 0.0, 0.0)):
        self.model = model
        self.cfg = cfg or MpcConfig()
        self.mats = build_prediction(model, self.cfg.H_p, self.cfg.H_u)
        self.state = MpcState(np.array(u0, dtype=float))

    def step(self, x_hat: np.ndarray, Y_ref: np.ndarray,
             f_hat: Sequence[float]) -> tuple[np.ndarray, MpcDiagnostics]:
        return mpc_step(self.state, x_hat, Y_ref, f_hat, self.cfg, self.mats)


def _snap(u: np.ndarray, cfg: MpcConfig, tol: float = 1e-9) -> np.ndarray:
    lo, hi = np.asarray(cfg.u_min), np.asarray(cfg.u_max)
    u = np.where(np.abs(u - hi) <= tol * np.maximum(1.0, np.abs(hi)), hi, u)
    return np.where(np.abs(u - lo) <= tol * np.maximum(1.0, np.abs(lo)), lo, u)


def mpc_step(state: MpcState, x_hat: np.ndarray, Y_ref: np.ndarray, f_hat: Sequence[float],
             cfg: MpcConfig, mats: PredictionMatrices) -> tuple[np.ndarray, MpcDiagnostics]:
    """Solve one receding-horizon problem and update ``state`` in place."""
    nu = len(state.u_prev)
    F = lift_disturbance(f_hat, mats.H_p)
    H, g = qp_matrices(mats, cfg, x_hat, state.u_prev, Y_ref, F)
    W, w = build_constraints(mats, cfg, x_hat, state.u_prev, F)
    try:
        res = solve_qp(H, g, W, w, cfg.tol, cfg.max_iter)
    except (Infeasible, MaxIterations) as exc:
        status = "infeasible" if isinstance(exc, Infeasible) else "max-iter"
        if state.last_dU is not None and len(state.last_dU) >= 2 * nu:
            du = state.last_dU[nu:2 * nu]
            # shift so a further failure uses the next planned move
            state.last_dU = np.concatenate([state.last_dU[nu:], np.zeros(nu)])
        else:
            du = np.zeros(nu)
        u = np.clip(state.u_prev + du, cfg.u_min, cfg.u_max)
        state.u_prev = u
        state.fallbacks += 1
        return u.copy(), MpcDiagnostics(status, 0, float("nan"), True)
    du = res.x[:nu]
    # active input rows land within round-off of the bound; snap them
    u = _snap(np.clip(state.u_prev + du, cfg.u_min, cfg.u_max), cfg)
    state.u_prev = u
    state.last_dU = res.x.copy()
    return u.copy(), MpcDiagnostics("optimal", len(res.active), res.objective, False,
                                    res.iterations)
