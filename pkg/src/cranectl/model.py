"""Discrete-time independent-joint model of the crane.

Each axis is an integrator in series with a first-order lag driven by the
motor voltage and a lumped input disturbance (load coupling plus friction).
Zero-order-hold sampling gives per-axis blocks

    A_i = [[1, T], [0, a_i]],  B_i = [0, b_i]^T,  W_i = [0, -bd_i]^T

stacked block-diagonally in the state order (x, v_x, y, v_y, l, v_l).
The disturbance column carries a minus sign: a positive disturbance torque
opposes motion, as in the axis equation J v' + B v = K u - f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, MismatchedSampleTime
from .params import CraneParameters


@dataclass(frozen=True)
class AxisDiscretization:
    a_1: float
    b_1: float
    b_d1: float
    T_s: float


@dataclass(frozen=True)
class DiscretePlantModel:
    A: np.ndarray
    B: np.ndarray
    W_d: np.ndarray
    C: np.ndarray
    T_s: float
    axes: tuple[AxisDiscretization, AxisDiscretization, AxisDiscretization]

    def axis_block(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(A_i, B_i, W_i, C_i) of axis ``i``."""
        r = slice(2 * i, 2 * i + 2)
        return (self.A[r, r], self.B[r, i:i + 1], self.W_d[r, i:i + 1],
                self.C[i:i + 1, r])

    def step(self, x: np.ndarray, u: Sequence[float], f_d: Sequence[float]) -> np.ndarray:
        return self.A @ x + self.B @ np.asarray(u, float) + self.W_d @ np.asarray(f_d, float)


def discretize_axis(J_e: float, B_e: float, K_e: float, T_s: float) -> AxisDiscretization:
    """ZOH discretization of J v' + B v = K u - f."""
    for name, val in (("J_e", J_e), ("B_e", B_e), ("K_e", K_e), ("T_s", T_s)):
        if not val > 0:
            raise InvalidParameter(f"{name} must be > 0, got {val}")
    a = math.exp(-B_e * T_s / J_e)
    return AxisDiscretization(a, K_e / B_e * (1.0 - a), (1.0 - a) / B_e, T_s)


def backward_difference_axis(J_e: float, B_e: float, K_e: float,
                             T_s: float) -> AxisDiscretization:
    """Backward-difference (implicit Euler) counterpart used by identification."""
    den = J_e + T_s * B_e
    return AxisDiscretization(J_e / den, K_e * T_s / den, T_s / den, T_s)


def assemble_model(axes: Sequence[AxisDiscretization], T_s: float | None = None) -> DiscretePlantModel:
    """Stack three axis discretizations into the 6-state model."""
    axes = tuple(axes)
    if len(axes) != 3:
        raise InvalidParameter("exactly three axes are required")
    if T_s is None:
        T_s = axes[0].T_s
    for ax in axes:
        if ax.T_s != T_s:
            raise MismatchedSampleTime(f"axis sampled at {ax.T_s}, model at {T_s}")
    A = np.zeros((6, 6))
    B = np.zeros((6, 3))
    W = np.zeros((6, 3))
    C = np.zeros((3, 6))
    for i, ax in enumerate(axes):
        A[2 * i, 2 * i] = 1.0
        A[2 * i, 2 * i + 1] = T_s
        A[2 * i + 1, 2 * i + 1] = ax.a_1
        B[2 * i + 1, i] = ax.b_1
        W[2 * i + 1, i] = -ax.b_d1
        C[i, 2 * i] = 1.0
    for arr in (A, B, W, C):
        arr.setflags(write=False)
    return DiscretePlantModel(A, B, W, C, float(T_s), axes)


def model_from_parameters(p: CraneParameters, T_s: float = 0.01,
                          include_load: bool = False) -> DiscretePlantModel:
    """Model of the crane axes.

    The load is normally part of the disturbance channel.  With
    ``include_load`` the hoist inertia is raised by r_g R_p m, the rigid
    part of the load reaction.
    """
    axes = []
    for i, ax in enumerate(p.axes):
        J = ax.J_e + (ax.ratio * p.m if include_load and i == 2 else 0.0)
        axes.append(discretize_axis(J, ax.B_e, ax.K_e, T_s))
    return assemble_model(axes, T_s)


def controllability_rank(A: np.ndarray, B: np.ndarray) -> int:
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocks)))


def observability_rank(A: np.ndarray, C: np.ndarray) -> int:
    return controllability_rank(A.T, C.T)
