"""Axis state observer shared by both tracking controllers.

    x(k+1|k) = (A - L C) x(k|k-1) + B u(k) + W_d f(k) + L y(k)
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import DiscretePlantModel

# per-axis observer gains [l_1, l_2] for (x, y, l)
TABLE_L = ((0.429, 0.265), (0.415, 0.277), (0.435, 0.297))


def block_gain(per_axis: Sequence[Sequence[float]]) -> np.ndarray:
    """6x3 block-diagonal observer gain from three 2-vectors."""
    L = np.zeros((6, 3))
    for i, (l1, l2) in enumerate(per_axis):
        L[2 * i, i] = l1
        L[2 * i + 1, i] = l2
    return L


def state_observer_step(x_hat: np.ndarray, u: Sequence[float], f_hat: Sequence[float],
                        y: Sequence[float], L: np.ndarray,
                        model: DiscretePlantModel) -> np.ndarray:
    A, B, W, C = model.A, model.B, model.W_d, model.C
    return ((A - L @ C) @ x_hat + B @ np.asarray(u, float)
            + W @ np.asarray(f_hat, float) + L @ np.asarray(y, float))


class StateObserver:
    def __init__(self, model: DiscretePlantModel, L: np.ndarray | None = None,
                 x0: Sequence[float] | None = None):
        self.model = model
        self.L = block_gain(TABLE_L) if L is None else np.asarray(L, float)
        self.A_LC = model.A - self.L @ model.C
        self.x_hat = np.zeros(6) if x0 is None else np.array(x0, float)

    def step(self, u: Sequence[float], f_hat: Sequence[float], y: Sequence[float]) -> np.ndarray:
        m = self.model
        self.x_hat = (self.A_LC @ self.x_hat + m.B @ np.asarray(u, float)
                      + m.W_d @ np.asarray(f_hat, float) + self.L @ np.asarray(y, float))
        return self.x_hat
