"""State-feedback tracking with model-inverse feedforward.

    u = K (x_rm - x_hat) + Phi_ff x_rm + Gamma_ff u_c + Lambda_ff f_hat

The feedforward inverts each axis model so that, with a perfect
disturbance estimate, the plant reproduces the reference model
x_rm(k+1) = A_m x_rm + B_m u_c.  The disturbance estimate comes from the
crane dynamics evaluated along the reference (computed torque) or from an
integrating disturbance observer driven by the output-estimation error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateModel, InvalidParameter
from .model import AxisDiscretization, DiscretePlantModel
from .observer import TABLE_L, block_gain
from .params import CraneParameters
from .plant import coulomb_friction
from .swing import SwingEstimate

TABLE_K = ((1290.0, 110.0), (2590.0, 120.0), (3840.0, 120.0))
TABLE_LW = (-0.1, -0.1, -0.5)
SOURCES = ("none", "computed-torque", "dob")


def block_feedback(per_axis: Sequence[Sequence[float]]) -> np.ndarray:
    """3x6 block-diagonal feedback gain from three 1x2 rows."""
    K = np.zeros((3, 6))
    for i, (k1, k2) in enumerate(per_axis):
        K[i, 2 * i] = k1
        K[i, 2 * i + 1] = k2
    return K


@dataclass(frozen=True)
class SfbConfig:
    K: np.ndarray = field(default_factory=lambda: block_feedback(TABLE_K))
    L: np.ndarray = field(default_factory=lambda: block_gain(TABLE_L))
    L_w: np.ndarray = field(default_factory=lambda: np.diag(TABLE_LW))
    u_max: float = 24.0

    def __post_init__(self) -> None:
        if np.any(np.diag(self.L_w) >= 0):
            raise InvalidParameter("disturbance observer gains must be negative")


@dataclass(frozen=True)
class FeedforwardGains:
    Phi: np.ndarray
    Gamma: np.ndarray
    Lambda: np.ndarray


@dataclass(frozen=True)
class DisturbanceEstimate:
    f_hat: np.ndarray
    source: str


def reference_matrices(T_s: float) -> tuple[np.ndarray, np.ndarray]:
    """A_m, B_m of the three-axis double-integrator reference model."""
    Am = np.kron(np.eye(3), np.array([[1.0, T_s], [0.0, 1.0]]))
    Bm = np.kron(np.eye(3), np.array([[0.0], [T_s]]))
    return Am, Bm


def feedforward_gains(model: DiscretePlantModel, T_s: float | None = None) -> FeedforwardGains:
    T = model.T_s if T_s is None else T_s
    Phi = np.zeros((3, 6))
    Gam = np.zeros((3, 3))
    Lam = np.zeros((3, 3))
    for i, ax in enumerate(model.axes):
        if not ax.b_1 > 0:
            raise DegenerateModel(f"axis {i}: b_1 = {ax.b_1} <= 0")
        Phi[i, 2 * i + 1] = (1.0 - ax.a_1) / ax.b_1
        Gam[i, i] = T / ax.b_1
        Lam[i, i] = ax.b_d1 / ax.b_1
    return FeedforwardGains(Phi, Gam, Lam)


def feedforward_signal(x_rm: Sequence[float], u_c: Sequence[float], f_hat: Sequence[float],
                       gains: FeedforwardGains) -> np.ndarray:
    return (gains.Phi @ np.asarray(x_rm, float) + gains.Gamma @ np.asarray(u_c, float)
            + gains.Lambda @ np.asarray(f_hat, float))


def sfb_step(x_hat: Sequence[float], x_rm: Sequence[float], u_ff: Sequence[float],
             K: np.ndarray, u_max: float = 24.0) -> tuple[np.ndarray, bool]:
    """Saturated control voltage and whether saturation was active."""
    u = K @ (np.asarray(x_rm, float) - np.asarray(x_hat, float)) + np.asarray(u_ff, float)
    sat = bool(np.any(np.abs(u) > u_max))
    return np.clip(u, -u_max, u_max), sat


def load_forces(accel: Sequence[float], l: float, est: SwingEstimate, m: float,
                g: float, mode: str = "3D") -> np.ndarray:
    """Load reaction on the three axes [N] (no swing accelerations needed)."""
    sx, cx = math.sin(est.theta_x), math.cos(est.theta_x)
    sy, cy = math.sin(est.theta_y), math.cos(est.theta_y)
    wx, wy = est.omega_x, est.omega_y
    if mode == "2D":
        sy, cy, wy = 0.0, 1.0, 0.0
    n = np.array([sx * cy, sy, 1.0])
    c = l * (cy * cy * wx * wx + wy * wy) + g * cx * cy
    return m * n * (float(n @ np.asarray(accel, float)) - c)


def computed_torque(x_rm: Sequence[float], u_c: Sequence[float], swing: SwingEstimate,
                    params: CraneParameters, m: float | None = None, mode: str = "3D",
                    velocities: Sequence[float] | None = None) -> DisturbanceEstimate:
    """Axis disturbance torques predicted along the reference.

    Friction is evaluated at the reference velocities unless measured
    ``velocities`` are supplied.
    """
    m = params.m if m is None else m
    x_rm = np.asarray(x_rm, float)
    F = load_forces(u_c, x_rm[4], swing, m, params.g, mode)
    vel = x_rm[1::2] if velocities is None else np.asarray(velocities, float)
    f = np.zeros(3)
    for i, ax in enumerate(params.axes):
        if mode == "2D" and i == 1:
            continue
        f[i] = ax.ratio * F[i] + coulomb_friction(vel[i], ax.a_1, ax.a_2, params.deadband)
    return DisturbanceEstimate(f, "computed-torque")


def dob_step(f_hat: Sequence[float], y: Sequence[float], x_hat: Sequence[float],
             L_w: np.ndarray, C: np.ndarray | None = None) -> np.ndarray:
    """f(k+1) = f(k) + L_w (y(k) - C x_hat(k))."""
    x_hat = np.asarray(x_hat, float)
    Cx = x_hat[0::2] if C is None else C @ x_hat
    return np.asarray(f_hat, float) + np.asarray(L_w, float) @ (np.asarray(y, float) - Cx)


def dob_polynomial(axis: AxisDiscretization, L_i: Sequence[float], l_w: float,
                   T_s: float | None = None) -> np.ndarray:
    """Monic cubic of the observer + disturbance-integrator error loop."""
    T = axis.T_s if T_s is None else T_s
    a, bd = axis.a_1, axis.b_d1
    l1, l2 = L_i
    return np.array([1.0,
                     l1 - 2.0 - a,
                     1.0 - l1 * (1.0 + a) + 2.0 * a + l2 * T,
                     a * (l1 - 1.0) - T * (l2 + l_w * bd)])


def dob_pole_audit(axis: AxisDiscretization, L_i: Sequence[float], l_w: float,
                   T_s: float | None = None) -> tuple[np.ndarray, bool]:
    """Pole moduli of the loop and whether it passes (all < 1, l_w < 0)."""
    mod = np.sort(np.abs(np.roots(dob_polynomial(axis, L_i, l_w, T_s))))[::-1]
    return mod, bool(np.all(mod < 1.0) and l_w < 0)


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def stability_audit(model: DiscretePlantModel, K: np.ndarray, L: np.ndarray) -> dict:
    A, B, C = model.A, model.B, model.C
    radii = {
        "A-BK": spectral_radius(A - B @ K),
        "A-LC": spectral_radius(A - L @ C),
        "A-BK-LC": spectral_radius(A - B @ K - L @ C),
    }
    return {"radii": radii, "pass": all(r < 1.0 for r in radii.values())}


def full_audit(model: DiscretePlantModel, cfg: SfbConfig | None = None) -> dict:
    """Stability and disturbance-observer audits as a JSON-ready dict."""
    cfg = cfg or SfbConfig()
    st = stability_audit(model, cfg.K, cfg.L)
    dob = {}
    ok = st["pass"]
    for i, name in enumerate(("x", "y", "l")):
        L_i = (cfg.L[2 * i, i], cfg.L[2 * i + 1, i])
        mod, passed = dob_pole_audit(model.axes[i], L_i, cfg.L_w[i, i], model.T_s)
        dob[name] = {"moduli": [float(v) for v in mod], "pass": passed}
        ok = ok and passed
    return {
        "K": cfg.K.tolist(), "L": cfg.L.tolist(), "L_w": np.diag(cfg.L_w).tolist(),
        "spectral_radii": st["radii"], "dob": dob, "pass": bool(ok),
    }


def place_axis(axis: AxisDiscretization, poles: Sequence[float]) -> np.ndarray:
    """Feedback row [k1, k2] placing eig(A_i - B_i k) at the two given poles."""
    T, a, b = axis.T_s, axis.a_1, axis.b_1
    p1, p2 = poles
    # det(zI - A + B k) = z^2 + (b k2 - 1 - a) z + (a - b k2 + T b k1)
    s, prod = p1 + p2, p1 * p2
    k2 = (1.0 + a - s) / b
    k1 = (prod - a + b * k2) / (T * b)
    return np.array([k1, k2])


def place_observer_axis(axis: AxisDiscretization, poles: Sequence[float]) -> np.ndarray:
    """Observer column [l1, l2] placing eig(A_i - l C_i) at the given poles."""
    T, a = axis.T_s, axis.a_1
    p1, p2 = poles
    s, prod = p1 + p2, p1 * p2
    # det(zI - A + l C) = z^2 + (l1 - 1 - a) z + (a - a l1 + T l2)
    l1 = 1.0 + a - s
    l2 = (prod - a + a * l1) / T
    return np.array([l1, l2])


class DisturbanceObserver:
    def __init__(self, L_w: np.ndarray | None = None, f0: Sequence[float] = (0.0, 0.0, 0.0)):
        self.L_w = np.diag(TABLE_LW) if L_w is None else np.asarray(L_w, float)
        self.f_hat = np.array(f0, dtype=float)

    def step(self, y: Sequence[float], x_hat: Sequence[float]) -> np.ndarray:
        self.f_hat = dob_step(self.f_hat, y, x_hat, self.L_w)
        return self.f_hat
