"""Swing damping by trolley-acceleration correction, and the swing observer.

The swing subsystem (per unit load mass, divided by the rope length) reads

    M(theta) theta'' + C theta' + G(theta) = -H(theta) a_xy

with M = diag(l cos^2 theta_y, l) and H = [[cx cy, 0], [-sx sy, cy]].
Feeding back the swing rate through H^-1 makes the subsystem output
strictly passive from the reference trolley acceleration to theta'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidParameter, NearSingularH

H_MARGIN = 1e-3


class SwingEstimate(NamedTuple):
    theta_x: float = 0.0
    theta_y: float = 0.0
    omega_x: float = 0.0
    omega_y: float = 0.0


@dataclass(frozen=True)
class SwingControlConfig:
    """Swing gain K = diag(k_x, k_y) [1/s] and the hoisting speed bound."""

    k_theta: tuple[float, float] = (0.17, 0.17)
    v_l_max: float = 0.1
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.enabled and not self.gain_ok():
            raise InvalidParameter(
                f"swing gains {self.k_theta} below 1.5 * v_l_max = {1.5 * self.v_l_max}")

    def gain_ok(self) -> bool:
        """Passivity condition k >= 1.5 |l'|_max on both channels."""
        return all(k >= 1.5 * self.v_l_max for k in self.k_theta)


@dataclass(frozen=True)
class SwingObserverConfig:
    """Per-angle observer gain [l_1, l_2] on the model [[1, T], [0, 1]]."""

    L_x: tuple[float, float] = (1.0, 25.0)
    L_y: tuple[float, float] = (1.0, 25.0)
    T_s: float = 0.01
    A_theta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.T_s > 0:
            raise InvalidParameter("T_s must be > 0")
        object.__setattr__(self, "A_theta", np.array([[1.0, self.T_s], [0.0, 1.0]]))
        for L in (self.L_x, self.L_y):
            if observer_spectral_radius(L, self.T_s) >= 1.0:
                raise InvalidParameter(f"observer gain {L} is not stabilising")


def error_matrix(L: Sequence[float], T_s: float) -> np.ndarray:
    """A_theta - L C for one angle."""
    return np.array([[1.0 - L[0], T_s], [-L[1], 1.0]])


def observer_spectral_radius(L: Sequence[float], T_s: float) -> float:
    return float(max(abs(np.linalg.eigvals(error_matrix(L, T_s)))))


def gains_from_polynomial(d1: float, d2: float, T_s: float) -> tuple[float, float]:
    """Gains placing the error poles at the roots of z^2 + d1 z + d2."""
    return (d1 + 2.0, (1.0 + d1 + d2) / T_s)


def high_gain_observer_gains(eps: float, delta1: float, delta2: float,
                             T_s: float) -> tuple[float, float]:
    """High-gain parametrisation: error polynomial z^2 + (d1/eps) z + d2/eps^2."""
    if not eps > 0:
        raise InvalidParameter("eps must be > 0")
    return ((delta1 + 2.0 * eps) / eps,
            (eps * eps + delta1 * eps + delta2) / (eps * eps * T_s))


class SwingObserver:
    """Two decoupled linear observers for (theta_x, omega_x), (theta_y, omega_y)."""

    def __init__(self, cfg: SwingObserverConfig | None = None,
                 x0: Sequence[float] = (0.0, 0.0, 0.0, 0.0)):
        self.cfg = cfg or SwingObserverConfig()
        self.state = np.array(x0, dtype=float)

    @property
    def estimate(self) -> SwingEstimate:
        s = self.state
        return SwingEstimate(float(s[0]), float(s[2]), float(s[1]), float(s[3]))

    def step(self, theta_x: float, theta_y: float) -> SwingEstimate:
        self.state = observer_step(self.state, theta_x, theta_y, self.cfg)
        return self.estimate


def observer_step(state: Sequence[float], theta_x: float, theta_y: float,
                  cfg: SwingObserverConfig) -> np.ndarray:
    """x(k+1) = A x(k) + L (y(k) - C x(k)); state is (th_x, w_x, th_y, w_y)."""
    T = cfg.T_s
    out = np.empty(4)
    for i, (L, y) in enumerate(((cfg.L_x, theta_x), (cfg.L_y, theta_y))):
        th, w = state[2 * i], state[2 * i + 1]
        innov = y - th
        out[2 * i] = th + T * w + L[0] * innov
        out[2 * i + 1] = w + L[1] * innov
    return out


def h_matrix(theta_x: float, theta_y: float) -> np.ndarray:
    sx, cx = math.sin(theta_x), math.cos(theta_x)
    sy, cy = math.sin(theta_y), math.cos(theta_y)
    return np.array([[cx * cy, 0.0], [-sx * sy, cy]])


def h_inverse(theta_x: float, theta_y: float) -> np.ndarray:
    sx, cx = math.sin(theta_x), math.cos(theta_x)
    sy, cy = math.sin(theta_y), math.cos(theta_y)
    det = cx * cy * cy
    if not abs(det) >= H_MARGIN:
        raise NearSingularH(f"det H = {det:.3g} below {H_MARGIN}")
    return np.array([[cy, 0.0], [sx * sy, cx * cy]]) / det


def swing_correction(est: SwingEstimate, a_ref: Sequence[float], cfg: SwingControlConfig,
                     mode: str = "3D") -> tuple[float, float]:
    """Corrected trolley accelerations (u_cx, u_cy) [m/s^2]."""
    ax, ay = float(a_ref[0]), float(a_ref[1])
    if not cfg.enabled:
        return ax, ay
    kx, ky = cfg.k_theta
    if mode == "2D":
        cx = math.cos(est.theta_x)
        if not abs(cx) >= H_MARGIN:
            raise NearSingularH(f"cos theta_x = {cx:.3g} below {H_MARGIN}")
        return ax + kx * est.omega_x / cx, ay
    hinv = h_inverse(est.theta_x, est.theta_y)
    wx = hinv[0, 0] * est.omega_x + hinv[0, 1] * est.omega_y
    wy = hinv[1, 0] * est.omega_x + hinv[1, 1] * est.omega_y
    return ax + kx * wx, ay + ky * wy


def storage_energy(theta: Sequence[float], omega: Sequence[float], l: float,
                   v_l: float = 0.0, g: float = 9.81) -> float:
    """V = 1/2 w^T M w + g (1 - cos th_x cos th_y), M = diag(l cy^2, l).

    ``v_l`` is accepted for signature symmetry with the rate below; the
    storage itself does not depend on it.
    """
    cx, cy = math.cos(theta[0]), math.cos(theta[1])
    wx, wy = omega
    return 0.5 * (l * cy * cy * wx * wx + l * wy * wy) + g * (1.0 - cx * cy)


def storage_rate(theta: Sequence[float], omega: Sequence[float], l: float, v_l: float,
                 a_xy: Sequence[float]) -> float:
    """dV/dt along the swing dynamics for trolley accelerations ``a_xy``."""
    cy = math.cos(theta[1])
    wx, wy = omega
    hw = h_matrix(theta[0], theta[1]).T @ np.array([wx, wy])
    return -1.5 * v_l * (cy * cy * wx * wx + wy * wy) - float(hw @ np.asarray(a_xy, float))


def swing_accelerations(theta: Sequence[float], omega: Sequence[float], l: float,
                        v_l: float, a_xy: Sequence[float], g: float = 9.81) -> tuple[float, float]:
    """Swing angular accelerations for given trolley accelerations (no theta'')."""
    sx, cx = math.sin(theta[0]), math.cos(theta[0])
    sy, cy = math.sin(theta[1]), math.cos(theta[1])
    wx, wy = omega
    ax, ay = a_xy
    atx = -(cx * ax + g * sx + 2.0 * v_l * wx * cy - 2.0 * l * wx * wy * sy) / (l * cy)
    aty = -(l * wx * wx * sy * cy - sx * sy * ax + cy * ay + g * cx * sy
            + 2.0 * v_l * wy) / l
    return atx, aty
