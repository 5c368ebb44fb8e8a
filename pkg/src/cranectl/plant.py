"""Nonlinear continuous-time crane plant.

Trolley (x), bridge (y) and hoist (l) are DC-motor driven axes with viscous
damping and Coulomb friction; the load hangs from a massless rigid rope and
swings with angles (theta_x, theta_y).  The rope tension couples the three
axis accelerations through a rank-one term which is solved in closed form.

The hot loop (derivative + RK4) lives in a compiled extension when
available.  ``CRANECTL_KERNEL=python`` forces the pure-Python twin.
"""
from __future__ import annotations

import math
import os
from dataclasses import astuple, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels_py
from .errors import InvalidParameter, SingularMassMatrix, StateOutOfDomain
from .params import CraneParameters

if os.environ.get("CRANECTL_KERNEL", "").lower() == "python":
    _kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _kernels = _kernels_py
        BACKEND = "python"

MODES = ("3D", "2D")
STATE_FIELDS = ("x", "v_x", "y", "v_y", "l", "v_l",
                "theta_x", "omega_x", "theta_y", "omega_y")


@dataclass(frozen=True)
class CraneState:
    """Plant state; ``omega_*`` are the swing rates d(theta_*)/dt."""

    x: float = 0.0
    v_x: float = 0.0
    y: float = 0.0
    v_y: float = 0.0
    l: float = 0.25
    v_l: float = 0.0
    theta_x: float = 0.0
    omega_x: float = 0.0
    theta_y: float = 0.0
    omega_y: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "CraneState":
        if len(a) != 10:
            raise ValueError("crane state has 10 components")
        return cls(*(float(v) for v in a))


class PlantInput(NamedTuple):
    """Motor voltages [V]."""

    v_ax: float = 0.0
    v_ay: float = 0.0
    v_al: float = 0.0


class LoadPosition(NamedTuple):
    x_m: float
    y_m: float
    z_m: float


def pack_parameters(p: CraneParameters, conservative: bool = False) -> np.ndarray:
    """Flatten parameters into the vector layout the kernels expect.

    ``conservative=True`` zeroes damping and friction (energy audits).
    """
    v = np.zeros(_kernels_py.P_SIZE)
    for i, ax in enumerate(p.axes):
        v[_kernels_py.P_J + i] = ax.J_e
        v[_kernels_py.P_B + i] = ax.B_e
        v[_kernels_py.P_K + i] = ax.K_e
        v[_kernels_py.P_A1 + i] = ax.a_1
        v[_kernels_py.P_A2 + i] = ax.a_2
        v[_kernels_py.P_RR + i] = ax.r_g * ax.R_p
    v[_kernels_py.P_M] = p.m
    v[_kernels_py.P_G] = p.g
    v[_kernels_py.P_DB] = p.deadband
    v[_kernels_py.P_THMAX] = 0.5 * math.pi - p.angle_margin
    v[_kernels_py.P_LMIN] = p.l_min
    if conservative:
        v[_kernels_py.P_B:_kernels_py.P_B + 3] = 0.0
        v[_kernels_py.P_A1:_kernels_py.P_A2 + 3] = 0.0
    return v


def _planar(mode: str) -> bool:
    if mode not in MODES:
        raise InvalidParameter(f"mode must be one of {MODES}, got {mode!r}")
    return mode == "2D"


def _raise_status(status: int, state) -> None:
    if status == 1:
        raise StateOutOfDomain(
            f"swing angle beyond admissible range: theta=({state[6]:.4g}, {state[8]:.4g})")
    if status == 2:
        raise StateOutOfDomain(f"rope length out of range: l={state[4]:.4g}")
    if status == 3:
        raise SingularMassMatrix("axis acceleration system is singular")


def coulomb_friction(v: float, a1: float, a2: float, deadband: float = 1e-4) -> float:
    """Direction-dependent Coulomb friction torque with a zero-velocity band."""
    return _kernels_py._friction(v, a1, a2, deadband)


def continuous_derivative(s: CraneState, u: Sequence[float], p: CraneParameters,
                          mode: str = "3D") -> np.ndarray:
    """Time derivative of the state as a 10-vector (ordering of CraneState)."""
    planar = _planar(mode)
    x = s.to_array() if isinstance(s, CraneState) else np.asarray(s, dtype=float)
    status, d = _kernels.derivative(x, np.asarray(u, dtype=float),
                                    pack_parameters(p), planar)
    _raise_status(status, x)
    return np.asarray(d, dtype=float)


class Plant:
    """Pre-packed plant for repeated stepping on raw state arrays."""

    def __init__(self, p: CraneParameters, mode: str = "3D", substeps: int = 10,
                 backend: str | None = None, conservative: bool = False):
        if substeps < 1:
            raise InvalidParameter("substeps must be >= 1")
        self.params = p
        self.mode = mode
        self.planar = _planar(mode)
        self.substeps = int(substeps)
        if backend is None:
            self._k = _kernels
        elif backend == "python":
            self._k = _kernels_py
        elif backend == "compiled":
            if _kernels is _kernels_py:
                raise ImportError("compiled kernels are not available")
            self._k = _kernels
        else:
            raise InvalidParameter(f"unknown backend {backend!r}")
        self._py = self._k is _kernels_py
        packed = pack_parameters(p, conservative)
        self._p = packed.tolist() if self._py else packed

    def step_array(self, x: np.ndarray, u: Sequence[float], dt: float) -> np.ndarray:
        if not dt > 0:
            raise InvalidParameter("dt must be > 0")
        if self._py:
            status, out = self._k.rk4(list(map(float, x)), [float(v) for v in u],
                                      self._p, dt, self.substeps, self.planar)
        else:
            status, out = self._k.rk4(x, np.asarray(u, dtype=float), self._p, dt,
                                      self.substeps, self.planar)
        _raise_status(status, out)
        return np.asarray(out, dtype=float)


def step(s: CraneState, u: Sequence[float], p: CraneParameters, dt: float,
         substeps: int = 10, mode: str = "3D") -> CraneState:
    """Advance the plant by ``dt`` with voltages held constant (RK4)."""
    plant = Plant(p, mode, substeps)
    return CraneState.from_array(plant.step_array(s.to_array(), u, dt))


def load_position(s: CraneState) -> LoadPosition:
    """Load coordinates in the fixed frame (z points up, rope hangs down)."""
    sx, cx = math.sin(s.theta_x), math.cos(s.theta_x)
    sy, cy = math.sin(s.theta_y), math.cos(s.theta_y)
    return LoadPosition(s.x + s.l * sx * cy, s.y + s.l * sy, -s.l * cx * cy)


def load_velocity(s: CraneState) -> np.ndarray:
    """Inertial load velocity [m/s]."""
    sx, cx = math.sin(s.theta_x), math.cos(s.theta_x)
    sy, cy = math.sin(s.theta_y), math.cos(s.theta_y)
    l, vl, wx, wy = s.l, s.v_l, s.omega_x, s.omega_y
    return np.array([
        s.v_x + vl * sx * cy + l * cx * cy * wx - l * sx * sy * wy,
        s.v_y + vl * sy + l * cy * wy,
        -vl * cx * cy + l * sx * cy * wx + l * cx * sy * wy,
    ])


def mechanical_energy(s: CraneState, p: CraneParameters) -> float:
    """Axis kinetic energy (inertia mapped to the load side), load kinetic
    energy and load potential energy."""
    e = 0.0
    for ax, v in zip(p.axes, (s.v_x, s.v_y, s.v_l)):
        e += 0.5 * ax.J_e / ax.ratio * v * v
    vm = load_velocity(s)
    e += 0.5 * p.m * float(vm @ vm)
    e += p.m * p.g * load_position(s).z_m
    return e
