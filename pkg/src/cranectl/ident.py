"""Per-axis parameter identification by recursive least squares.

Each axis is excited with a multi-sine voltage while the others stand still.
Velocity comes from the backward difference of the measured position and
is regressed on

    phi(k) = [v(k-1), v_a(k-1) + offset, sgn(v(k)), 1]

where the offset r_g R_p m g / K_e moves the hoist's gravity load onto the
voltage channel.  The four coefficients map back to inertia, damping and
the two Coulomb constants.

Samples whose velocity window (k-1, k, k+1) changes sign or dips below a
small gate are skipped: near zero velocity the axis chatters in the
friction band and the sgn(v) regressor no longer describes the data.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientData, NumericalBreakdown, OutOfRange
from .params import AxisParameters, CraneParameters
from .plant import CraneState, Plant, coulomb_friction

AXIS_KINDS = {"x": 0, "y": 1, "l": 2,
              "traveling": 0, "traversing": 1, "hoisting": 2}
MIN_SAMPLES = 100
DEFAULT_AMPLITUDE = 8.0
DEFAULT_GATE = 5e-3


def axis_index(kind: str) -> int:
    try:
        return AXIS_KINDS[kind]
    except KeyError:
        raise OutOfRange(f"unknown axis kind {kind!r}") from None


@dataclass(frozen=True)
class RegressorSample:
    y: float
    phi: np.ndarray


@dataclass(frozen=True)
class RlsState:
    theta: np.ndarray
    P: np.ndarray
    n: int = 0

    @classmethod
    def initial(cls, dim: int = 4, p0: float = 1e6) -> "RlsState":
        return cls(np.zeros(dim), p0 * np.eye(dim), 0)


@dataclass(frozen=True)
class IdentifiedAxis:
    J_e: float
    B_e: float
    a_1: float
    a_2: float
    b_1: float
    b_2: float

    def as_axis(self, like: AxisParameters) -> AxisParameters:
        return AxisParameters(self.J_e, self.B_e, like.K_e, self.a_1, self.a_2,
                              like.r_g, like.R_p)


@dataclass
class IdentificationResult:
    axis: IdentifiedAxis
    alpha: np.ndarray
    trace: np.ndarray = field(repr=False)
    kind: str = "x"
    method: str = "zoh"

    def to_json(self) -> str:
        return json.dumps({
            "axis": self.kind,
            "method": self.method,
            "parameters": asdict(self.axis),
            "alpha": [float(a) for a in self.alpha],
            "trace": [[float(v) for v in row] for row in self.trace],
        }, indent=2, sort_keys=True)


def generate_excitation(duration: float, T_s: float, amplitude: float = DEFAULT_AMPLITUDE,
                        seed: int = 0,
                        freqs: Sequence[float] = (0.1, 0.35, 0.9)) -> np.ndarray:
    """Multi-sine voltage with random phases, peak-normalised to ``amplitude``.

    Phase draws are repeated (deterministically) until at least 10% of the
    samples sit below 20% of the peak, so the friction switch is excited.
    """
    if len(freqs) < 3:
        raise OutOfRange("at least three frequencies are required")
    n = int(round(duration / T_s))
    t = np.arange(n) * T_s
    rng = np.random.default_rng(seed)
    for _ in range(100):
        phases = rng.uniform(0.0, 2.0 * np.pi, len(freqs))
        sig = sum(np.sin(2.0 * np.pi * f * t + ph) for f, ph in zip(freqs, phases))
        peak = np.max(np.abs(sig))
        if peak == 0.0:
            continue
        sig = sig * (amplitude / peak)
        if np.mean(np.abs(sig) < 0.2 * amplitude) >= 0.10:
            return sig
    return sig


def rls_update(state: RlsState, sample: RegressorSample, forgetting: float = 1.0) -> RlsState:
    """One exponentially weighted RLS step."""
    if not 0.0 < forgetting <= 1.0:
        raise OutOfRange("forgetting factor must lie in (0, 1]")
    phi = np.asarray(sample.phi, dtype=float)
    P = state.P
    Pphi = P @ phi
    den = forgetting + float(phi @ Pphi)
    if not den > 0.0:
        raise NumericalBreakdown(f"RLS normaliser {den} <= 0")
    gain = Pphi / den
    err = sample.y - float(phi @ state.theta)
    theta = state.theta + gain * err
    P = (P - np.outer(Pphi, Pphi) / den) / forgetting
    P = 0.5 * (P + P.T)
    return RlsState(theta, P, state.n + 1)


def sign_db(v: float, deadband: float) -> float:
    return coulomb_friction(v, 1.0, 1.0, deadband)


def backward_velocity(position: np.ndarray, T_s: float) -> np.ndarray:
    """v(k) = (q(k) - q(k-1)) / T, with v(0) = 0."""
    position = np.asarray(position, dtype=float)
    v = np.zeros_like(position)
    v[1:] = np.diff(position) / T_s
    return v


def moving_average(x: np.ndarray, width: int) -> np.ndarray:
    """Causal moving average (optional pre-filter for noisy data)."""
    if width <= 1:
        return np.asarray(x, dtype=float)
    c = np.cumsum(np.concatenate([[0.0], x]))
    out = np.empty(len(x))
    for k in range(len(x)):
        lo = max(0, k + 1 - width)
        out[k] = (c[k + 1] - c[lo]) / (k + 1 - lo)
    return out


def build_regressors(voltage: np.ndarray, velocity: np.ndarray, offset: float = 0.0,
                     deadband: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Regression targets and rows for k = 2 .. N-1."""
    n = len(velocity)
    Y = velocity[2:].copy()
    Phi = np.empty((n - 2, 4))
    Phi[:, 0] = velocity[1:-1]
    Phi[:, 1] = voltage[1:-1] + offset
    Phi[:, 2] = [sign_db(v, deadband) for v in velocity[2:]]
    Phi[:, 3] = 1.0
    return Y, Phi


def friction_gate_mask(velocity: np.ndarray, gate: float) -> np.ndarray:
    """Usable-row mask for the rows of :func:`build_regressors`.

    Row k (target v(k)) is kept when v(k-1), v(k), v(k+1) share one sign and
    all exceed ``gate`` in magnitude.  The last row has no successor and is
    judged on (k-1, k) only.
    """
    v = np.asarray(velocity, dtype=float)
    prev, cur = v[1:-1], v[2:]
    nxt = np.append(v[3:], v[-1])
    s = np.sign(cur)
    return ((np.sign(prev) == s) & (np.sign(nxt) == s) & (np.abs(prev) > gate)
            & (np.abs(cur) > gate) & (np.abs(nxt) > gate))


def gravity_offset(kind: str, K_e: float, m: float, r_g: float, R_p: float,
                   g: float) -> float:
    """Voltage equivalent of the hanging load on the hoist (0 otherwise)."""
    if axis_index(kind) != 2:
        return 0.0
    return r_g * R_p * m * g / K_e


def forward_map(J_e: float, B_e: float, K_e: float, T_s: float, a_1: float = 0.0,
                a_2: float = 0.0, method: str = "backward") -> np.ndarray:
    """Regression coefficients produced by known axis parameters."""
    if method == "backward":
        den = J_e + T_s * B_e
        al1 = J_e / den
        al2 = K_e * T_s / den
    elif method == "zoh":
        al1 = math.exp(-B_e * T_s / J_e)
        al2 = K_e / B_e * (1.0 - al1)
    else:
        raise OutOfRange(f"unknown method {method!r}")
    b1 = 0.5 * (a_1 + a_2)
    b2 = 0.5 * (a_1 - a_2)
    return np.array([al1, al2, -al2 * b1 / K_e, -al2 * b2 / K_e])


def recover_parameters(alpha: Sequence[float], K_e: float, T_s: float,
                       axis_kind: str = "x", m: float = 0.0, r_g: float = 0.0,
                       R_p: float = 0.0, g: float = 9.81,
                       method: str = "backward") -> IdentifiedAxis:
    """Physical parameters from regression coefficients.

    ``method="backward"`` inverts the backward-difference discretization;
    ``method="zoh"`` inverts the exact sampled model, which is what
    backward-differenced noiseless position data actually follows.
    """
    al1, al2, al3, al4 = (float(a) for a in alpha)
    if not 0.0 < al1 < 1.0:
        raise OutOfRange(f"alpha_1 = {al1} outside (0, 1)")
    if not al2 > 0.0:
        raise OutOfRange(f"alpha_2 = {al2} <= 0")
    B = K_e * (1.0 - al1) / al2
    if method == "backward":
        J = K_e * T_s * al1 / al2
    elif method == "zoh":
        J = -B * T_s / math.log(al1)
    else:
        raise OutOfRange(f"unknown method {method!r}")
    if axis_index(axis_kind) == 2:
        J -= r_g * R_p * m
    b1 = -K_e * al3 / al2
    b2 = -K_e * al4 / al2
    return IdentifiedAxis(J, B, b1 + b2, b1 - b2, b1, b2)


def identify_axis(voltage: Sequence[float], position: Sequence[float], axis_kind: str,
                  K_e: float, T_s: float, *, m: float = 0.0, r_g: float = 0.0,
                  R_p: float = 0.0, g: float = 9.81, deadband: float = 1e-4,
                  method: str = "backward", forgetting: float = 1.0,
                  smooth: int = 0, gate: float | None = DEFAULT_GATE) -> IdentificationResult:
    """Run RLS over one axis experiment and recover its parameters.

    Returns the identified axis together with the per-step coefficient trace
    (one row per regression sample; gated rows repeat the previous value).
    ``gate=None`` feeds every sample to the estimator.
    """
    voltage = np.asarray(voltage, dtype=float)
    position = np.asarray(position, dtype=float)
    if len(voltage) != len(position):
        raise OutOfRange("voltage and position series differ in length")
    if len(position) < MIN_SAMPLES:
        raise InsufficientData(f"{len(position)} samples < {MIN_SAMPLES}")
    vel = backward_velocity(position, T_s)
    if smooth > 1:
        vel = moving_average(vel, smooth)
    offset = gravity_offset(axis_kind, K_e, m, r_g, R_p, g)
    Y, Phi = build_regressors(voltage, vel, offset, deadband)
    if gate is None:
        use = np.ones(len(Y), dtype=bool)
    else:
        use = friction_gate_mask(vel, gate)
    st = RlsState.initial()
    trace = np.empty((len(Y), 4))
    for k in range(len(Y)):
        if use[k]:
            st = rls_update(st, RegressorSample(Y[k], Phi[k]), forgetting)
        trace[k] = st.theta
    axis = recover_parameters(st.theta, K_e, T_s, axis_kind, m, r_g, R_p, g, method)
    return IdentificationResult(axis, st.theta.copy(), trace, axis_kind, method)


def simulate_scalar_axis(axis: AxisParameters, voltage: Sequence[float], T_s: float,
                         q0: float = 0.0, v0: float = 0.0, load_force: float = 0.0,
                         extra_inertia: float = 0.0, deadband: float = 1e-4,
                         substeps: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """RK4 simulation of (J + J_x) v' + B v = K u + tau_load - f(v).

    Returns sampled positions and velocities (length len(voltage)); sample
    k is the state before voltage k is applied.
    """
    J = axis.J_e + extra_inertia
    n = len(voltage)
    q = np.empty(n)
    v = np.empty(n)
    h = T_s / substeps
    hh = 0.5 * h
    h6 = h / 6.0

    def acc(vel: float, u: float) -> float:
        return (axis.K_e * u - axis.B_e * vel
                - coulomb_friction(vel, axis.a_1, axis.a_2, deadband) + load_force) / J

    qc, vc = float(q0), float(v0)
    for k in range(n):
        q[k], v[k] = qc, vc
        u = float(voltage[k])
        for _ in range(substeps):
            k1q, k1v = vc, acc(vc, u)
            k2q, k2v = vc + hh * k1v, acc(vc + hh * k1v, u)
            k3q, k3v = vc + hh * k2v, acc(vc + hh * k2v, u)
            k4q, k4v = vc + h * k3v, acc(vc + h * k3v, u)
            qc = qc + h6 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
            vc = vc + h6 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return q, v


def validate_model(identified: AxisParameters | IdentifiedAxis, voltage: Sequence[float],
                   position: Sequence[float], T_s: float, *, axis_kind: str = "x",
                   like: AxisParameters | None = None, m: float = 0.0,
                   g: float = 9.81, deadband: float = 1e-4,
                   substeps: int = 10) -> tuple[float, float]:
    """Position and velocity mean-square errors of the identified model
    replayed under the recorded voltages.

    Velocities on both sides are backward differences of position.
    """
    if isinstance(identified, IdentifiedAxis):
        if like is None:
            raise OutOfRange("an IdentifiedAxis needs `like` for K_e, r_g, R_p")
        identified = identified.as_axis(like)
    position = np.asarray(position, dtype=float)
    hoist = axis_index(axis_kind) == 2
    load = identified.ratio * m * g if hoist else 0.0
    extra = identified.ratio * m if hoist else 0.0
    q_sim, _ = simulate_scalar_axis(identified, voltage, T_s, q0=position[0],
                                    load_force=load, extra_inertia=extra,
                                    deadband=deadband, substeps=substeps)
    v_meas = backward_velocity(position, T_s)
    v_sim = backward_velocity(q_sim, T_s)
    return (float(np.mean((q_sim - position) ** 2)),
            float(np.mean((v_sim - v_meas) ** 2)))


def simulate_single_axis(params: CraneParameters, axis_kind: str, voltage: Sequence[float],
                         T_s: float = 0.01, l0: float = 0.3,
                         substeps: int = 10) -> np.ndarray:
    """Drive one axis of the full nonlinear plant and record its position.

    Sample k is taken before voltage k is applied.  For the traveling and
    traversing axes the load should be removed (m = 0) as in the
    laboratory procedure.
    """
    i = axis_index(axis_kind)
    plant = Plant(params, "3D", substeps)
    x = CraneState(l=l0).to_array()
    out = np.empty(len(voltage))
    u = [0.0, 0.0, 0.0]
    for k, va in enumerate(voltage):
        out[k] = x[2 * i]
        u[i] = float(va)
        x = plant.step_array(x, u, T_s)
    return out
