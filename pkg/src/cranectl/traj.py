"""Trajectory specifications, the discrete reference model and the
deceleration-zone replanner.

Traveling and traversing follow LSPB (trapezoidal velocity) profiles; the
hoist follows a minimum-time (triangular velocity) profile, lifting the load
during the acceleration zone and lowering it during the deceleration zone.

The reference model is a forward-Euler double integrator per axis.  Swing
control perturbs its acceleration input, so at the start of the
deceleration zone the remaining distance is re-planned to land exactly on
the original end point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, OutOfRange

TOL = 1e-9
V_MAX = 0.3
A_MAX = 0.2


def _sign(x: float) -> float:
    return 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)


def _is_multiple(t: float, T_s: float) -> bool:
    n = t / T_s
    return abs(n - round(n)) <= 1e-6


@dataclass(frozen=True)
class LspbSpec:
    """Trapezoidal profile; ``a`` and ``v_m`` are magnitudes, the direction
    follows q_f - q_0."""

    q_0: float
    q_f: float
    a: float
    v_m: float
    t_b: float
    t_f: float

    @classmethod
    def from_timing(cls, q_0: float, q_f: float, t_b: float, t_f: float) -> "LspbSpec":
        """Consistent spec from end points and zone timing."""
        v = abs(q_f - q_0) / (t_f - t_b)
        return cls(q_0, q_f, v / t_b, v, t_b, t_f)

    @property
    def direction(self) -> float:
        return _sign(self.q_f - self.q_0)

    def reversed(self) -> "LspbSpec":
        return replace(self, q_0=self.q_f, q_f=self.q_0)


@dataclass(frozen=True)
class MinTimeSpec:
    """Triangular profile; ``v_m`` may be supplied (then it is checked)."""

    q_0: float
    q_f: float
    a: float
    t_f: float
    v_m_given: float | None = None

    @property
    def v_m(self) -> float:
        return self.a * self.t_f / 2.0

    @property
    def direction(self) -> float:
        return _sign(self.q_f - self.q_0)

    def reconciled(self) -> "MinTimeSpec":
        """Treat (q_0, q_f, t_f) as authoritative and re-derive a."""
        a = 4.0 * abs(self.q_f - self.q_0) / (self.t_f ** 2)
        return MinTimeSpec(self.q_0, self.q_f, a, self.t_f)

    def reversed(self) -> "MinTimeSpec":
        return replace(self, q_0=self.q_f, q_f=self.q_0)


def lspb_eval(spec: LspbSpec, t: float) -> tuple[float, float, float]:
    """Position, velocity and acceleration of an LSPB profile at time t."""
    if not -TOL <= t <= spec.t_f + TOL:
        raise OutOfRange(f"t = {t} outside [0, {spec.t_f}]")
    s = spec.direction
    a = s * spec.a
    tb, tf = spec.t_b, spec.t_f
    if s == 0:
        return spec.q_0, 0.0, 0.0
    if t < tb:
        return spec.q_0 + 0.5 * a * t * t, a * t, a
    if t < tf - tb:
        v = s * spec.v_m
        return spec.q_0 - 0.5 * a * tb * tb + v * t, v, 0.0
    if t < tf:
        return (spec.q_f - 0.5 * a * tf * tf + a * tf * t - 0.5 * a * t * t,
                a * (tf - t), -a)
    return spec.q_f, 0.0, -a


def mintime_eval(spec: MinTimeSpec, t: float) -> tuple[float, float, float]:
    """Position, velocity and acceleration of a minimum-time profile."""
    if not -TOL <= t <= spec.t_f + TOL:
        raise OutOfRange(f"t = {t} outside [0, {spec.t_f}]")
    s = spec.direction
    if s == 0:
        return spec.q_0, 0.0, 0.0
    a = s * spec.a
    tf = spec.t_f
    if t < tf / 2.0:
        return spec.q_0 + 0.5 * a * t * t, a * t, a
    if t < tf:
        return (spec.q_f - 0.5 * a * tf * tf + a * tf * t - 0.5 * a * t * t,
                a * (tf - t), -a)
    return spec.q_f, 0.0, -a


def validate_spec(spec: LspbSpec | MinTimeSpec, v_max: float = V_MAX,
                  a_max: float = A_MAX, T_s: float | None = 0.01) -> list[str]:
    """Itemised violations (empty list when the spec is admissible)."""
    out: list[str] = []
    dq = abs(spec.q_f - spec.q_0)
    if isinstance(spec, LspbSpec):
        if abs(spec.v_m - spec.a * spec.t_b) > TOL:
            out.append(f"v_m = {spec.v_m} differs from a*t_b = {spec.a * spec.t_b}")
        if abs(dq - spec.v_m * (spec.t_f - spec.t_b)) > TOL:
            out.append(f"|q_f - q_0| = {dq} differs from v_m*(t_f - t_b) = "
                       f"{spec.v_m * (spec.t_f - spec.t_b)}")
        if not spec.t_f > 2.0 * spec.t_b:
            out.append(f"t_f = {spec.t_f} must exceed 2*t_b = {2.0 * spec.t_b}")
        times = (("t_b", spec.t_b), ("t_f", spec.t_f))
        v = spec.v_m
    else:
        if abs(dq - spec.v_m * spec.t_f / 2.0) > TOL:
            out.append(f"|q_f - q_0| = {dq} differs from v_m*t_f/2 = "
                       f"{spec.v_m * spec.t_f / 2.0}")
        if spec.v_m_given is not None and abs(spec.v_m_given - spec.v_m) > TOL:
            out.append(f"given v_m = {spec.v_m_given} differs from a*t_f/2 = {spec.v_m}")
        times = (("t_f", spec.t_f),)
        v = spec.v_m
    if v > v_max + TOL:
        out.append(f"velocity {v} exceeds v_max = {v_max}")
    if spec.a > a_max + TOL:
        out.append(f"acceleration {spec.a} exceeds a_max = {a_max}")
    for name, t in times:
        if not t > 0:
            out.append(f"{name} = {t} must be positive")
        elif T_s is not None and not _is_multiple(t, T_s):
            out.append(f"{name} = {t} is not a multiple of T_s = {T_s}")
    return out


def reference_model_step(x_rm: Sequence[float], u_c: Sequence[float], T_s: float,
                         v_max: float | None = None, a_max: float | None = None) -> np.ndarray:
    """One step of the per-axis double integrator (pos, vel) x 3.

    With bounds given, the command is clipped to +-a_max before use and the
    new velocity to +-v_max (acceleration and constant-velocity zones).
    """
    x = np.array(x_rm, dtype=float)
    u = np.array(u_c, dtype=float)
    if a_max is not None:
        u = np.clip(u, -a_max, a_max)
    pos = x[0::2].copy()
    vel = x[1::2].copy()
    x[0::2] = pos + T_s * vel
    vel = vel + T_s * u
    if v_max is not None:
        vel = np.clip(vel, -v_max, v_max)
    x[1::2] = vel
    return x


@dataclass
class ReplanResult:
    v_rc: tuple[float, float]
    a_rc: tuple[float, float]
    t_b: float
    hoist_update: bool
    iterations: int
    branch: str = "nominal"


def _extend(candidate: float, T_s: float) -> float:
    """Round a window length up to an even number of samples."""
    if T_s <= 0:
        return candidate
    n = math.ceil(candidate / T_s - 1e-9)
    n += n % 2
    return n * T_s


def _window(dq: float, v: float, T_s: float) -> float:
    """Window needed to cover dq from speed |v| to 0 (discrete-exact)."""
    if T_s > 0:
        return max(2.0 * abs(dq) / v - T_s, 0.0)
    return 2.0 * abs(dq) / v


def replan_deceleration(q_rd: Sequence[float], q_rf: Sequence[float], t_b: float,
                        v_r: Sequence[float], v_max: float = V_MAX,
                        a_max: float = A_MAX, T_s: float = 0.0) -> ReplanResult:
    """Correction velocities/accelerations that land the reference on q_rf.

    ``q_rd`` are the (traveling, traversing) reference positions at
    deceleration entry and ``v_r`` the planned cruise speeds.  ``T_s = 0``
    uses the continuous-time formulas; ``T_s > 0`` the exact sums of the
    forward-Euler reference model, so the landing is exact in discrete time.
    Decelerating from v_rc with constant -a_rc over the returned window ends
    at q_rf with zero velocity.
    """
    steps = 0
    dq = [float(f) - float(d) for f, d in zip(q_rf, q_rd)]

    def vel(window: float) -> list[float]:
        return [2.0 * d / (window + T_s) for d in dq]

    # Step 1: correction velocities over the nominal window
    tb = t_b
    v_rc = vel(tb)
    steps += 2
    flag = False
    branch = "nominal"
    if any(abs(v) > v_max + TOL for v in v_rc):
        tb = max(tb, _extend(max(_window(d, v_max, T_s) for d in dq), T_s))
        v_rc = vel(tb)
        flag = True
        branch = "velocity"
        steps += 3
    # Step 2: correction accelerations
    a_rc = [v / tb for v in v_rc]
    steps += 2
    if any(abs(a) > a_max + TOL for a in a_rc):
        speeds = [vr if vr > 0 else v_max for vr in (abs(float(v)) for v in v_r)]
        need = max(_window(d, s, T_s) for d, s in zip(dq, speeds))
        need = max(need, max(math.sqrt(2.0 * abs(d) / a_max) for d in dq))
        tb = max(tb, _extend(need, T_s))
        v_rc = vel(tb)
        a_rc = [v / tb for v in v_rc]
        flag = True
        branch = "acceleration"
        steps += 5
    # flag check, optional hoist update, reseed
    steps += 2 if flag else 1
    steps += 1
    return ReplanResult((v_rc[0], v_rc[1]), (a_rc[0], a_rc[1]), tb, flag, steps, branch)


@dataclass(frozen=True)
class TransitionPlan:
    """One point-to-point move: LSPB on x and y sharing (t_b, t_f), and an
    optional hoist profile (lift during acceleration, lower during
    deceleration; its duration must not exceed t_b)."""

    x: LspbSpec
    y: LspbSpec
    hoist: MinTimeSpec | None = None
    v_max: float = V_MAX
    a_max: float = A_MAX

    def __post_init__(self) -> None:
        if abs(self.x.t_b - self.y.t_b) > TOL or abs(self.x.t_f - self.y.t_f) > TOL:
            raise InvalidParameter("x and y profiles must share t_b and t_f")
        if self.hoist is not None and self.hoist.t_f > self.t_b + TOL:
            raise InvalidParameter("hoist profile longer than the blend time")

    @property
    def t_b(self) -> float:
        return self.x.t_b

    @property
    def t_f(self) -> float:
        return self.x.t_f

    @property
    def l_start(self) -> float:
        return self.hoist.q_0 if self.hoist else float("nan")

    def reversed(self) -> "TransitionPlan":
        return replace(self, x=self.x.reversed(), y=self.y.reversed())

    def original_reference(self, t: float) -> tuple[float, float, float]:
        """Unmodified (x, y, l) reference at time t within the transition."""
        t = min(max(t, 0.0), self.t_f)
        x = lspb_eval(self.x, t)[0]
        y = lspb_eval(self.y, t)[0]
        if self.hoist is None:
            return x, y, float("nan")
        h = self.hoist
        if t <= h.t_f:
            l = mintime_eval(h, t)[0]
        elif t < self.t_f - h.t_f:
            l = h.q_f
        else:
            l = mintime_eval(h.reversed(), t - (self.t_f - h.t_f))[0]
        return x, y, l


ZONES = ("accel", "const-vel", "decel", "done")


@dataclass
class ReferenceState:
    x_rm: np.ndarray
    u_c: np.ndarray
    zone: str


class ReferenceGenerator:
    """Reference signal generator for one transition.

    Call :meth:`command` with the current swing correction to obtain u_c(k),
    then :meth:`advance` to move x_rm to k+1.
    """

    def __init__(self, plan: TransitionPlan, T_s: float = 0.01, l_0: float | None = None,
                 exact_replan: bool = True):
        self.plan = plan
        self.T_s = T_s
        self.exact_replan = exact_replan
        self.n_b = int(round(plan.t_b / T_s))
        self.n_f = int(round(plan.t_f / T_s))
        self.n_decel = self.n_b
        h = plan.hoist
        self.n_h = int(round(h.t_f / T_s)) if h else 0
        self.a_l = h.direction * h.a if h else 0.0
        if l_0 is None:
            l_0 = h.q_0 if h else 0.0
        self.x_rm = np.array([plan.x.q_0, 0.0, plan.y.q_0, 0.0, l_0, 0.0])
        self.k = 0
        self.replan: ReplanResult | None = None
        self.a_rc = (0.0, 0.0)
        self.a_l_down = -self.a_l
        self.n_h_down = self.n_h

    @property
    def k_decel(self) -> int:
        return self.n_f - self.n_b

    @property
    def n_total(self) -> int:
        return self.k_decel + self.n_decel

    def zone_at(self, k: int) -> str:
        if k < self.n_b:
            return "accel"
        if k < self.k_decel:
            return "const-vel"
        if k < self.n_total:
            return "decel"
        return "done"

    @property
    def zone(self) -> str:
        return self.zone_at(self.k)

    def nominal_xy(self, k: int) -> tuple[float, float]:
        """Planned (unmodified) x/y accelerations for step k."""
        z = self.zone_at(k)
        if z == "accel":
            s = 1.0
        elif z == "decel" and self.replan is None:
            s = -1.0
        else:
            s = 0.0
        return (s * self.plan.x.direction * self.plan.x.a,
                s * self.plan.y.direction * self.plan.y.a)

    def hoist_command(self, k: int) -> float:
        if self.plan.hoist is None:
            return 0.0
        if k < self.n_h:
            return self.a_l if k < self.n_h // 2 else -self.a_l
        j = k - self.k_decel
        if 0 <= j < self.n_h_down:
            return self.a_l_down if j < self.n_h_down // 2 else -self.a_l_down
        return 0.0

    def enter_decel(self) -> ReplanResult:
        p = self.plan
        T = self.T_s if self.exact_replan else 0.0
        res = replan_deceleration((self.x_rm[0], self.x_rm[2]), (p.x.q_f, p.y.q_f),
                                  p.t_b, (p.x.v_m, p.y.v_m), p.v_max, p.a_max, T)
        self.replan = res
        self.x_rm[1] = res.v_rc[0]
        self.x_rm[3] = res.v_rc[1]
        self.a_rc = res.a_rc
        self.n_decel = int(round(res.t_b / self.T_s))
        if res.hoist_update and p.hoist is not None:
            # lower the load over the whole extended window
            self.n_h_down = self.n_decel
            t_h = self.n_h_down * self.T_s
            dl = p.hoist.q_0 - self.x_rm[4]
            self.a_l_down = 4.0 * dl / (t_h * t_h)
        return res

    def command(self, correction: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
        """u_c(k); ``correction`` is the swing-control term added to the
        planned x/y accelerations (ignored from deceleration onwards)."""
        k = self.k
        if k == self.k_decel and self.replan is None:
            self.enter_decel()
        z = self.zone_at(k)
        if z in ("accel", "const-vel"):
            ax, ay = self.nominal_xy(k)
            ux, uy = ax + correction[0], ay + correction[1]
        elif z == "decel":
            ux, uy = -self.a_rc[0], -self.a_rc[1]
        else:
            ux = uy = 0.0
        return np.array([ux, uy, self.hoist_command(k)])

    def advance(self, u_c: Sequence[float]) -> ReferenceState:
        z = self.zone
        if z in ("accel", "const-vel"):
            self.x_rm = reference_model_step(self.x_rm, u_c, self.T_s,
                                             self.plan.v_max, self.plan.a_max)
        else:
            self.x_rm = reference_model_step(self.x_rm, u_c, self.T_s)
        self.k += 1
        return ReferenceState(self.x_rm.copy(), np.asarray(u_c, float), self.zone)

    def preview(self, n: int, correction: Sequence[float] = (0.0, 0.0),
                u_now: Sequence[float] | None = None) -> np.ndarray:
        """Reference outputs (x, y, l) for steps k+1 .. k+n.

        The planned command schedule is followed; the current swing
        correction is held over the horizon.
        """
        x = self.x_rm.copy()
        out = np.empty((n, 3))
        for j in range(n):
            k = self.k + j
            if j == 0 and u_now is not None:
                u = np.asarray(u_now, float)
            else:
                z = self.zone_at(k)
                if z in ("accel", "const-vel"):
                    ax, ay = self.nominal_xy(k)
                    u = np.array([ax + correction[0], ay + correction[1], self.hoist_command(k)])
                elif z == "decel" and self.replan is not None:
                    u = np.array([-self.a_rc[0], -self.a_rc[1], self.hoist_command(k)])
                elif z == "decel":
                    ax, ay = self.nominal_xy(k)
                    u = np.array([ax, ay, self.hoist_command(k)])
                else:
                    u = np.zeros(3)
            z = self.zone_at(k)
            if z in ("accel", "const-vel"):
                x = reference_model_step(x, u, self.T_s, self.plan.v_max, self.plan.a_max)
            else:
                x = reference_model_step(x, u, self.T_s)
            out[j] = x[0::2]
        return out


def profile_table(spec: LspbSpec | MinTimeSpec, T_s: float = 0.01) -> np.ndarray:
    """Sampled (t, q, qd, qdd) rows of a profile."""
    n = int(round(spec.t_f / T_s))
    ev = lspb_eval if isinstance(spec, LspbSpec) else mintime_eval
    rows = [(k * T_s, *ev(spec, min(k * T_s, spec.t_f))) for k in range(n + 1)]
    return np.array(rows)
