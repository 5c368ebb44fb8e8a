"""Closed-loop scenario runs, metrics and log export.

One run chains ``repetitions`` out-and-back transitions, each followed by a
rest interval in which the reference holds its end point.  Every sample
period the loop reads the sensors, updates the swing observer, forms the
(swing-corrected) reference command, obtains the disturbance estimate,
computes the control voltage, updates the axis observers and advances the
plant by one RK4 step over T_s.

Logged references are the original, unmodified trajectories: tracking
errors and the distance error are measured against them.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ScenarioConfig
from .errors import CraneError, NearSingularH
from .model import model_from_parameters
from .mpc import MpcController
from .observer import StateObserver
from .params import table_parameters
from .plant import CraneState, LoadPosition, Plant, load_position
from .sfb import (DisturbanceObserver, computed_torque, feedforward_gains,
                  feedforward_signal, sfb_step)
from .swing import SwingObserver, swing_correction
from .traj import ReferenceGenerator, TransitionPlan

COLUMNS = ("t", "x", "vx", "y", "vy", "l", "vl", "thx", "thx_dot", "thy", "thy_dot",
           "x_ref", "y_ref", "l_ref", "u_x", "u_y", "u_l", "fdx_hat", "fdy_hat",
           "fdl_hat", "thx_hat", "thy_hat", "eq_dist", "sat_flag", "qp_status")
INT_COLUMNS = ("sat_flag", "qp_status")

# qp_status codes
QP_NONE, QP_OPTIMAL, QP_INFEASIBLE, QP_MAX_ITER = 0, 1, 2, 3
_QP_CODES = {"optimal": QP_OPTIMAL, "infeasible": QP_INFEASIBLE, "max-iter": QP_MAX_ITER}

WORKSPACE_MIN = (0.0, 0.0, 1e-3)
WORKSPACE_MAX = (0.6, 0.6, 0.6)


class SimulationAbort(CraneError):
    """Plant domain violation during a run; carries the partial log."""

    def __init__(self, message: str, log: "SimulationLog"):
        super().__init__(message)
        self.log = log


@dataclass
class SimulationLog:
    """Per-step records, one row per sample in :data:`COLUMNS` order."""

    T_s: float
    data: np.ndarray = field(default_factory=lambda: np.empty((0, len(COLUMNS))))
    # modified (tracked) reference positions, in-memory only
    x_rm: np.ndarray | None = None
    qp_active: np.ndarray | None = None
    qp_cost: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.data)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COLUMNS.index(name)]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.column(name)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        ints = {COLUMNS.index(c) for c in INT_COLUMNS}
        for row in self.data:
            w.writerow([str(int(v)) if j in ints else repr(float(v))
                        for j, v in enumerate(row)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source: str | Path, T_s: float | None = None) -> "SimulationLog":
        """Read a log written by :meth:`to_csv` (path or CSV text)."""
        text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != COLUMNS:
            raise ValueError("CSV header does not match the log schema")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        data = data.reshape(-1, len(COLUMNS))
        if T_s is None:
            T_s = float(data[1, 0] - data[0, 0]) if len(data) > 1 else float("nan")
        return cls(T_s, data)


@dataclass
class TransitionMetrics:
    start: int
    motion_end: int
    end: int
    error_at_tf: tuple[float, float, float]
    final_error: tuple[float, float, float]
    max_theta_x: float
    max_theta_y: float


@dataclass
class Metrics:
    tracking_error: np.ndarray       # (N, 3) original reference minus measured
    eq_dist: np.ndarray              # (N,)
    transitions: list[TransitionMetrics]
    saturation_count: int
    fallback_count: int
    max_abs_u: float
    mean_eq_dist: float
    max_eq_dist: float
    max_theta: float                 # max over transitions of max(|th_x|, |th_y|) [rad]
    position_min: tuple[float, float, float]
    position_max: tuple[float, float, float]

    @property
    def max_final_error(self) -> float:
        return max((max(abs(e) for e in tr.final_error) for tr in self.transitions),
                   default=float("nan"))

    @property
    def in_workspace(self) -> bool:
        return (all(lo >= w - 1e-12 for lo, w in zip(self.position_min, WORKSPACE_MIN))
                and all(hi <= w + 1e-12 for hi, w in zip(self.position_max, WORKSPACE_MAX)))

    def to_dict(self) -> dict:
        return {
            "transitions": [asdict(t) for t in self.transitions],
            "max_final_error": self.max_final_error,
            "saturation_count": self.saturation_count,
            "fallback_count": self.fallback_count,
            "max_abs_u": self.max_abs_u,
            "mean_eq_dist": self.mean_eq_dist,
            "max_eq_dist": self.max_eq_dist,
            "max_theta": self.max_theta,
            "max_theta_deg": math.degrees(self.max_theta),
            "position_min": list(self.position_min),
            "position_max": list(self.position_max),
            "in_workspace": self.in_workspace,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def distance_error(load: LoadPosition | Sequence[float], ref: Sequence[float]) -> float:
    """Euclidean distance between the load and the reference point
    (x_ref, y_ref, z_ref) with z_ref = -l_ref."""
    return math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(load, ref)))


def transition_plans(cfg: ScenarioConfig) -> list[TransitionPlan]:
    out = cfg.trajectory.plan(cfg.mode)
    return [out if j % 2 == 0 else out.reversed() for j in range(cfg.repetitions)]


def _segments(ref: np.ndarray) -> list[tuple[int, int, int]]:
    """(start, motion_end, end) index triples from the reference columns.

    A transition starts where the reference begins to move and ends just
    before the next one starts (or at the last sample).
    """
    n = len(ref)
    if n < 2:
        return []
    moving = np.any(np.diff(ref, axis=0) != 0.0, axis=1)
    starts, ends = [], []
    prev = False
    for k, mv in enumerate(moving):
        if mv and not prev:
            starts.append(k)
        if prev and not mv:
            ends.append(k)
        prev = bool(mv)
    if prev:
        ends.append(n - 1)
    segs = []
    for j, (s, e) in enumerate(zip(starts, ends)):
        stop = starts[j + 1] - 1 if j + 1 < len(starts) else n - 1
        segs.append((s, e, stop))
    return segs


def compute_metrics(log: SimulationLog, fallback_count: int | None = None) -> Metrics:
    """Metrics from a log (identical for in-memory and re-imported logs)."""
    d = log.data
    pos = d[:, [COLUMNS.index(c) for c in ("x", "y", "l")]]
    ref = d[:, [COLUMNS.index(c) for c in ("x_ref", "y_ref", "l_ref")]]
    err = ref - pos
    thx, thy = np.abs(log["thx"]), np.abs(log["thy"])
    trs = []
    for s, e, stop in _segments(ref):
        trs.append(TransitionMetrics(
            s, e, stop,
            tuple(float(v) for v in err[e]), tuple(float(v) for v in err[stop]),
            float(thx[s:stop + 1].max()), float(thy[s:stop + 1].max())))
    u = d[:, [COLUMNS.index(c) for c in ("u_x", "u_y", "u_l")]]
    qp = log["qp_status"]
    eq = log["eq_dist"]
    n = len(d)
    return Metrics(
        tracking_error=err, eq_dist=eq, transitions=trs,
        saturation_count=int(np.sum(log["sat_flag"] != 0)),
        fallback_count=int(np.sum((qp == QP_INFEASIBLE) | (qp == QP_MAX_ITER)))
        if fallback_count is None else fallback_count,
        max_abs_u=float(np.max(np.abs(u))) if n else 0.0,
        mean_eq_dist=float(np.mean(eq)) if n else 0.0,
        max_eq_dist=float(np.max(eq)) if n else 0.0,
        max_theta=max((max(t.max_theta_x, t.max_theta_y) for t in trs), default=0.0),
        position_min=tuple(float(v) for v in pos.min(axis=0)) if n else (0.0,) * 3,
        position_max=tuple(float(v) for v in pos.max(axis=0)) if n else (0.0,) * 3,
    )


class _Sensors:
    """Position and angle read-out with optional quantisation and noise."""

    def __init__(self, cfg: ScenarioConfig, ratios: Sequence[float]):
        c = cfg.plant
        self.counts = c.encoder_counts
        self.q_pos = [2.0 * math.pi * r / c.encoder_counts for r in ratios] if self.counts else None
        self.q_ang = 2.0 * math.pi / c.encoder_counts if self.counts else None
        self.pos_std, self.ang_std = c.position_noise, c.angle_noise
        self.rng = np.random.default_rng(cfg.seed)

    def read(self, x: np.ndarray) -> tuple[np.ndarray, float, float]:
        y = np.array([x[0], x[2], x[4]])
        th = np.array([x[6], x[8]])
        if self.pos_std:
            y = y + self.rng.normal(0.0, self.pos_std, 3)
        if self.ang_std:
            th = th + self.rng.normal(0.0, self.ang_std, 2)
        if self.counts:
            y = np.array([q * round(v / q) for v, q in zip(y, self.q_pos)])
            th = np.array([self.q_ang * round(v / self.q_ang) for v in th])
        return y, float(th[0]), float(th[1])


def run_scenario(cfg: ScenarioConfig, backend: str | None = None
                 ) -> tuple[SimulationLog, Metrics]:
    """Simulate ``cfg`` and return the log and its metrics.

    Plant domain violations abort with :class:`SimulationAbort`; solver
    fallbacks and near-singular swing corrections are logged and the run
    continues.
    """
    T = cfg.T_s
    nominal = table_parameters(m=cfg.load_mass)
    pc = cfg.plant
    true_params = nominal.scaled(pc.inertia_scale, pc.damping_scale, pc.friction_scale)
    plant = Plant(true_params, cfg.mode, cfg.substeps, backend)
    model = model_from_parameters(nominal, T)
    plans = transition_plans(cfg)
    planar = cfg.mode == "2D"

    p0 = plans[0]
    x = CraneState(x=p0.x.q_0, y=p0.y.q_0, l=p0.hoist.q_0 if p0.hoist else 0.25).to_array()
    observer = StateObserver(model, cfg.sfb.L, x0=[x[0], 0.0, x[2], 0.0, x[4], 0.0])
    swing_obs = SwingObserver(cfg.swing_observer)
    dob = DisturbanceObserver(cfg.sfb.L_w) if cfg.feedforward == "dob" else None
    gains = feedforward_gains(model)
    mpc = MpcController(model, cfg.mpc) if cfg.controller == "mpc" else None
    sensors = _Sensors(cfg, [a.ratio for a in nominal.axes])
    n_rest = int(round(cfg.rest / T))

    rows: list[list[float]] = []
    rm_rows: list[np.ndarray] = []
    active: list[int] = []
    costs: list[float] = []
    log = SimulationLog(T)
    k = 0
    l_now = x[4]
    for plan in plans:
        gen = ReferenceGenerator(plan, T, l_0=l_now if plan.hoist is None else None)
        n_move = gen.n_f
        kk = 0
        while kk < max(n_move, gen.n_total) + n_rest:
            t = k * T
            y_meas, thx_m, thy_m = sensors.read(x)
            est = swing_obs.estimate
            # swing correction on top of the planned accelerations
            corr = (0.0, 0.0)
            if cfg.swing_control and gen.zone in ("accel", "const-vel"):
                a_ref = gen.nominal_xy(gen.k)
                try:
                    ux, uy = swing_correction(est, a_ref, cfg.swing, cfg.mode)
                    corr = (ux - a_ref[0], uy - a_ref[1])
                except NearSingularH as exc:
                    log.notes.append(f"t={t:.2f}: {exc}")
            u_c = gen.command(corr)
            x_rm = gen.x_rm.copy()
            if cfg.feedforward == "computed-torque":
                f_hat = computed_torque(x_rm, u_c, est, nominal, cfg.load_mass,
                                        cfg.mode).f_hat
            elif dob is not None:
                f_hat = dob.f_hat.copy()
            else:
                f_hat = np.zeros(3)
            x_hat = observer.x_hat.copy()
            qp_status = QP_NONE
            if mpc is None:
                # Scenario I runs the bare regulator without any feedforward
                u_ff = (feedforward_signal(x_rm, u_c, f_hat, gains)
                        if cfg.feedforward != "none" else np.zeros(3))
                u, sat = sfb_step(x_hat, x_rm, u_ff, cfg.sfb.K, cfg.sfb.u_max)
                active.append(0)
                costs.append(float("nan"))
            else:
                Y_ref = gen.preview(cfg.mpc.H_p, corr, u_c)
                u, diag = mpc.step(x_hat, Y_ref, f_hat)
                sat = bool(np.any(u >= np.array(cfg.mpc.u_max) - 1e-9)
                           or np.any(u <= np.array(cfg.mpc.u_min) + 1e-9))
                qp_status = _QP_CODES[diag.status]
                active.append(diag.active)
                costs.append(diag.cost)
                if diag.fallback:
                    log.notes.append(f"t={t:.2f}: QP {diag.status}, fallback applied")
            if planar:
                u = np.array([u[0], 0.0, u[2]])
            if dob is not None:
                dob.step(y_meas, x_hat)
            observer.step(u, f_hat, y_meas)

            t_in = min(kk, n_move) * T
            ref = plan.original_reference(t_in)
            if plan.hoist is None:
                ref = (ref[0], ref[1], l_now)
            load = load_position(CraneState.from_array(x))
            eq = distance_error(load, (ref[0], ref[1], -ref[2]))
            rows.append([t, *x.tolist(), *ref, *u.tolist(), *f_hat.tolist(),
                         est.theta_x, est.theta_y, eq, int(sat), qp_status])
            rm_rows.append(x_rm[0::2])

            swing_obs.step(thx_m, thy_m)
            gen.advance(u_c)
            try:
                x = plant.step_array(x, u, T)
            except CraneError as exc:
                log.data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
                raise SimulationAbort(f"t={t + T:.2f}: {exc}", log) from exc
            k += 1
            kk += 1
        l_now = x[4]
    log.data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    log.x_rm = np.array(rm_rows).reshape(-1, 3)
    log.qp_active = np.array(active, dtype=int)
    log.qp_cost = np.array(costs, dtype=float)
    return log, compute_metrics(log)


def export(log: SimulationLog, metrics: Metrics | None, fmt: str, path: str | Path) -> list[Path]:
    """Write the log (csv) or metrics (json); ``path`` is a file or a stem."""
    path = Path(path)
    if fmt == "csv":
        out = path if path.suffix == ".csv" else path.with_suffix(".csv")
        log.to_csv(out)
        return [out]
    if fmt == "json":
        out = path if path.suffix == ".json" else path.with_suffix(".json")
        (metrics or compute_metrics(log)).to_json(out)
        return [out]
    raise ValueError(f"unknown export format {fmt!r}")


def canonical_configs() -> list[ScenarioConfig]:
    """The 24 runs: 2 controllers x 3 scenarios x 2 speeds x 2 masses."""
    from .config import preset
    out = []
    for speed in ("slow", "fast"):
        cfg0 = preset(speed)
        for controller in ("sfb", "mpc"):
            for scenario in ("I", "II", "III"):
                for m in (0.4, 0.8):
                    out.append(cfg0.with_(controller=controller, scenario=scenario,
                                          load_mass=m))
    return out
