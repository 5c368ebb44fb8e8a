"""Helpers shared across test modules: a per-session cache of closed-loop
runs and the acceptance report lines."""
import json
import math

import numpy as np

from cranectl.harness import run_scenario
from cranectl.swing import h_inverse, swing_accelerations

_RUNS: dict = {}
REPORT: list[str] = []


def run_cached(cfg):
    key = json.dumps(cfg.to_dict(), sort_keys=True)
    if key not in _RUNS:
        _RUNS[key] = run_scenario(cfg)
    return _RUNS[key]


def simulate_swing(a_ref, v_l, k=(0.17, 0.17), T=20.0, dt=1e-3, l0=0.3, theta0=(0.0, 0.0),
                   omega0=(0.0, 0.0)):
    """RK4 of the isolated swing loop driven by a_ref(t) + K H^-1 w."""
    K = np.diag(k)

    def f(t, s):
        tx, ty, wx, wy, l = s
        a = np.asarray(a_ref(t)) + K @ h_inverse(tx, ty) @ np.array([wx, wy])
        atx, aty = swing_accelerations((tx, ty), (wx, wy), l, v_l(t), a)
        return np.array([wx, wy, atx, aty, v_l(t)])

    n = int(round(T / dt))
    s = np.array([theta0[0], theta0[1], omega0[0], omega0[1], l0])
    out = np.empty((n + 1, 5))
    out[0] = s
    for i in range(n):
        t = i * dt
        k1 = f(t, s)
        k2 = f(t + dt / 2, s + dt / 2 * k1)
        k3 = f(t + dt / 2, s + dt / 2 * k2)
        k4 = f(t + dt, s + dt * k3)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = s
    return out


def l2(x, dt):
    return math.sqrt(float(np.sum(x * x)) * dt)
