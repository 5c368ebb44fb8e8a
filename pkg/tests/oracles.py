"""Independent reference computations shared by the tests."""
import numpy as np
import sympy as sp

from cranectl.params import CraneParameters
from cranectl.plant import CraneState, coulomb_friction


def lagrange_oracle():
    t = sp.symbols("t")
    m, g = sp.symbols("m g", positive=True)
    q = [sp.Function(n)(t) for n in ("x", "y", "l", "tx", "ty")]
    x, y, l, tx, ty = q
    xm = x + l * sp.sin(tx) * sp.cos(ty)
    ym = y + l * sp.sin(ty)
    zm = -l * sp.cos(tx) * sp.cos(ty)
    T = sp.Rational(1, 2) * m * (xm.diff(t) ** 2 + ym.diff(t) ** 2 + zm.diff(t) ** 2)
    L = T - m * g * zm
    acc = sp.symbols("a0:5")
    vel = sp.symbols("v0:5")
    pos = sp.symbols("p0:5")
    sub = {}
    for qi, a, v, p in zip(q, acc, vel, pos):
        sub[qi.diff(t, 2)] = a
        sub[qi.diff(t)] = v
        sub[qi] = p
    eqs = [sp.expand((sp.diff(L.diff(qi.diff(t)), t) - L.diff(qi)).subs(sub)) for qi in q]
    M = sp.Matrix([[e.coeff(a) for a in acc] for e in eqs])
    rest = sp.Matrix([e.subs({a: 0 for a in acc}) for e in eqs])
    return sp.lambdify((pos, vel, m, g), (M, rest), "numpy")


def oracle_derivative(fn, s: CraneState, u, p: CraneParameters):
    pos = [s.x, s.y, s.l, s.theta_x, s.theta_y]
    vel = [s.v_x, s.v_y, s.v_l, s.omega_x, s.omega_y]
    M, rest = fn(pos, vel, p.m, p.g)
    M = np.array(M, float)
    rest = np.array(rest, float).ravel()
    # the swing rows scale with m; evaluate them at unit mass
    M1, rest1 = fn(pos, vel, 1.0, p.g)
    M[3:] = np.array(M1, float)[3:]
    rest[3:] = np.array(rest1, float).ravel()[3:]
    A = np.zeros((5, 5))
    b = np.zeros(5)
    for i, ax in enumerate(p.axes):
        v = vel[i]
        A[i] = ax.ratio * M[i]
        A[i, i] += ax.J_e
        b[i] = (ax.K_e * u[i] - ax.B_e * v - coulomb_friction(v, ax.a_1, ax.a_2, p.deadband)
                - ax.ratio * rest[i])
    A[3:] = M[3:]
    b[3:] = -rest[3:]
    acc = np.linalg.solve(A, b)
    return np.array([vel[0], acc[0], vel[1], acc[1], vel[2], acc[2],
                     vel[3], acc[3], vel[4], acc[4]])


def swing_oracle(fn, theta, omega, l, v_l, a_xy, g=9.81, l_acc=0.0):
    """Swing accelerations from the Lagrangian rows for prescribed trolley
    and hoist accelerations."""
    pos = [0.0, 0.0, l, theta[0], theta[1]]
    vel = [0.0, 0.0, v_l, omega[0], omega[1]]
    M, rest = fn(pos, vel, 1.0, g)
    M = np.array(M, float)
    rest = np.array(rest, float).ravel()
    known = np.array([a_xy[0], a_xy[1], l_acc])
    rhs = -rest[3:] - M[3:, :3] @ known
    return np.linalg.solve(M[3:, 3:], rhs)


def exhaustive_qp(H, g, W, w, tol=1e-8):
    """Optimal objective of min 1/2 x'Hx + g'x s.t. Wx <= w by active-set
    enumeration.

    Strict convexity makes the KKT point unique, so subsets are tried in
    order of size and the first one with a feasible primal and nonnegative
    multipliers is the optimum.  Each size is solved as one batch.
    """
    from itertools import combinations

    n, m = len(g), len(w)
    Hinv = np.linalg.inv(H)
    x_u = -Hinv @ g
    G = W @ Hinv @ W.T
    r = W @ x_u - w
    if np.all(r <= tol):
        return float(0.5 * x_u @ H @ x_u + g @ x_u)
    best = None
    for size in range(1, min(n, m) + 1):
        S = np.array(list(combinations(range(m), size)))
        Gs = G[S[:, :, None], S[:, None, :]]
        ok = np.abs(np.linalg.det(Gs)) > 1e-12
        if not np.any(ok):
            continue
        S, Gs = S[ok], Gs[ok]
        lam = np.linalg.solve(Gs, r[S][:, :, None])[:, :, 0]
        good = np.all(lam >= -tol, axis=1)
        if not np.any(good):
            continue
        S, lam = S[good], lam[good]
        # x = x_u - Hinv W_S' lam
        X = x_u[None, :] - np.einsum("ij,kjl,kl->ki", Hinv, W[S].transpose(0, 2, 1), lam)
        feas = np.all(X @ W.T <= w[None, :] + tol, axis=1)
        if np.any(feas):
            x = X[np.argmax(feas)]
            best = float(0.5 * x @ H @ x + g @ x)
            break
    if best is None:
        raise ValueError("no KKT point found")
    return best
