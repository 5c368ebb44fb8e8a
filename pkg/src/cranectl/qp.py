"""Dense strictly convex QP solver (Goldfarb-Idnani dual active set).

    minimise 1/2 x^T H x + g^T x   subject to   W x <= w

The dual method starts at the unconstrained minimiser and adds the most
violated constraint each major iteration, so infeasibility is detected
directly (a violated constraint that cannot be reached by any step).
Problem sizes here are tiny (a few dozen variables at most), so the
projection is recomputed from a fresh QR factorisation each iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, InvalidParameter, MaxIterations


@dataclass
class QpResult:
    x: np.ndarray
    objective: float
    active: list[int]
    multipliers: np.ndarray
    iterations: int


def _objective(H: np.ndarray, g: np.ndarray, x: np.ndarray) -> float:
    return float(0.5 * x @ H @ x + g @ x)


def solve_qp(H: np.ndarray, g: np.ndarray, W: np.ndarray | None = None,
             w: np.ndarray | None = None, tol: float = 1e-9,
             max_iter: int = 200) -> QpResult:
    """Solve the QP; raises Infeasible or MaxIterations."""
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    n = len(g)
    try:
        L = np.linalg.cholesky(0.5 * (H + H.T))
    except np.linalg.LinAlgError:
        raise InvalidParameter("Hessian is not positive definite") from None
    Linv = np.linalg.solve(L, np.eye(n))  # H^-1 = Linv^T Linv
    x = -Linv.T @ (Linv @ g)
    if W is None or len(W) == 0:
        return QpResult(x, _objective(H, g, x), [], np.zeros(0), 0)
    W = np.asarray(W, dtype=float)
    w = np.asarray(w, dtype=float)
    # unit-norm rows so one tolerance fits every constraint
    norms = np.linalg.norm(W, axis=1)
    zero = norms == 0.0
    if np.any(zero & (w < -tol)):
        raise Infeasible("constraint 0 <= w with w < 0")
    norms[zero] = 1.0
    N = W / norms[:, None]
    b = w / norms
    m = len(b)
    active: list[int] = []
    u = np.zeros(0)
    it = 0
    while True:
        slack = b - N @ x  # >= 0 when satisfied
        slack[zero] = np.inf
        if active:
            slack[active] = np.inf
        p = int(np.argmin(slack))
        if slack[p] >= -tol:
            break
        u_plus = np.append(u, 0.0)
        while True:
            it += 1
            if it > max_iter:
                raise MaxIterations(f"QP not solved in {max_iter} iterations")
            d = Linv @ N[p]
            if active:
                B = Linv @ N[active].T
                Q, R = np.linalg.qr(B, mode="complete")
                q = len(active)
                dt = Q.T @ d
                z = Linv.T @ (Q[:, q:] @ dt[q:])
                r = np.linalg.solve(R[:q, :q], dt[:q])
            else:
                z = Linv.T @ d
                r = np.zeros(0)
            # partial step bound from the active multipliers
            t1, k_drop = np.inf, -1
            for j in range(len(active)):
                if r[j] > tol * 1e-3 and u_plus[j] / r[j] < t1:
                    t1, k_drop = u_plus[j] / r[j], j
            nz = float(N[p] @ z)
            if np.linalg.norm(z) <= 1e-12 or nz <= 1e-14:
                if k_drop < 0:
                    raise Infeasible(f"constraint {p} cannot be satisfied")
                u_plus[:-1] -= t1 * r
                u_plus[-1] += t1
                del active[k_drop]
                u_plus = np.delete(u_plus, k_drop)
                continue
            t2 = (N[p] @ x - b[p]) / nz
            t = min(t1, t2)
            x = x - t * z
            u_plus[:-1] -= t * r
            u_plus[-1] += t
            if t2 <= t1:
                active.append(p)
                u = u_plus
                break
            del active[k_drop]
            u_plus = np.delete(u_plus, k_drop)
    mult = np.zeros(m)
    if active:
        mult[active] = np.maximum(u, 0.0) / norms[active]
    return QpResult(x, _objective(H, g, x), active, mult, it)


def kkt_residuals(H: np.ndarray, g: np.ndarray, W: np.ndarray, w: np.ndarray,
                  x: np.ndarray, mult: np.ndarray) -> dict[str, float]:
    """Stationarity, primal infeasibility, dual infeasibility, complementarity."""
    stat = H @ x + g + (W.T @ mult if len(W) else 0.0)
    viol = W @ x - w if len(W) else np.zeros(0)
    return {
        "stationarity": float(np.max(np.abs(stat))) if len(x) else 0.0,
        "primal": float(max(0.0, np.max(viol))) if len(viol) else 0.0,
        "dual": float(max(0.0, -np.min(mult))) if len(mult) else 0.0,
        "complementarity": float(np.max(np.abs(mult * viol))) if len(viol) else 0.0,
    }
