"""Pure-Python plant kernels.

Line-for-line twin of ``_kernels.pyx``: same operation order, so both
backends produce bit-identical trajectories.  Status codes: 0 ok,
1 swing angle out of range, 2 rope too short or non-finite, 3 singular
acceleration system.
"""
from math import cos, sin

# layout of the flat parameter vector (see plant.pack_parameters)
P_J, P_B, P_K, P_A1, P_A2, P_RR = 0, 3, 6, 9, 12, 15
P_M, P_G, P_DB, P_THMAX, P_LMIN = 18, 19, 20, 21, 22
P_SIZE = 23


def _friction(v, a1, a2, db):
    if v > db:
        return a1
    if v < -db:
        return -a2
    return 0.0


def derivative_into(x, u, p, planar, out):
    thx = x[6]
    wx = x[7]
    thy = x[8]
    wy = x[9]
    l = x[4]
    vl = x[5]
    if planar:
        thy = 0.0
        wy = 0.0
    thmax = p[P_THMAX]
    if not (abs(thx) <= thmax and abs(thy) <= thmax):
        return 1
    if not (l >= p[P_LMIN]):
        return 2
    m = p[P_M]
    g = p[P_G]
    db = p[P_DB]
    sx = sin(thx)
    cx = cos(thx)
    sy = sin(thy)
    cy = cos(thy)
    # rope direction seen by each axis and the tension-free load force
    n0 = sx * cy
    n1 = sy
    if planar:
        n1 = 0.0
    c = l * (cy * cy * wx * wx + wy * wy) + g * cx * cy
    b0 = (p[P_K] * u[0] - p[P_B] * x[1]
          - _friction(x[1], p[P_A1], p[P_A2], db) + m * p[P_RR] * n0 * c)
    b1 = 0.0
    if not planar:
        b1 = (p[P_K + 1] * u[1] - p[P_B + 1] * x[3]
              - _friction(x[3], p[P_A1 + 1], p[P_A2 + 1], db)
              + m * p[P_RR + 1] * n1 * c)
    b2 = (p[P_K + 2] * u[2] - p[P_B + 2] * vl
          - _friction(vl, p[P_A1 + 2], p[P_A2 + 2], db) + m * p[P_RR + 2] * c)
    # rank-one update of diag(J): Sherman-Morrison
    j0 = p[P_J]
    j1 = p[P_J + 1]
    j2 = p[P_J + 2]
    den = 1.0 + m * (p[P_RR] * n0 * n0 / j0 + p[P_RR + 1] * n1 * n1 / j1
                     + p[P_RR + 2] / j2)
    if not (den > 0.0 and den < 1e300):
        return 3
    s = (n0 * b0 / j0 + n1 * b1 / j1 + b2 / j2) / den
    ax = (b0 - m * p[P_RR] * n0 * s) / j0
    ay = 0.0
    if not planar:
        ay = (b1 - m * p[P_RR + 1] * n1 * s) / j1
    al = (b2 - m * p[P_RR + 2] * s) / j2
    atx = -(cx * ax + g * sx + 2.0 * vl * wx * cy
            - 2.0 * l * wx * wy * sy) / (l * cy)
    aty = 0.0
    if not planar:
        aty = -(l * wx * wx * sy * cy - sx * sy * ax + cy * ay + g * cx * sy
                + 2.0 * vl * wy) / l
    out[0] = x[1]
    out[1] = ax
    out[4] = x[5]
    out[5] = al
    out[6] = wx
    out[7] = atx
    if planar:
        out[2] = 0.0
        out[3] = 0.0
        out[8] = 0.0
        out[9] = 0.0
    else:
        out[2] = x[3]
        out[3] = ay
        out[8] = wy
        out[9] = aty
    return 0


def derivative(x, u, p, planar):
    """Return (status, 10-list) for state ``x`` under voltages ``u``."""
    out = [0.0] * 10
    status = derivative_into(x, u, p, planar, out)
    return status, out


def rk4(x, u, p, dt, substeps, planar):
    """Classical RK4 over ``dt`` split into ``substeps``; returns (status, state)."""
    h = dt / substeps
    hh = 0.5 * h
    h6 = h / 6.0
    s = [float(v) for v in x]
    k1 = [0.0] * 10
    k2 = [0.0] * 10
    k3 = [0.0] * 10
    k4 = [0.0] * 10
    tmp = [0.0] * 10
    for _ in range(substeps):
        st = derivative_into(s, u, p, planar, k1)
        if st:
            return st, s
        for i in range(10):
            tmp[i] = s[i] + hh * k1[i]
        st = derivative_into(tmp, u, p, planar, k2)
        if st:
            return st, s
        for i in range(10):
            tmp[i] = s[i] + hh * k2[i]
        st = derivative_into(tmp, u, p, planar, k3)
        if st:
            return st, s
        for i in range(10):
            tmp[i] = s[i] + h * k3[i]
        st = derivative_into(tmp, u, p, planar, k4)
        if st:
            return st, s
        for i in range(10):
            s[i] = s[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return 0, s
