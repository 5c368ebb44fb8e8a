# cython: language_level=3
"""Compiled plant kernels; mirrors ``_kernels_py`` operation for operation."""
from libc.math cimport cos, sin, fabs

import numpy as np

cdef enum:
    P_J = 0
    P_B = 3
    P_K = 6
    P_A1 = 9
    P_A2 = 12
    P_RR = 15
    P_M = 18
    P_G = 19
    P_DB = 20
    P_THMAX = 21
    P_LMIN = 22


cdef inline double _friction(double v, double a1, double a2, double db) nogil:
    if v > db:
        return a1
    if v < -db:
        return -a2
    return 0.0


cdef int _derivative(const double* x, const double* u, const double* p,
                     int planar, double* out) nogil:
    cdef double thx = x[6]
    cdef double wx = x[7]
    cdef double thy = x[8]
    cdef double wy = x[9]
    cdef double l = x[4]
    cdef double vl = x[5]
    cdef double thmax, m, g, db, sx, cx, sy, cy, n0, n1, c
    cdef double b0, b1, b2, j0, j1, j2, den, s, ax, ay, al, atx, aty
    if planar:
        thy = 0.0
        wy = 0.0
    thmax = p[P_THMAX]
    if not (fabs(thx) <= thmax and fabs(thy) <= thmax):
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


def derivative(x, u, p, bint planar):
    """Return (status, 10-array) for state ``x`` under voltages ``u``."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    res = np.zeros(10)
    cdef double[::1] ov = res
    cdef int st = _derivative(&xv[0], &uv[0], &pv[0], planar, &ov[0])
    return st, res


def rk4(x, u, p, double dt, int substeps, bint planar):
    """Classical RK4 over ``dt`` split into ``substeps``; returns (status, state)."""
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    res = np.array(x, dtype=np.float64, copy=True)
    cdef double[::1] s = res
    cdef double k1[10]
    cdef double k2[10]
    cdef double k3[10]
    cdef double k4[10]
    cdef double tmp[10]
    cdef double h = dt / substeps
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0
    cdef int n, i, st = 0
    with nogil:
        for n in range(substeps):
            st = _derivative(&s[0], &uv[0], &pv[0], planar, k1)
            if st:
                break
            for i in range(10):
                tmp[i] = s[i] + hh * k1[i]
            st = _derivative(tmp, &uv[0], &pv[0], planar, k2)
            if st:
                break
            for i in range(10):
                tmp[i] = s[i] + hh * k2[i]
            st = _derivative(tmp, &uv[0], &pv[0], planar, k3)
            if st:
                break
            for i in range(10):
                tmp[i] = s[i] + h * k3[i]
            st = _derivative(tmp, &uv[0], &pv[0], planar, k4)
            if st:
                break
            for i in range(10):
                s[i] = s[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return st, res
