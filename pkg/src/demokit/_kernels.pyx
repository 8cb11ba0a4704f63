# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled windowed trajectory kernels (turning angle, pair density).

Same contract as demokit._kernels_py; see that module for documentation.
"""

from libc.math cimport INFINITY, M_PI, acos, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def turning_angles(const double[:, ::1] pts, Py_ssize_t window_length):
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t h = window_length // 2
    theta_arr = np.zeros(n, dtype=np.float64)
    degen_arr = np.ones(n, dtype=np.uint8)
    cdef double[::1] theta = theta_arr
    cdef unsigned char[::1] degen = degen_arr
    cdef Py_ssize_t i
    cdef double ux, uy, uz, vx, vy, vz, nu, nv, c
    if n < window_length:
        return theta_arr, degen_arr
    for i in range(h, n - h):
        ux = pts[i - h, 0] - pts[i, 0]
        uy = pts[i - h, 1] - pts[i, 1]
        uz = pts[i - h, 2] - pts[i, 2]
        vx = pts[i + h, 0] - pts[i, 0]
        vy = pts[i + h, 1] - pts[i, 1]
        vz = pts[i + h, 2] - pts[i, 2]
        nu = sqrt(ux * ux + uy * uy + uz * uz)
        nv = sqrt(vx * vx + vy * vy + vz * vz)
        if nu == 0.0 or nv == 0.0:
            theta[i] = 0.0
            degen[i] = 1
        else:
            c = (ux * vx + uy * vy + uz * vz) / (nu * nv)
            if c > 1.0:
                c = 1.0
            elif c < -1.0:
                c = -1.0
            theta[i] = M_PI - acos(c)
            degen[i] = 0
    return theta_arr, degen_arr


def density_scores(const double[:, ::1] pts, Py_ssize_t window_length):
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t w = window_length
    cdef Py_ssize_t h = w // 2
    out_arr = np.full(n, INFINITY, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, a, b, m
    cdef double dx, dy, dz, acc, pairs
    if n < w:
        return out_arr
    m = n - w + 1
    pairs = w * (w - 1) / 2.0
    for i in range(m):
        acc = 0.0
        for a in range(w - 1):
            for b in range(a + 1, w):
                dx = pts[i + b, 0] - pts[i + a, 0]
                dy = pts[i + b, 1] - pts[i + a, 1]
                dz = pts[i + b, 2] - pts[i + a, 2]
                acc += sqrt(dx * dx + dy * dy + dz * dz)
        out[i + h] = acc / pairs
    return out_arr
