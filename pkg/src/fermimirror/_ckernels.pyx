# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels; see _pykernels for the reference semantics."""

import numpy as np
from libc.math cimport sqrt, fabs, isfinite

cdef double SQRT2 = sqrt(2.0)
cdef double DIVERGENCE = 1e12


cdef inline void _rhs(double x, double p, double cr, double ci,
                      double wm, double s2g, double delta, double kappa, double eta,
                      double* k) noexcept nogil:
    cdef double det = delta + s2g * x
    k[0] = wm * p
    k[1] = -wm * x - 2.0 * s2g * (cr * cr + ci * ci)
    k[2] = det * ci + eta - kappa * cr
    k[3] = -det * cr - kappa * ci


def rk4_meanfield(y0, double omega_m, double g, double delta, double kappa, double eta,
                  double dt, Py_ssize_t nsteps, Py_ssize_t stride, double[:, ::1] out):
    cdef double x = y0[0], p = y0[1], cr = y0[2], ci = y0[3]
    cdef double s2g = SQRT2 * g
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef Py_ssize_t i, r
    cdef Py_ssize_t done = nsteps
    with nogil:
        for i in range(nsteps):
            if i % stride == 0:
                r = i // stride
                out[r, 0] = x
                out[r, 1] = p
                out[r, 2] = cr
                out[r, 3] = ci
            _rhs(x, p, cr, ci, omega_m, s2g, delta, kappa, eta, k1)
            _rhs(x + h2 * k1[0], p + h2 * k1[1], cr + h2 * k1[2], ci + h2 * k1[3],
                 omega_m, s2g, delta, kappa, eta, k2)
            _rhs(x + h2 * k2[0], p + h2 * k2[1], cr + h2 * k2[2], ci + h2 * k2[3],
                 omega_m, s2g, delta, kappa, eta, k3)
            _rhs(x + dt * k3[0], p + dt * k3[1], cr + dt * k3[2], ci + dt * k3[3],
                 omega_m, s2g, delta, kappa, eta, k4)
            x += h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            p += h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            cr += h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            ci += h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
            if not (fabs(x) < DIVERGENCE and fabs(p) < DIVERGENCE
                    and fabs(cr) < DIVERGENCE and fabs(ci) < DIVERGENCE):
                done = i + 1
                break
    return np.array([x, p, cr, ci]), done


def em_linear(J, B, double[:, ::1] X, double dt, double[:, :, ::1] normals,
              Py_ssize_t stride, double[:, :, ::1] out):
    cdef double[:, ::1] A = np.ascontiguousarray(np.eye(4) + dt * np.asarray(J, dtype=float))
    cdef double[:, ::1] Bs = np.ascontiguousarray(sqrt(dt) * np.asarray(B, dtype=float))
    cdef Py_ssize_t E = X.shape[0], n = normals.shape[1]
    cdef Py_ssize_t e, i, a, r
    cdef double x0, x1, x2, x3, y0, y1, y2, y3, z0, z1
    cdef bint ok = True
    with nogil:
        for e in range(E):
            x0 = X[e, 0]
            x1 = X[e, 1]
            x2 = X[e, 2]
            x3 = X[e, 3]
            for i in range(n):
                if i % stride == 0:
                    r = i // stride
                    out[e, r, 0] = x0
                    out[e, r, 1] = x1
                    out[e, r, 2] = x2
                    out[e, r, 3] = x3
                z0 = normals[e, i, 0]
                z1 = normals[e, i, 1]
                y0 = (A[0, 0] * x0 + A[0, 1] * x1 + A[0, 2] * x2 + A[0, 3] * x3
                      + Bs[0, 0] * z0 + Bs[0, 1] * z1)
                y1 = (A[1, 0] * x0 + A[1, 1] * x1 + A[1, 2] * x2 + A[1, 3] * x3
                      + Bs[1, 0] * z0 + Bs[1, 1] * z1)
                y2 = (A[2, 0] * x0 + A[2, 1] * x1 + A[2, 2] * x2 + A[2, 3] * x3
                      + Bs[2, 0] * z0 + Bs[2, 1] * z1)
                y3 = (A[3, 0] * x0 + A[3, 1] * x1 + A[3, 2] * x2 + A[3, 3] * x3
                      + Bs[3, 0] * z0 + Bs[3, 1] * z1)
                x0 = y0
                x1 = y1
                x2 = y2
                x3 = y3
            X[e, 0] = x0
            X[e, 1] = x1
            X[e, 2] = x2
            X[e, 3] = x3
            if not (isfinite(x0) and isfinite(x1) and isfinite(x2) and isfinite(x3)):
                ok = False
    return ok
