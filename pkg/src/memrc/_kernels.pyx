# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: batch reservoir evolution and per-sample SGD."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs, sinh, expm1

cnp.import_array()


def evolve(const cnp.uint8_t[:, :, ::1] programs,
           const double[::1] x_init,
           const double[::1] tau_eff,
           const double[::1] lambda_f,
           const double[::1] eta_f,
           const double[::1] floor,
           double lambda_rate, double eta, double t_pulse,
           double x_min, double x_max, double v_write,
           c2c=None):
    """Final states (N, D) after driving every device through its program.

    ``c2c`` is either None or a float64 array shaped like ``programs`` with
    one multiplier per update.
    """
    cdef Py_ssize_t N = programs.shape[0], D = programs.shape[1], T = programs.shape[2]
    cdef Py_ssize_t i, d, t
    cdef double x, dx, m, lo
    cdef double[::1] drive = np.empty(D)
    cdef double[::1] leak = np.empty(D)
    cdef const double[:, :, ::1] mult
    cdef bint noisy = c2c is not None
    out = np.empty((N, D))
    cdef double[:, ::1] xs = out

    if noisy:
        mult = c2c
    for d in range(D):
        drive[d] = t_pulse * (lambda_rate * lambda_f[d]) * sinh((eta * eta_f[d]) * v_write)
        leak[d] = -expm1(-t_pulse / tau_eff[d])

    for i in range(N):
        for d in range(D):
            x = x_init[d]
            lo = floor[d]
            for t in range(T):
                m = mult[i, d, t] if noisy else 1.0
                if programs[i, d, t]:
                    dx = (1.0 - exp(3.0 * (x - x_max))) * drive[d]
                    x = x + m * dx
                else:
                    dx = (x - x_min) * leak[d]
                    x = x - m * dx
                if x < lo:
                    x = lo
                elif x > x_max:
                    x = x_max
            xs[i, d] = x
    return out


def sgd_epoch(double[:, ::1] W,
              const double[:, ::1] X,
              const cnp.int64_t[::1] y,
              const cnp.int64_t[::1] order,
              double lr,
              bint with_loss=True):
    """One pass of per-sample SGD on summed per-class sigmoid cross-entropy.

    Updates ``W`` in place and returns the summed loss seen before each update.
    """
    cdef Py_ssize_t F = W.shape[0], C = W.shape[1], S = order.shape[0]
    cdef Py_ssize_t s, s2, i, j, c, nnz
    cdef double f, z, p, t, total = 0.0, step
    cdef double[::1] zs = np.empty(C)
    cdef double[::1] g = np.empty(C)
    cdef cnp.int64_t[::1] idx = np.empty(F, dtype=np.int64)

    for s in range(S):
        i = order[s]
        nnz = 0
        for j in range(F):
            if X[i, j] != 0.0:
                idx[nnz] = j
                nnz += 1
        for c in range(C):
            zs[c] = 0.0
        for s2 in range(nnz):
            j = idx[s2]
            f = X[i, j]
            for c in range(C):
                zs[c] += f * W[j, c]
        for c in range(C):
            z = zs[c]
            t = 1.0 if y[i] == c else 0.0
            if z >= 0:
                p = 1.0 / (1.0 + exp(-z))
            else:
                p = exp(z) / (1.0 + exp(z))
            g[c] = p - t
            if with_loss:
                total += log1p(exp(-fabs(z))) + (z if z > 0 else 0.0) - t * z
        for s2 in range(nnz):
            j = idx[s2]
            step = lr * X[i, j]
            for c in range(C):
                W[j, c] -= step * g[c]
    return total
