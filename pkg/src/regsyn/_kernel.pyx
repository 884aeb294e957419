# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 block for linear retarded delay systems.

Same contract as :func:`regsyn._kernel_py.rk4_block`; see there for the
layout of the history buffers.
"""

import numpy as np

from libc.math cimport fabs, isfinite


cdef inline void _rhs(const double[:, ::1] A0, const double[:, :, ::1] Ad,
                      const Py_ssize_t[::1] d, const double[::1] b,
                      const double[:, ::1] delayed_src, Py_ssize_t base,
                      double[::1] z, double u, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = A0.shape[0], q = Ad.shape[0]
    cdef Py_ssize_t r, s, j
    cdef Py_ssize_t row
    cdef double acc
    for r in range(n):
        acc = b[r] * u
        for s in range(n):
            acc += A0[r, s] * z[s]
        out[r] = acc
    for j in range(q):
        row = base - d[j]
        for r in range(n):
            acc = 0.0
            for s in range(n):
                acc += Ad[j, r, s] * delayed_src[row, s]
            out[r] += acc


def rk4_block(const double[:, ::1] A0, const double[:, :, ::1] Ad, const Py_ssize_t[::1] d,
              const double[::1] b, double[:, ::1] Z, double[:, ::1] Zmid,
              Py_ssize_t k0, Py_ssize_t nsteps, double dt,
              const double[::1] us, const double[::1] um, const double[::1] ue,
              double blowup):
    """Advance ``nsteps`` RK4 steps from grid index ``k0``; return steps completed."""
    cdef Py_ssize_t n = A0.shape[0]
    cdef double[::1] z = np.empty(n)
    cdef double[::1] tmp = np.empty(n)
    cdef double[::1] k1 = np.empty(n)
    cdef double[::1] k2 = np.empty(n)
    cdef double[::1] k3 = np.empty(n)
    cdef double[::1] k4 = np.empty(n)
    cdef double[::1] fe = np.empty(n)
    cdef Py_ssize_t step, i
    cdef Py_ssize_t r
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0, h8 = dt / 8.0
    cdef Py_ssize_t done = nsteps
    with nogil:
        for step in range(nsteps):
            i = k0 + step
            for r in range(n):
                z[r] = Z[i, r]
            _rhs(A0, Ad, d, b, Z, i, z, us[step], k1)
            for r in range(n):
                tmp[r] = z[r] + h2 * k1[r]
            _rhs(A0, Ad, d, b, Zmid, i, tmp, um[step], k2)
            for r in range(n):
                tmp[r] = z[r] + h2 * k2[r]
            _rhs(A0, Ad, d, b, Zmid, i, tmp, um[step], k3)
            for r in range(n):
                tmp[r] = z[r] + dt * k3[r]
            _rhs(A0, Ad, d, b, Z, i + 1, tmp, ue[step], k4)
            for r in range(n):
                Z[i + 1, r] = z[r] + h6 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r])
                tmp[r] = Z[i + 1, r]
            _rhs(A0, Ad, d, b, Z, i + 1, tmp, ue[step], fe)
            for r in range(n):
                # cubic Hermite midpoint from the one-sided slopes of this interval
                Zmid[i, r] = 0.5 * (z[r] + tmp[r]) + h8 * (k1[r] - fe[r])
            for r in range(n):
                if not isfinite(tmp[r]) or fabs(tmp[r]) > blowup:
                    done = step + 1
            if done < nsteps:
                break
    return done
