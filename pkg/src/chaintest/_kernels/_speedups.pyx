# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; must stay expression-identical to ``fallback.py``.

Built with ``-ffp-contract=off`` so the arithmetic matches the pure-Python
reference bit for bit (see tests/test_backends.py).
"""

from libc.math cimport isfinite

import numpy as np

NAME = "compiled"


def finite_chain_path(cum_rows, init_state, uniforms):
    cum = np.ascontiguousarray(cum_rows, dtype=np.float64)
    u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef const double[:, ::1] cum_v = cum
    cdef const double[::1] u_v = u
    cdef Py_ssize_t n = u_v.shape[0]
    cdef Py_ssize_t n_states = cum_v.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] out_v = out
    cdef Py_ssize_t t, j
    cdef Py_ssize_t state = init_state
    cdef double uu
    for t in range(n):
        uu = u_v[t]
        j = 0
        while j < n_states - 1 and uu >= cum_v[state, j]:
            j += 1
        state = j
        out_v[t] = state
    return out


cdef void _rhs(double* y, double* d, double k1, double k2, double k3,
               double k4, Py_ssize_t n_delay) noexcept nogil:
    cdef double phos = k1 * y[1] * y[0]
    cdef double dim = k2 * y[2] * y[2]
    cdef Py_ssize_t last_x = 3 + n_delay
    cdef Py_ssize_t j
    d[0] = 0.0
    d[1] = -phos + 2.0 * k4 * y[last_x]
    d[2] = phos - dim
    d[3] = -k3 * y[3] + 0.5 * dim
    d[4] = k3 * y[3] - k4 * y[4]
    for j in range(5, last_x + 1):
        d[j] = k4 * y[j - 1] - k4 * y[j]
    d[last_x + 1] = k3 * y[3] - k4 * y[last_x]


cdef int _rk4_step(double* y, double* ynew, double* scratch, double dt,
                   double k1, double k2, double k3, double k4,
                   Py_ssize_t m, Py_ssize_t n_delay) noexcept nogil:
    # scratch holds 5 vectors of length m: a, b, c, dv, ytmp
    cdef double* a = scratch
    cdef double* b = scratch + m
    cdef double* c = scratch + 2 * m
    cdef double* dv = scratch + 3 * m
    cdef double* ytmp = scratch + 4 * m
    cdef double half_dt = 0.5 * dt
    cdef double sixth_dt = dt / 6.0
    cdef Py_ssize_t i
    _rhs(y, a, k1, k2, k3, k4, n_delay)
    for i in range(m):
        ytmp[i] = y[i] + half_dt * a[i]
    _rhs(ytmp, b, k1, k2, k3, k4, n_delay)
    for i in range(m):
        ytmp[i] = y[i] + half_dt * b[i]
    _rhs(ytmp, c, k1, k2, k3, k4, n_delay)
    for i in range(m):
        ytmp[i] = y[i] + dt * c[i]
    _rhs(ytmp, dv, k1, k2, k3, k4, n_delay)
    for i in range(m):
        ynew[i] = y[i] + sixth_dt * (a[i] + 2.0 * b[i] + 2.0 * c[i] + dv[i])
    for i in range(m):
        if not isfinite(ynew[i]):
            return 0
    return 1


def jakstat_path(params, y0, double dt, Py_ssize_t n_steps):
    cdef double k1 = params[0]
    cdef double k2 = params[1]
    cdef double k3 = params[2]
    cdef double k4 = params[3]
    y_arr = np.ascontiguousarray(y0, dtype=np.float64)
    cdef Py_ssize_t m = y_arr.shape[0]
    cdef Py_ssize_t n_delay = m - 5
    out = np.empty((n_steps + 1, m), dtype=np.float64)
    cdef double[:, ::1] out_v = out
    scratch_arr = np.empty(5 * m, dtype=np.float64)
    cdef double[::1] scratch = scratch_arr
    cdef double[::1] y_v = y_arr
    cdef Py_ssize_t i, step
    cdef Py_ssize_t fail = -1
    for i in range(m):
        out_v[0, i] = y_v[i]
    with nogil:
        for step in range(1, n_steps + 1):
            if not _rk4_step(&out_v[step - 1, 0], &out_v[step, 0],
                             &scratch[0], dt, k1, k2, k3, k4, m, n_delay):
                fail = step
                break
    if fail >= 0:
        out[fail:] = out[fail - 1]
        return out, int(fail)
    return out, -1


def jakstat_probe(params, y0, double dt, Py_ssize_t n_steps, obs_times):
    cdef double k1 = params[0]
    cdef double k2 = params[1]
    cdef double k3 = params[2]
    cdef double k4 = params[3]
    y_arr = np.array(y0, dtype=np.float64, copy=True)
    t_arr = np.ascontiguousarray(obs_times, dtype=np.float64)
    cdef Py_ssize_t m = y_arr.shape[0]
    cdef Py_ssize_t n_delay = m - 5
    cdef Py_ssize_t nuc = 3 + n_delay + 1
    cdef Py_ssize_t n_obs = t_arr.shape[0]
    y1_out = np.zeros(n_obs, dtype=np.float64)
    y2_out = np.zeros(n_obs, dtype=np.float64)
    scratch_arr = np.empty(7 * m, dtype=np.float64)
    cdef double[::1] y1_v = y1_out
    cdef double[::1] y2_v = y2_out
    cdef const double[::1] t_v = t_arr
    cdef double[::1] y_v = y_arr
    cdef double[::1] scratch = scratch_arr
    cdef double* y = &y_v[0]
    cdef double* ynew = &scratch[5 * m]
    cdef Py_ssize_t i, step
    cdef Py_ssize_t mi = 0
    cdef Py_ssize_t fail = -1
    cdef double y1_prev = y[2] + 2.0 * y[3]
    cdef double y2_prev = y[1] + y[2] + 2.0 * y[3]
    cdef double max_nuclear = y[nuc]
    cdef double t_cur, t_prev, y1_cur, y2_cur, w
    with nogil:
        for step in range(1, n_steps + 1):
            if not _rk4_step(y, ynew, &scratch[0], dt, k1, k2, k3, k4,
                             m, n_delay):
                fail = step
                break
            for i in range(m):
                y[i] = ynew[i]
            t_cur = step * dt
            t_prev = (step - 1) * dt
            y1_cur = y[2] + 2.0 * y[3]
            y2_cur = y[1] + y[2] + 2.0 * y[3]
            while mi < n_obs and t_v[mi] <= t_cur:
                w = (t_v[mi] - t_prev) / dt
                if w > 1.0:
                    w = 1.0
                y1_v[mi] = y1_prev + w * (y1_cur - y1_prev)
                y2_v[mi] = y2_prev + w * (y2_cur - y2_prev)
                mi += 1
            if y[nuc] > max_nuclear:
                max_nuclear = y[nuc]
            y1_prev = y1_cur
            y2_prev = y2_cur
    if fail >= 0:
        return y1_out, y2_out, max_nuclear, int(fail)
    while mi < n_obs:
        y1_v[mi] = y1_prev
        y2_v[mi] = y2_prev
        mi += 1
    return y1_out, y2_out, max_nuclear, -1
