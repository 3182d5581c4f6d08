"""Pure-Python reference kernels.

These are the slow, dependency-free implementations of the hot loops.  The
compiled module ``_speedups`` mirrors them expression for expression (and is
built with FP contraction disabled), so both backends produce bitwise
identical output for identical input; ``tests/test_backends.py`` enforces
this.  Any change here must be replicated in ``_speedups.pyx``.
"""

import math

import numpy as np

NAME = "python"


def finite_chain_path(cum_rows, init_state, uniforms):
    """Walk a finite-state chain along pre-drawn uniforms.

    ``cum_rows[s]`` is the cumulative transition distribution of state ``s``
    (last entry 1.0).  Step ``t`` moves to the first index ``j`` with
    ``uniforms[t] < cum_rows[state][j]``.  Returns the int64 state path,
    one entry per uniform.
    """
    cum = np.ascontiguousarray(cum_rows, dtype=np.float64)
    n = len(uniforms)
    n_states = cum.shape[0]
    out = np.empty(n, dtype=np.int64)
    state = int(init_state)
    rows = cum.tolist()
    u_list = uniforms.tolist() if isinstance(uniforms, np.ndarray) else list(uniforms)
    for t in range(n):
        u = u_list[t]
        row = rows[state]
        j = 0
        while j < n_states - 1 and u >= row[j]:
            j += 1
        state = j
        out[t] = state
    return out


def _rhs(y, k1, k2, k3, k4, n_delay):
    # layout: [Epo, STAT, STATp, STATpd, X_1..X_K, STATn]
    phos = k1 * y[1] * y[0]
    dim = k2 * y[2] * y[2]
    last_x = 3 + n_delay
    d = [0.0] * len(y)
    d[1] = -phos + 2.0 * k4 * y[last_x]
    d[2] = phos - dim
    d[3] = -k3 * y[3] + 0.5 * dim
    d[4] = k3 * y[3] - k4 * y[4]
    for j in range(5, last_x + 1):
        d[j] = k4 * y[j - 1] - k4 * y[j]
    d[last_x + 1] = k3 * y[3] - k4 * y[last_x]
    return d


def _rk4_step(y, dt, k1, k2, k3, k4, n_delay):
    m = len(y)
    half_dt = 0.5 * dt
    sixth_dt = dt / 6.0
    a = _rhs(y, k1, k2, k3, k4, n_delay)
    yb = [y[i] + half_dt * a[i] for i in range(m)]
    b = _rhs(yb, k1, k2, k3, k4, n_delay)
    yc = [y[i] + half_dt * b[i] for i in range(m)]
    c = _rhs(yc, k1, k2, k3, k4, n_delay)
    yd = [y[i] + dt * c[i] for i in range(m)]
    dv = _rhs(yd, k1, k2, k3, k4, n_delay)
    return [
        y[i] + sixth_dt * (a[i] + 2.0 * b[i] + 2.0 * c[i] + dv[i])
        for i in range(m)
    ]


def _all_finite(y):
    for v in y:
        if not math.isfinite(v):
            return False
    return True


def jakstat_path(params, y0, dt, n_steps):
    """Fixed-step RK4 path of the delayed STAT translocation model.

    Returns ``(states, fail_step)`` where ``states`` has shape
    ``(n_steps + 1, len(y0))`` and ``fail_step`` is -1 on success or the
    first step index at which a non-finite component appeared (rows from
    there on are left as the last finite state).
    """
    k1, k2, k3, k4 = (float(p) for p in params)
    y = [float(v) for v in y0]
    n_delay = len(y) - 5
    out = np.empty((n_steps + 1, len(y)), dtype=np.float64)
    out[0] = y
    for step in range(1, n_steps + 1):
        y = _rk4_step(y, dt, k1, k2, k3, k4, n_delay)
        if not _all_finite(y):
            out[step:] = out[step - 1]
            return out, step
        out[step] = y
    return out, -1


def jakstat_probe(params, y0, dt, n_steps, obs_times):
    """Integrate without storing the path; sample observables on the fly.

    Observables: y1 = STATp + 2*STATpd, y2 = STAT + STATp + 2*STATpd,
    linearly interpolated at ``obs_times`` (strictly increasing, > 0).
    Also tracks the grid maximum of the nuclear amount (last component).

    Returns ``(y1_obs, y2_obs, max_nuclear, fail_step)`` with
    ``fail_step`` as in :func:`jakstat_path`; on failure the outputs are
    valid only up to the failure time.
    """
    k1, k2, k3, k4 = (float(p) for p in params)
    y = [float(v) for v in y0]
    n_delay = len(y) - 5
    nuc = 3 + n_delay + 1
    n_obs = len(obs_times)
    t_list = obs_times.tolist() if isinstance(obs_times, np.ndarray) else list(obs_times)
    y1_out = np.zeros(n_obs, dtype=np.float64)
    y2_out = np.zeros(n_obs, dtype=np.float64)

    y1_prev = y[2] + 2.0 * y[3]
    y2_prev = y[1] + y[2] + 2.0 * y[3]
    max_nuclear = y[nuc]
    m = 0
    for step in range(1, n_steps + 1):
        y = _rk4_step(y, dt, k1, k2, k3, k4, n_delay)
        if not _all_finite(y):
            return y1_out, y2_out, max_nuclear, step
        t_cur = step * dt
        t_prev = (step - 1) * dt
        y1_cur = y[2] + 2.0 * y[3]
        y2_cur = y[1] + y[2] + 2.0 * y[3]
        while m < n_obs and t_list[m] <= t_cur:
            w = (t_list[m] - t_prev) / dt
            if w > 1.0:
                w = 1.0
            y1_out[m] = y1_prev + w * (y1_cur - y1_prev)
            y2_out[m] = y2_prev + w * (y2_cur - y2_prev)
            m += 1
        if y[nuc] > max_nuclear:
            max_nuclear = y[nuc]
        y1_prev = y1_cur
        y2_prev = y2_cur
    # targets past the final grid time (end-time rounding): clamp to the
    # final state
    while m < n_obs:
        y1_out[m] = y1_prev
        y2_out[m] = y2_prev
        m += 1
    return y1_out, y2_out, max_nuclear, -1
