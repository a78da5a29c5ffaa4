# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SMO dual solver.

Mirrors _smo_py.smo_solve operation for operation: same pair selection
(first index on ties), same update arithmetic, same stopping rule. Built
with contraction disabled so both backends round identically; keep the two
in sync when editing.
"""

import numpy as np

from libc.math cimport INFINITY

cdef double TAU = 1e-12


def smo_solve(double[:, ::1] k, double[::1] y, double c, double tol,
              long max_iter):
    """Maximal-violating-pair SMO on the soft-margin dual.

    Same contract as the numpy fallback: returns (alpha, f, iterations,
    converged) for kernel ``k``, labels ``y`` in {-1.0, +1.0} and box
    bound ``c``.
    """
    cdef Py_ssize_t n = y.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    f_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] f = f_arr
    cdef Py_ssize_t i, j, a
    cdef long iters = 0
    cdef bint converged = False
    cdef double v, best_up, best_low, gap, eta, diff, total
    cdef double lo, hi, lo_i, hi_i, step, a_i, a_j, d_i, d_j, t_i, t_j
    while iters < max_iter:
        best_up = -INFINITY
        best_low = INFINITY
        i = -1
        j = -1
        for a in range(n):
            v = y[a] - f[a]
            if (y[a] > 0.0 and alpha[a] < c) or (y[a] < 0.0 and alpha[a] > 0.0):
                if v > best_up:
                    best_up = v
                    i = a
            if (y[a] < 0.0 and alpha[a] < c) or (y[a] > 0.0 and alpha[a] > 0.0):
                if v < best_low:
                    best_low = v
                    j = a
        if i < 0 or j < 0:
            converged = True
            break
        gap = best_up - best_low
        if gap <= tol:
            converged = True
            break
        eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if eta <= 0.0:
            eta = TAU
        # Feasible range for alpha[j] plus the alpha[i] value at each end,
        # taken from the conserved pair quantity so a clipped step lands
        # both variables exactly on the constraint corner (no residue that
        # would fake bound membership later).
        if y[i] != y[j]:
            diff = alpha[j] - alpha[i]
            if diff > 0.0:
                lo = diff
                lo_i = 0.0
            else:
                lo = 0.0
                lo_i = -diff
            if diff < 0.0:
                hi = c + diff
                hi_i = c
            else:
                hi = c
                hi_i = c - diff
        else:
            total = alpha[i] + alpha[j]
            if total > c:
                lo = total - c
                lo_i = c
                hi = c
                hi_i = total - c
            else:
                lo = 0.0
                lo_i = total
                hi = total
                hi_i = 0.0
        step = alpha[j] - y[j] * (gap / eta)
        if step <= lo:
            a_j = lo
            a_i = lo_i
        elif step >= hi:
            a_j = hi
            a_i = hi_i
        elif y[i] != y[j]:
            a_j = step
            a_i = step - diff
        else:
            a_j = step
            a_i = total - step
        d_j = a_j - alpha[j]
        if d_j == 0.0:
            break  # pair cannot move: numerical stall, not converged
        d_i = a_i - alpha[i]
        alpha[i] = a_i
        alpha[j] = a_j
        t_i = d_i * y[i]
        t_j = d_j * y[j]
        for a in range(n):
            f[a] = f[a] + (t_i * k[i, a] + t_j * k[j, a])
        iters += 1
    return alpha_arr, f_arr, int(iters), bool(converged)
