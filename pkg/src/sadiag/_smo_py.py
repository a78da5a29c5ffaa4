"""Numpy fallback for the SMO dual solver.

Mirrors the compiled backend operation for operation: same pair selection
(first index on ties), same update arithmetic, same stopping rule. Keep the
two in sync when editing so results stay bit-identical across backends.
"""

from __future__ import annotations

import numpy as np

# Curvature floor for non-positive-definite pair directions.
_TAU = 1e-12


def smo_solve(k: np.ndarray, y: np.ndarray, c: float, tol: float,
              max_iter: int):
    """Maximal-violating-pair SMO on the soft-margin dual.

    Maximizes sum(a) - 0.5 (a*y)' K (a*y) subject to 0 <= a <= c and
    sum(a*y) = 0, for a precomputed symmetric kernel ``k`` and labels
    ``y`` in {-1.0, +1.0}.

    Returns (alpha, f, iterations, converged) where f[a] is
    sum_b alpha[b] * y[b] * k[a, b] at the returned alpha. ``converged``
    is False when the iteration cap was hit or a pair update stalled.
    """
    n = y.shape[0]
    alpha = np.zeros(n, dtype=np.float64)
    f = np.zeros(n, dtype=np.float64)
    pos = y > 0.0
    neg = ~pos
    iters = 0
    converged = False
    while iters < max_iter:
        viol = y - f
        below_c = alpha < c
        above_0 = alpha > 0.0
        up = (pos & below_c) | (neg & above_0)
        low = (neg & below_c) | (pos & above_0)
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, viol, -np.inf)))
        j = int(np.argmin(np.where(low, viol, np.inf)))
        gap = viol[i] - viol[j]
        if gap <= tol:
            converged = True
            break
        eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
        if eta <= 0.0:
            eta = _TAU
        # Feasible range for alpha[j] plus the alpha[i] value at each end,
        # taken from the conserved pair quantity so a clipped step lands
        # both variables exactly on the constraint corner (no residue that
        # would fake bound membership later).
        if y[i] != y[j]:
            diff = alpha[j] - alpha[i]
            if diff > 0.0:
                lo, lo_i = diff, 0.0
            else:
                lo, lo_i = 0.0, -diff
            if diff < 0.0:
                hi, hi_i = c + diff, c
            else:
                hi, hi_i = c, c - diff
        else:
            total = alpha[i] + alpha[j]
            if total > c:
                lo, lo_i = total - c, c
                hi, hi_i = c, total - c
            else:
                lo, lo_i = 0.0, total
                hi, hi_i = total, 0.0
        step = alpha[j] - y[j] * (gap / eta)
        if step <= lo:
            a_j, a_i = lo, lo_i
        elif step >= hi:
            a_j, a_i = hi, hi_i
        elif y[i] != y[j]:
            a_j, a_i = step, step - diff
        else:
            a_j, a_i = step, total - step
        d_j = a_j - alpha[j]
        if d_j == 0.0:
            break  # pair cannot move: numerical stall, not converged
        d_i = a_i - alpha[i]
        alpha[i] = a_i
        alpha[j] = a_j
        f += (d_i * y[i]) * k[i] + (d_j * y[j]) * k[j]
        iters += 1
    return alpha, f, iters, converged
