"""Damped Gauss-Newton refinement shared by the nonlinear fitters."""

from __future__ import annotations

import numpy as np


def gauss_newton(residual, jacobian, theta0, rel_tol, max_iter, min_step=2.0 ** -30):
    """Minimize ||residual(theta)||^2 from theta0 with step-halving damping.

    ``residual`` maps theta -> residual vector, ``jacobian`` maps theta -> the
    corresponding Jacobian matrix.  Steps that fail to reduce the SSE (or go
    non-finite) are halved; iteration stops when the relative SSE improvement
    drops below ``rel_tol``, no damped step improves, or ``max_iter`` is hit.

    Returns ``(theta, sse, iterations, converged)``.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    res = residual(theta)
    sse = float(res @ res)
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        jac = jacobian(theta)
        try:
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        alpha = 1.0
        improved = False
        while alpha >= min_step:
            cand = theta + alpha * step
            with np.errstate(all="ignore"):  # probing steps may overflow
                cand_res = residual(cand)
                cand_sse = float(cand_res @ cand_res)
            if np.isfinite(cand_sse) and cand_sse < sse:
                improved = True
                break
            alpha *= 0.5
        if not improved:
            converged = True  # stationary up to damping resolution
            break
        rel_drop = (sse - cand_sse) / max(cand_sse, np.finfo(float).tiny)
        theta, res, sse = cand, cand_res, cand_sse
        if rel_drop < rel_tol:
            converged = True
            break
    return theta, sse, iteration, converged
