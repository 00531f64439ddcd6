"""ARMAX system identification, diagnostics, forecasting and simulation.

The model is A(z) y(t) = B(z) u(t) + C(z) e(t) with monic A and C.  The
stored AR coefficients follow the printed-polynomial convention (leading +1,
subsequent signed coefficients), so the one-step predictor reads

    y_hat(t) = -sum_i a_i y(t-i) + sum_j b_j u(t-delay-j) + sum_l c_l e(t-l)

Estimation is a two-stage prediction-error method: a Hannan-Rissanen
initialization (long AR for residual estimates, then OLS on lagged outputs,
delayed inputs and lagged residuals) refined by damped Gauss-Newton on the
one-step prediction error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from ._nls import gauss_newton
from .errors import (BadLag, InsufficientHistory, NoConvergence, TooShort,
                     UnstablePolynomial, ZeroVariance)
from .ingest import TimeSeries, series_values, weekday_channel


@dataclass(frozen=True)
class AutocorrVector:
    """Normalized sample autocorrelation r(0)..r(maxlag); r(0) is always 1."""

    values: np.ndarray

    @property
    def maxlag(self) -> int:
        return int(self.values.size - 1)


@dataclass(frozen=True)
class ArmaModel:
    a: np.ndarray              # a_1..a_m (A(z) = 1 + a_1 z^-1 + ...)
    b: np.ndarray              # input coefficients starting at z^-input_delay
    input_delay: int
    c: np.ndarray              # c_1..c_q (C(z) = 1 + c_1 z^-1 + ...)
    noise_variance: float = 0.0
    fit_rmse: float = float("nan")
    stable: bool = True
    converged: bool = field(default=True, compare=False)

    @property
    def orders(self):
        return (int(self.a.size), int(self.b.size), int(self.c.size))

    def a_polynomial(self) -> np.ndarray:
        return np.concatenate([[1.0], np.asarray(self.a, dtype=float)])

    def c_polynomial(self) -> np.ndarray:
        return np.concatenate([[1.0], np.asarray(self.c, dtype=float)])

    def b_polynomial(self) -> np.ndarray:
        """B(z) padded with the leading delay zeros."""
        return np.concatenate([np.zeros(self.input_delay),
                               np.asarray(self.b, dtype=float)])

    def as_dict(self):
        return {"orders": list(self.orders),
                "A": [float(v) for v in self.a_polynomial()],
                "B": {"delay": int(self.input_delay),
                      "coeff": (float(self.b[0]) if self.b.size == 1
                                else [float(v) for v in self.b])},
                "C": [float(v) for v in self.c_polynomial()],
                "rmse": self.fit_rmse,
                "stable": self.stable}


def autocorrelation(series, maxlag: int = 10) -> AutocorrVector:
    """Biased normalized sample autocorrelation up to ``maxlag``."""
    y = series_values(series)
    n = y.size
    if n <= maxlag + 1:
        raise TooShort(f"need more than {maxlag + 1} samples for maxlag {maxlag}")
    centered = y - np.mean(y)
    denom = float(centered @ centered)
    if denom == 0.0:
        raise ZeroVariance("series has zero variance")
    values = np.empty(maxlag + 1)
    for k in range(maxlag + 1):
        values[k] = float(centered[:n - k] @ centered[k:]) / denom
    return AutocorrVector(values=values)


def phase_pairs(series, lag: int, scale: float = 100.0):
    """All (y(t)/scale, y(t+lag)/scale) pairs, in series order."""
    y = series_values(series)
    if lag < 1 or lag >= y.size:
        raise BadLag(f"lag {lag} outside 1..{y.size - 1}")
    return [(float(y[t] / scale), float(y[t + lag] / scale))
            for t in range(y.size - lag)]


def _unit_delay(k: int) -> np.ndarray:
    kernel = np.zeros(k + 1)
    kernel[k] = 1.0
    return kernel


def _is_stable(a: np.ndarray) -> bool:
    """True when all characteristic roots of A lie strictly inside the unit circle."""
    if a.size == 0:
        return True
    roots = np.roots(np.concatenate([[1.0], a]))
    return bool(np.all(np.abs(roots) < 1.0 - 1e-12))


def _prediction_errors(a, b, delay, c, y, u):
    """Full-length one-step errors e = (A/C) y - (B/C) u, zero initial state."""
    a_poly = np.concatenate([[1.0], a])
    c_poly = np.concatenate([[1.0], c])
    with np.errstate(all="ignore"):  # unstable C candidates overflow benignly
        e = lfilter(a_poly, c_poly, y)
        if b.size:
            b_poly = np.concatenate([np.zeros(delay), b])
            e = e - lfilter(b_poly, c_poly, u)
    return e


def _hannan_rissanen(y, u, m, k, q, delay):
    """OLS initialization via long-AR residual estimates."""
    n = y.size
    long_order = max(1, min(4 * max(m, 1), n // 4))
    resid = np.zeros(n)
    if q > 0:
        rows = n - long_order
        design = np.empty((rows, long_order))
        for lag in range(1, long_order + 1):
            design[:, lag - 1] = y[long_order - lag:n - lag]
        beta, *_ = np.linalg.lstsq(design, y[long_order:], rcond=None)
        resid[long_order:] = y[long_order:] - design @ beta

    start = max(m, delay + k, q, long_order if q > 0 else 0)
    rows = n - start
    if rows <= m + k + q:
        raise TooShort("series too short for the requested orders")
    cols = []
    for lag in range(1, m + 1):
        cols.append(-y[start - lag:n - lag])
    for j in range(k):
        cols.append(u[start - delay - j:n - delay - j])
    for lag in range(1, q + 1):
        cols.append(resid[start - lag:n - lag])
    design = np.column_stack(cols) if cols else np.empty((rows, 0))
    if design.shape[1]:
        theta, *_ = np.linalg.lstsq(design, y[start:], rcond=None)
    else:
        theta = np.zeros(0)
    return theta


def _fit_fixed_delay(y, u, m, k, q, delay, tol, max_iter):
    n = y.size
    drop = max(m, delay + k, q)

    theta0 = _hannan_rissanen(y, u, m, k, q, delay)
    if not np.all(np.isfinite(theta0)):
        theta0 = np.zeros(m + k + q)

    def split(theta):
        return theta[:m], theta[m:m + k], theta[m + k:]

    def residual(theta):
        a, b, c = split(theta)
        e = _prediction_errors(a, b, delay, c, y, u)
        return e[drop:]

    def jacobian(theta):
        a, b, c = split(theta)
        c_poly = np.concatenate([[1.0], c])
        e_full = _prediction_errors(a, b, delay, c, y, u)
        cols = []
        for i in range(1, m + 1):
            cols.append(lfilter(_unit_delay(i), c_poly, y)[drop:])
        for j in range(k):
            cols.append(-lfilter(_unit_delay(delay + j), c_poly, u)[drop:])
        for l in range(1, q + 1):
            cols.append(-lfilter(_unit_delay(l), c_poly, e_full)[drop:])
        return np.column_stack(cols)

    theta, sse, iters, converged = gauss_newton(residual, jacobian, theta0,
                                                rel_tol=tol, max_iter=max_iter)
    res0 = residual(theta0)
    if float(res0 @ res0) < sse:  # never do worse than the initializer
        theta, sse = theta0, float(res0 @ res0)
    a, b, c = split(theta)
    n_eff = n - drop
    return (a.copy(), b.copy(), c.copy(), sse, n_eff, converged)


def fit_armax(series, inputs, m: int, k: int, q: int,
              input_delay: int | None = None, tol: float = 1e-8,
              max_iter: int = 100) -> ArmaModel:
    """Prediction-error fit of an ARMAX(m, k, q) model.

    ``inputs`` is the exogenous channel aligned with the series (use
    :func:`influx.ingest.weekday_channel` for the weekday encoding).  When
    ``input_delay`` is None and k >= 1, delays 0..7 are searched and the
    lowest-SSE fit wins (ties to the smallest delay).  An unstable AR
    polynomial is flagged on the returned model, not raised.
    """
    y = series_values(series)
    u = series_values(inputs) if inputs is not None else np.zeros_like(y)
    if y.size != u.size:
        raise ValueError("series and inputs must have the same length")
    if m < 1:
        raise ValueError("AR order m must be >= 1")
    if y.size <= 3 * (m + k + q):
        raise TooShort(f"need more than {3 * (m + k + q)} samples "
                       f"for orders ({m},{k},{q})")

    if k == 0:
        delays = [0]
    elif input_delay is not None:
        delays = [int(input_delay)]
    else:
        delays = list(range(8))

    best = None
    for delay in delays:
        fit = _fit_fixed_delay(y, u, m, k, q, delay, tol, max_iter)
        if best is None or fit[3] < best[1][3]:
            best = (delay, fit)
    delay, (a, b, c, sse, n_eff, converged) = best
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(c)):
        raise NoConvergence("armax fit", max_iter)
    return ArmaModel(a=a, b=b, input_delay=delay, c=c,
                     noise_variance=float(sse / n_eff),
                     fit_rmse=float(math.sqrt(sse / n_eff)),
                     stable=_is_stable(a), converged=converged)


def one_step_predictions(model: ArmaModel, series, inputs=None) -> np.ndarray:
    """In-sample one-step predictions y(t) - e(t) over the whole series."""
    y = series_values(series)
    u = _resolve_inputs(model, series, inputs, y.size)
    e = _prediction_errors(np.asarray(model.a, float), np.asarray(model.b, float),
                           model.input_delay, np.asarray(model.c, float), y, u)
    return y - e


def _resolve_inputs(model, series, inputs, n):
    if inputs is not None:
        u = series_values(inputs)
        if u.size != n:
            raise ValueError("inputs length must match the series")
        return u
    if model.b.size and np.any(model.b != 0):
        if isinstance(series, TimeSeries):
            return weekday_channel(series).astype(float)
        raise ValueError("model has an input kernel; pass history inputs")
    return np.zeros(n)


def forecast(model: ArmaModel, history, future_inputs=None, horizon: int = 1,
             history_inputs=None) -> np.ndarray:
    """Iterated one-step forecasts beyond the end of ``history``.

    Predictions are fed back as pseudo-observations; error terms beyond the
    known in-sample residuals are set to their zero expectation.  For a
    weekday-input model fitted on a TimeSeries the historical inputs are
    derived from the calendar when not given explicitly.
    """
    y = series_values(history)
    m, k, q = model.orders
    if y.size < m:
        raise InsufficientHistory(f"need at least {m} history samples")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    u_hist = _resolve_inputs(model, history, history_inputs, y.size)
    if k and np.any(model.b != 0):
        u_future = series_values(future_inputs) if future_inputs is not None else None
        if u_future is None or u_future.size < horizon:
            raise InsufficientHistory("future inputs shorter than the horizon")
    else:
        u_future = np.zeros(horizon)

    a = np.asarray(model.a, dtype=float)
    b = np.asarray(model.b, dtype=float)
    c = np.asarray(model.c, dtype=float)
    n = y.size
    errors = _prediction_errors(a, b, model.input_delay, c, y, u_hist)
    y_ext = np.concatenate([y, np.zeros(horizon)])
    u_ext = np.concatenate([u_hist, u_future[:horizon]])
    e_ext = np.concatenate([errors, np.zeros(horizon)])

    for step in range(horizon):
        t = n + step
        value = 0.0
        for i in range(1, m + 1):
            if t - i >= 0:
                value -= a[i - 1] * y_ext[t - i]
        for j in range(k):
            idx = t - model.input_delay - j
            if 0 <= idx < u_ext.size:
                value += b[j] * u_ext[idx]
        for l in range(1, q + 1):
            if t - l >= 0:
                value += c[l - 1] * e_ext[t - l]
        y_ext[t] = value
    return y_ext[n:]


def simulate(model: ArmaModel, inputs, noise_stdev: float = 1.0,
             seed: int = 0) -> np.ndarray:
    """Drive the model forward with Gaussian innovations (deterministic per seed).

    Returns the simulated float sample path; lengths follow ``inputs``.
    """
    u = series_values(inputs)
    if not _is_stable(np.asarray(model.a, dtype=float)):
        raise UnstablePolynomial("AR polynomial is not stable")
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, noise_stdev, u.size) if noise_stdev > 0 else np.zeros(u.size)
    a_poly = model.a_polynomial()
    y = lfilter(model.c_polynomial(), a_poly, e)
    if model.b.size:
        y = y + lfilter(model.b_polynomial(), a_poly, u)
    return y
