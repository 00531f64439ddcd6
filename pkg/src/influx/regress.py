"""Linear auto-regression and cosine-linear trend/period extraction.

The auto-regression explains today's count from a fixed window of previous
days; the cosine-linear model replaces the lagged inputs with an explicit
periodic term plus a linear drift, whose angular frequency yields the
dominant period of the series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._nls import gauss_newton
from .errors import NoConvergence, SingularDesign, TooShort
from .ingest import series_values


@dataclass(frozen=True)
class LinearArModel:
    intercept: float
    coefficients: np.ndarray  # weight on lag 1..window
    window: int
    mape: float               # mean absolute prediction error
    rmse: float

    def as_dict(self):
        return {"intercept": self.intercept,
                "coefficients": [float(c) for c in self.coefficients],
                "mape": self.mape, "rmse": self.rmse}


@dataclass(frozen=True)
class CosineLinearModel:
    """y(t) ~ a*cos(b*t + c) + d*t + c0 with t starting at 1."""

    a: float
    b: float
    c: float
    d: float
    c0: float
    sse: float

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        return self.a * np.cos(self.b * t + self.c) + self.d * t + self.c0

    def as_dict(self):
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d,
                "c0": self.c0, "period_days": dominant_period(self)}


def fit_linear_ar(series, window: int = 13) -> LinearArModel:
    """OLS of y(t) on an intercept plus the ``window`` previous values.

    Errors are reported over the fitted range t = window+1..len only.
    """
    y = series_values(series)
    n = y.size
    if n <= window + 1:
        raise TooShort(f"need more than {window + 1} samples for window {window}")
    rows = n - window
    design = np.empty((rows, window + 1))
    design[:, 0] = 1.0
    for lag in range(1, window + 1):
        design[:, lag] = y[window - lag:n - lag]
    target = y[window:]
    if np.linalg.matrix_rank(design) < window + 1:
        raise SingularDesign("regressor columns are linearly dependent")
    beta, *_ = np.linalg.lstsq(design, target, rcond=None)
    residuals = target - design @ beta
    return LinearArModel(intercept=float(beta[0]),
                         coefficients=beta[1:].copy(), window=window,
                         mape=float(np.mean(np.abs(residuals))),
                         rmse=float(math.sqrt(np.mean(residuals ** 2))))


def _harmonic_lstsq(t, y, b):
    """Least squares of y on [cos(bt), sin(bt), t, 1]; returns params + sse."""
    basis = np.column_stack([np.cos(b * t), np.sin(b * t), t, np.ones_like(t)])
    beta, *_ = np.linalg.lstsq(basis, y, rcond=None)
    resid = y - basis @ beta
    return beta, float(resid @ resid)


def fit_cosine_linear(series, grid_size: int = 200,
                      period_range: tuple = (2.0, 60.0)) -> CosineLinearModel:
    """Best-fit cosine-plus-line model in the sum-of-squared-errors sense.

    Given the angular frequency the problem is linear, so a log-spaced grid
    of ``grid_size`` frequencies is solved by least squares (cos/sin/t/1
    basis) and the best grid point is polished with damped Gauss-Newton over
    all five parameters.  Equal-SSE grid ties go to the smallest frequency.
    """
    y = series_values(series)
    n = y.size
    if n < 20:
        raise TooShort("cosine-linear fit needs at least 20 samples")
    t = np.arange(1, n + 1, dtype=float)

    lo, hi = 2 * math.pi / period_range[1], 2 * math.pi / period_range[0]
    grid = np.logspace(math.log10(lo), math.log10(hi), grid_size)
    best_b, best_beta, best_sse = None, None, np.inf
    for b in grid:
        beta, sse = _harmonic_lstsq(t, y, b)
        if sse < best_sse:
            best_b, best_beta, best_sse = b, beta, sse

    p, q, d0, c00 = best_beta
    a0 = math.hypot(p, q)
    c0_phase = math.atan2(-q, p) if a0 > 0 else 0.0
    theta0 = np.array([a0, best_b, c0_phase, d0, c00])

    def residual(theta):
        a, b, c, d, c0 = theta
        return a * np.cos(b * t + c) + d * t + c0 - y

    def jacobian(theta):
        a, b, c, _, _ = theta
        phase = b * t + c
        sin_p = np.sin(phase)
        return np.column_stack([np.cos(phase), -a * t * sin_p, -a * sin_p,
                                t, np.ones_like(t)])

    theta, sse, _, converged = gauss_newton(residual, jacobian, theta0,
                                            rel_tol=1e-10, max_iter=200)
    if not np.all(np.isfinite(theta)):
        raise NoConvergence("cosine-linear fit")
    if sse > best_sse:  # keep the grid solution if polish degraded anything
        theta, sse = theta0, best_sse
    a, b, c, d, c0 = theta
    # canonical form: positive amplitude and frequency, phase in (-pi, pi]
    if a < 0:
        a, c = -a, c + math.pi
    if b < 0:
        b, c = -b, -c
    c = math.remainder(c, 2 * math.pi)
    if not converged and not np.isfinite(sse):
        raise NoConvergence("cosine-linear fit")
    return CosineLinearModel(a=float(a), b=float(b), c=float(c), d=float(d),
                             c0=float(c0), sse=float(sse))


def dominant_period(model_or_b) -> float:
    """Period in days, 2*pi over the angular frequency."""
    b = getattr(model_or_b, "b", model_or_b)
    if b <= 0:
        raise ValueError("angular frequency must be positive")
    return 2 * math.pi / float(b)
