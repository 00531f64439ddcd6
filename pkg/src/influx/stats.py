"""Descriptive statistics, histogramming and parametric MLE fits.

Covers the distribution-level view of the daily counts: range/moment summary,
equal-width histogram, Poisson and generalized-extreme-value maximum
likelihood fits, and weekday averages of the weekly matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import gamma as gamma_fn

from .errors import NoConvergence, TooShort
from .ingest import WeeklyMatrix, series_values

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class MomentSummary:
    min: float
    max: float
    median: float
    mean: float
    stdev: float
    skewness: float
    excess_kurtosis: float

    def as_dict(self):
        return {"min": self.min, "max": self.max, "median": self.median,
                "mean": self.mean, "stdev": self.stdev,
                "skewness": self.skewness,
                "excess_kurtosis": self.excess_kurtosis}


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    def as_dict(self):
        return {"edges": [float(e) for e in self.edges],
                "counts": [int(c) for c in self.counts]}


@dataclass(frozen=True)
class PoissonFit:
    rate: float            # reported as "lambda" in JSON fragments
    ci_halfwidth: float

    def as_dict(self):
        return {"lambda": self.rate, "ci_halfwidth": self.ci_halfwidth}


@dataclass(frozen=True)
class GevFit:
    shape: float
    scale: float
    location: float
    shape_ci: float
    scale_ci: float
    location_ci: float
    log_likelihood: float

    def as_dict(self):
        return {"shape": self.shape, "scale": self.scale,
                "location": self.location,
                "ci_halfwidth": {"shape": self.shape_ci,
                                 "scale": self.scale_ci,
                                 "location": self.location_ci}}


def moments(series) -> MomentSummary:
    """Range statistics and the first four moments of the counts.

    Standard deviation uses the unbiased (n-1) denominator; skewness and
    kurtosis are population moment ratios, with kurtosis reported as excess
    so a Normal sample tends to zero for both.
    """
    y = series_values(series)
    n = y.size
    if n < 2:
        raise TooShort("moments need at least 2 samples")
    mean = float(np.mean(y))
    centered = y - mean
    m2 = float(np.mean(centered ** 2))
    if m2 == 0.0:
        skew = 0.0
        kurt = 0.0
    else:
        skew = float(np.mean(centered ** 3) / m2 ** 1.5)
        kurt = float(np.mean(centered ** 4) / m2 ** 2 - 3.0)
    return MomentSummary(min=float(np.min(y)), max=float(np.max(y)),
                         median=float(np.median(y)), mean=mean,
                         stdev=float(np.std(y, ddof=1)),
                         skewness=skew, excess_kurtosis=kurt)


def histogram(series, bins: int = 6) -> Histogram:
    """Equal-width histogram over [min, max]; final right edge inclusive.

    A constant series has no range; the bins then span one count unit from
    the value so all mass lands in the first bin.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    y = series_values(series)
    if y.size < 1:
        raise TooShort("histogram needs at least 1 sample")
    lo, hi = float(np.min(y)), float(np.max(y))
    if hi == lo:
        hi = lo + 1.0
    counts, edges = np.histogram(y, bins=bins, range=(lo, hi))
    return Histogram(edges=edges, counts=counts)


def fit_poisson(series) -> PoissonFit:
    """Poisson MLE: the rate is exactly the sample mean."""
    y = series_values(series)
    if y.size < 1:
        raise TooShort("poisson fit needs at least 1 sample")
    rate = float(np.mean(y))
    halfwidth = float(_Z95 * math.sqrt(rate / y.size)) if rate > 0 else 0.0
    return PoissonFit(rate=rate, ci_halfwidth=halfwidth)


def gev_log_likelihood(values, shape, scale, location) -> float:
    """GEV log-likelihood; -inf outside the support or for scale <= 0."""
    y = series_values(values)
    if scale <= 0:
        return -np.inf
    z = (y - location) / scale
    if abs(shape) < 1e-12:
        return float(-y.size * math.log(scale) - np.sum(z) - np.sum(np.exp(-z)))
    t = 1.0 + shape * z
    if np.any(t <= 0):
        return -np.inf
    log_t = np.log(t)
    return float(-y.size * math.log(scale)
                 - (1.0 + 1.0 / shape) * np.sum(log_t)
                 - np.sum(np.exp(-log_t / shape)))


def _gev_pwm_start(y: np.ndarray):
    """Probability-weighted-moments initializer (Hosking's approximation)."""
    x = np.sort(y)
    n = x.size
    j = np.arange(1, n + 1)
    b0 = np.mean(x)
    b1 = np.sum((j - 1) / (n - 1) * x) / n
    b2 = np.sum((j - 1) * (j - 2) / ((n - 1) * (n - 2)) * x) / n
    l1, l2, l3 = b0, 2 * b1 - b0, 6 * b2 - 6 * b1 + b0
    t3 = l3 / l2 if l2 != 0 else 0.0
    c = 2.0 / (3.0 + t3) - math.log(2) / math.log(3)
    k = 7.8590 * c + 2.9554 * c ** 2
    if abs(k) < 1e-9:
        k = 1e-9
    shape = -k
    scale = l2 * k / ((1 - 2.0 ** (-k)) * gamma_fn(1 + k))
    location = l1 - scale * (1 - gamma_fn(1 + k)) / k
    if not (np.isfinite(scale) and scale > 0):
        scale = float(np.std(y, ddof=1)) * math.sqrt(6) / math.pi
        location = float(np.mean(y)) - 0.5772 * scale
        shape = 0.0
    return shape, float(scale), float(location)


def gev_multistart_initializers(values):
    """PWM initializer plus fixed perturbations (the fit's starting points)."""
    y = series_values(values)
    shape, scale, location = _gev_pwm_start(y)
    return [
        (shape, scale, location),
        (shape + 0.2, scale, location),
        (shape - 0.2, scale, location),
        (0.0, scale, location),
        (shape, 1.5 * scale, location),
    ]


def fit_gev(series, tol: float = 1e-8, max_iter: int = 500) -> GevFit:
    """GEV maximum-likelihood fit with multi-start Nelder-Mead.

    Starts are the PWM initializer and fixed perturbations of it; points
    outside the support are penalized with -inf likelihood.  95% half-widths
    come from the observed-information (numerical Hessian) diagonal.
    """
    y = series_values(series)
    if y.size < 20:
        raise TooShort("gev fit needs at least 20 samples")

    def nll(theta):
        ll = gev_log_likelihood(y, *theta)
        return -ll if np.isfinite(ll) else 1e12

    best = None
    for start in gev_multistart_initializers(y):
        result = minimize(nll, np.array(start), method="Nelder-Mead",
                          options={"fatol": tol, "xatol": 1e-8,
                                   "maxiter": max_iter, "maxfev": 4 * max_iter})
        if best is None or result.fun < best.fun:
            best = result
    if best is None or best.fun >= 1e12:
        raise NoConvergence("gev fit", max_iter)

    theta = best.x
    halfwidths = _observed_information_halfwidths(nll, theta)
    return GevFit(shape=float(theta[0]), scale=float(theta[1]),
                  location=float(theta[2]),
                  shape_ci=halfwidths[0], scale_ci=halfwidths[1],
                  location_ci=halfwidths[2],
                  log_likelihood=float(-best.fun))


def _observed_information_halfwidths(nll, theta):
    """1.96 * sqrt(diag(H^-1)) from a central-difference Hessian of the NLL."""
    p = theta.size
    h = np.maximum(1e-5 * np.abs(theta), 1e-6)
    hess = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            ei = np.zeros(p); ei[i] = h[i]
            ej = np.zeros(p); ej[j] = h[j]
            fpp = nll(theta + ei + ej)
            fpm = nll(theta + ei - ej)
            fmp = nll(theta - ei + ej)
            fmm = nll(theta - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4 * h[i] * h[j])
    try:
        cov = np.linalg.pinv(hess)
        diag = np.clip(np.diag(cov), 0.0, None)
        return [float(_Z95 * math.sqrt(v)) for v in diag]
    except np.linalg.LinAlgError:
        return [float("nan")] * p


def weekday_averages(matrix: WeeklyMatrix) -> np.ndarray:
    """Mean count per calendar weekday, index 0 = Monday .. 6 = Sunday."""
    col_means = matrix.cells.mean(axis=0)
    out = np.empty(7)
    for col in range(7):
        out[matrix.weekday_of_column(col) - 1] = col_means[col]
    return out
