"""Correlation fractal-dimension estimation via pair counting.

The series is embedded as (time, value) points with both axes min-max
normalized, the pair-count curve log(PC(r)) vs log(1/r) is built over a
log-spaced radius grid, and a parametric sigmoid is fitted with tapered
(Tukey) error weights over the y-range.  The absolute central slope of the
sigmoid is the dimension estimate; the unweighted, center-only and
Tukey-weighted fits give the FDA / FDC / FDE readings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import expit

from ._nls import gauss_newton
from .errors import (BadParam, DegenerateData, NoConvergence, TooFewPoints,
                     TooShort)
from .ingest import TimeSeries, series_values


@dataclass(frozen=True)
class PcCurve:
    """Pair-count curve: points (log(1/r), log PC(r)) over the radius grid."""

    log_inv_r: np.ndarray
    log_pc: np.ndarray
    r_values: np.ndarray

    def __len__(self):
        return int(self.log_inv_r.size)


@dataclass(frozen=True)
class SigmoidFit:
    """y = y0 + C_y / (1 + exp(-C_x (x - x0))), weighted least squares."""

    x0: float
    y0: float
    c_x: float
    c_y: float
    weighted_sse: float
    tukey_q: float

    @property
    def central_slope(self) -> float:
        return central_slope(self.c_x, self.c_y)

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        return self.y0 + self.c_y * expit(self.c_x * (x - self.x0))


@dataclass(frozen=True)
class FdEstimate:
    fda: float  # unweighted-fit slope
    fdc: float  # central-point-only (q=1) slope
    fde: float  # Tukey-weighted slope

    def as_dict(self, q: float):
        return {"fda": self.fda, "fdc": self.fdc, "fde": self.fde, "q": q}


def central_slope(c_x: float, c_y: float) -> float:
    """Sigmoid slope at the central curvature point, C_x * C_y / 4."""
    return c_x * c_y / 4.0


def _quantize(distances: np.ndarray, digits: int = 12) -> np.ndarray:
    """Round distances to ``digits`` significant figures.

    Pair distances that are equal by construction (e.g. equally spaced
    points) otherwise differ at the ulp level and smear the bottom of the
    pair-count curve into a spurious near-vertical step.
    """
    out = distances.copy()
    positive = out > 0
    mags = np.floor(np.log10(out[positive]))
    scale = 10.0 ** (digits - 1 - mags)
    out[positive] = np.round(out[positive] * scale) / scale
    return out


def embed_series(series) -> np.ndarray:
    """(time, value) points with each axis min-max scaled to [0, 1]."""
    y = series_values(series)
    t = np.arange(y.size, dtype=float)
    points = np.column_stack([t, y])
    spans = points.max(axis=0) - points.min(axis=0)
    out = np.zeros_like(points)
    for axis in range(2):
        if spans[axis] > 0:
            out[:, axis] = (points[:, axis] - points[:, axis].min()) / spans[axis]
    return out


def pair_count_curve(data, n_radii: int = 64) -> PcCurve:
    """Count sample pairs within log-spaced radii.

    ``data`` is a TimeSeries / 1-D sequence (embedded as normalized
    (time, value) points) or an (n, 2) point cloud used as-is.  Radii run
    from the smallest nonzero pairwise distance to the largest.
    """
    if n_radii < 2:
        raise BadParam("n_radii must be >= 2")
    array = np.asarray(data if not isinstance(data, TimeSeries) else data.values)
    if array.ndim == 2 and array.shape[1] == 2:
        points = array.astype(float)
    else:
        y = series_values(data)
        if y.size < 10:
            raise TooShort("pair counting needs at least 10 samples")
        points = embed_series(data)
    if points.shape[0] < 10:
        raise TooShort("pair counting needs at least 10 points")

    distances = np.sort(_quantize(pdist(points)))
    nonzero = distances[distances > 0]
    if nonzero.size == 0:
        raise DegenerateData("all embedded points coincide")
    radii = np.logspace(math.log10(nonzero[0]), math.log10(distances[-1]), n_radii)
    radii[0], radii[-1] = nonzero[0], distances[-1]  # guard against rounding
    counts = np.searchsorted(distances, radii, side="right")
    keep = counts > 0
    radii, counts = radii[keep], counts[keep]
    return PcCurve(log_inv_r=np.log(1.0 / radii), log_pc=np.log(counts),
                   r_values=radii)


def tukey_window(length: int, q: float) -> np.ndarray:
    """Tapered-cosine window, rectangular at q=0 through Hann at q=1."""
    if length < 1:
        raise BadParam("window length must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise BadParam("q must lie in [0, 1]")
    if length == 1:
        return np.ones(1)
    if q == 0.0:
        return np.ones(length)
    x = np.arange(length) / (length - 1)
    weights = np.ones(length)
    rising = x < q / 2
    weights[rising] = 0.5 * (1.0 + np.cos(math.pi * (2.0 * x[rising] / q - 1.0)))
    half = length // 2
    weights[length - half:] = weights[:half][::-1]  # symmetric by construction
    return weights


def _y_range_weights(y: np.ndarray, q: float) -> np.ndarray:
    """Tukey weights over the y-range: each point takes the coefficient of
    the range slot its value falls in."""
    n = y.size
    window = tukey_window(n, q)
    span = float(y.max() - y.min())
    if span == 0.0:
        return np.ones(n)
    slots = np.minimum((n * (y - y.min()) / span).astype(int), n - 1)
    return window[slots]


def fit_sigmoid(curve: PcCurve, q: float = 0.8) -> SigmoidFit:
    """Weighted least-squares sigmoid fit of the pair-count curve.

    Candidate centers at the x-quantiles and log-spaced steepness values
    (both signs) are solved linearly for (y0, C_y), the best initializer is
    polished with damped Gauss-Newton, and C_y is normalized positive.
    """
    x = np.asarray(curve.log_inv_r, dtype=float)
    y = np.asarray(curve.log_pc, dtype=float)
    if x.size < 8:
        raise TooFewPoints("sigmoid fit needs at least 8 curve points")
    order = np.argsort(x)
    x, y = x[order], y[order]
    weights = _y_range_weights(y, q)
    sqrt_w = np.sqrt(weights)

    x_lo, x_hi = float(x[0]), float(x[-1])
    span = x_hi - x_lo
    if span <= 0:
        raise DegenerateData("curve has zero x extent")
    x0_candidates = np.quantile(x, np.linspace(0.1, 0.9, 13))
    base = 4.0 / span
    magnitudes = base * np.logspace(-1.0, 2.5, 22)
    best = None
    for x0 in x0_candidates:
        for magnitude in magnitudes:
            for c_x in (magnitude, -magnitude):
                s = expit(c_x * (x - x0))
                basis = np.column_stack([np.ones_like(x), s]) * sqrt_w[:, None]
                target = y * sqrt_w
                beta, *_ = np.linalg.lstsq(basis, target, rcond=None)
                resid = target - basis @ beta
                sse = float(resid @ resid)
                if best is None or sse < best[0]:
                    best = (sse, np.array([x0, beta[0], c_x, beta[1]]))
    grid_sse, grid_theta = best

    # polish with the center reparametrized to stay on the observed curve,
    # x0 = x_lo + span * expit(v); otherwise a shoulder-less curve lets the
    # "central" point drift off the data and the central slope loses meaning
    frac = np.clip((grid_theta[0] - x_lo) / span, 1e-3, 1 - 1e-3)
    theta0 = np.array([math.log(frac / (1 - frac)), grid_theta[1],
                       grid_theta[2], grid_theta[3]])

    def unpack(theta):
        v, y0, c_x, c_y = theta
        return x_lo + span * expit(v), y0, c_x, c_y

    def residual(theta):
        x0, y0, c_x, c_y = unpack(theta)
        return sqrt_w * (y0 + c_y * expit(c_x * (x - x0)) - y)

    def jacobian(theta):
        v, _, c_x, c_y = theta
        x0 = x_lo + span * expit(v)
        s = expit(c_x * (x - x0))
        bell = s * (1.0 - s)
        dx0_dv = span * expit(v) * (1.0 - expit(v))
        return np.column_stack([
            -c_y * c_x * bell * dx0_dv, np.ones_like(x),
            c_y * (x - x0) * bell, s,
        ]) * sqrt_w[:, None]

    theta, sse, _, _ = gauss_newton(residual, jacobian, theta0,
                                    rel_tol=1e-10, max_iter=300)
    if not np.all(np.isfinite(theta)):
        raise NoConvergence("sigmoid fit")
    x0, y0, c_x, c_y = unpack(theta)
    if sse > grid_sse:
        x0, y0, c_x, c_y = grid_theta
        sse = grid_sse
    if c_y < 0:  # same curve re-parametrized with positive vertical width
        x0, y0, c_x, c_y = x0, y0 + c_y, -c_x, -c_y
    return SigmoidFit(x0=float(x0), y0=float(y0), c_x=float(c_x),
                      c_y=float(c_y), weighted_sse=float(sse), tukey_q=float(q))


def fd_estimates(curve: PcCurve, q: float = 0.8) -> FdEstimate:
    """FDA (unweighted), FDC (center-only) and FDE (q-weighted) readings.

    Each is the absolute central slope of the corresponding sigmoid fit; the
    curve falls in log(1/r), so the signed slope is negative and the
    dimension is its magnitude.
    """
    fda = abs(fit_sigmoid(curve, q=0.0).central_slope)
    fdc = abs(fit_sigmoid(curve, q=1.0).central_slope)
    fde = abs(fit_sigmoid(curve, q=q).central_slope)
    return FdEstimate(fda=float(fda), fdc=float(fdc), fde=float(fde))
