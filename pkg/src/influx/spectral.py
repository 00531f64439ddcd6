"""DFT log-power spectrum, smoothing, and the band-limit frequency rule.

The half-spectrum log-power plot is smoothed with a centered moving average;
the first downward crossing of a log-energy threshold marks the band limit,
which is rescaled from plot coordinates to cycles/day.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadWindow, NoCrossing, TooShort
from .ingest import series_values

LOG_POWER_FLOOR = -300.0


@dataclass(frozen=True)
class Spectrum:
    """Complex frequency components Y_k for k = 0..n-1 of an n-sample series."""

    n: int
    components: np.ndarray


@dataclass(frozen=True)
class BandLimit:
    x_l: float   # plot coordinate of the crossing (fractional)
    f_l: float   # cycles/day
    t_l: float   # days

    def as_dict(self):
        return {"f_L": self.f_l, "T_L": self.t_l}


def dft(series) -> Spectrum:
    """Forward DFT, Y_k = sum_n y_n * exp(-i 2 pi k n / N)."""
    y = series_values(series)
    if y.size < 2:
        raise TooShort("dft needs at least 2 samples")
    return Spectrum(n=int(y.size), components=np.fft.fft(y))


def log_power_halfspectrum(spectrum: Spectrum) -> np.ndarray:
    """log10 |Y_k|^2 for k = 1..ceil(N/2); zero magnitudes floor at -300."""
    half = math.ceil(spectrum.n / 2)
    power = np.abs(spectrum.components[1:half + 1]) ** 2
    out = np.full(power.shape, LOG_POWER_FLOOR)
    positive = power > 0
    out[positive] = np.log10(power[positive])
    return np.maximum(out, LOG_POWER_FLOOR)


def moving_average(values, window: int) -> np.ndarray:
    """Centered moving average, window truncated at the edges.

    Output has the input's length; the window covers (window-1)//2 points to
    the left and window//2 to the right, clipped to the array bounds.
    """
    v = np.asarray(values, dtype=float)
    if window < 1 or window > v.size:
        raise BadWindow(f"window {window} outside 1..{v.size}")
    left, right = (window - 1) // 2, window // 2
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(v.size)
    lo = np.maximum(idx - left, 0)
    hi = np.minimum(idx + right + 1, v.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def rescale_frequency(x_l: float, x_min: float, x_max: float, n: int) -> float:
    """Map a half-spectrum plot coordinate to cycles/day.

    The plot axis runs x_min..x_max over frequencies 1/N..1/2; the crossing
    coordinate is mapped linearly between those endpoints.
    """
    f_min, f_max = 1.0 / n, 0.5
    return (x_l - x_min) / (x_max - x_min) * (f_max - f_min) + f_min


def band_limit_frequency(values, threshold: float, n: int | None = None) -> BandLimit:
    """Band limit from the smoothed log-power curve.

    ``values`` is the (smoothed) half-spectrum indexed x = 1..x_max.  The
    first downward crossing below ``threshold`` is located with linear
    interpolation between the bracketing points, then rescaled to cycles/day.
    ``n`` is the original series length (defaults to twice the half-spectrum
    length, exact for even N).
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise TooShort("band limit needs at least 2 spectrum points")
    x_max = v.size
    if n is None:
        n = 2 * x_max
    if v[0] < threshold:
        x_l = 1.0
    else:
        x_l = None
        for j in range(1, x_max):
            if v[j] < threshold <= v[j - 1]:
                x_l = j + (v[j - 1] - threshold) / (v[j - 1] - v[j])
                break
        if x_l is None:
            raise NoCrossing(f"smoothed curve never drops below {threshold}")
    f_l = rescale_frequency(x_l, 1.0, float(x_max), n)
    return BandLimit(x_l=float(x_l), f_l=float(f_l), t_l=float(1.0 / f_l))
