"""Identification and short-term forecasting of daily event-count series.

The pipeline runs descriptive statistics, regression, spectral analysis,
ARMAX system identification, matrix factorization (SVD / PPCA / ICA / K-SVD)
and correlation fractal-dimension estimation over a dated daily-count
series, exposed both as a library and the ``influx`` command-line tool.
"""

from .arma import (ArmaModel, AutocorrVector, autocorrelation, fit_armax,
                   forecast, one_step_predictions, phase_pairs, simulate)
from .factor import (FactorModel, KsvdConfig, energy_ranking, fast_ica,
                     fit_ppca, ksvd, reconstruct_rank, svd_decompose)
from .fractal import (FdEstimate, PcCurve, SigmoidFit, central_slope,
                      fd_estimates, fit_sigmoid, pair_count_curve,
                      tukey_window)
from .ingest import (TimeSeries, WeeklyMatrix, load_series, save_series,
                     to_weekly_matrix, weekday_channel)
from .regress import (CosineLinearModel, LinearArModel, dominant_period,
                      fit_cosine_linear, fit_linear_ar)
from .spectral import (BandLimit, Spectrum, band_limit_frequency, dft,
                       log_power_halfspectrum, moving_average,
                       rescale_frequency)
from .stats import (GevFit, Histogram, MomentSummary, PoissonFit, fit_gev,
                    fit_poisson, histogram, moments, weekday_averages)

__version__ = "0.1.0"

__all__ = [
    "ArmaModel", "AutocorrVector", "BandLimit", "CosineLinearModel",
    "FactorModel", "FdEstimate", "GevFit", "Histogram", "KsvdConfig",
    "LinearArModel", "MomentSummary", "PcCurve", "PoissonFit", "SigmoidFit",
    "Spectrum", "TimeSeries", "WeeklyMatrix", "autocorrelation",
    "band_limit_frequency", "central_slope", "dft", "dominant_period",
    "energy_ranking", "fast_ica", "fd_estimates", "fit_armax",
    "fit_cosine_linear", "fit_gev", "fit_linear_ar", "fit_poisson",
    "fit_ppca", "fit_sigmoid", "forecast", "histogram", "ksvd", "load_series",
    "log_power_halfspectrum", "moments", "moving_average",
    "one_step_predictions", "pair_count_curve", "phase_pairs",
    "reconstruct_rank", "rescale_frequency", "save_series", "simulate",
    "svd_decompose", "to_weekly_matrix", "tukey_window", "weekday_averages",
    "weekday_channel",
]
