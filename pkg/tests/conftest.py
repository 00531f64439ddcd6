import datetime as dt
import os

import numpy as np
import pytest

from influx.ingest import TimeSeries

REFERENCE_ENV = "INFLUX_REFERENCE_CSV"


def reference_csv_path():
    """Reconstructed daily-arrivals series, if the user supplied one."""
    candidate = os.environ.get(REFERENCE_ENV)
    if candidate and os.path.exists(candidate):
        return candidate
    default = os.path.join(os.path.dirname(__file__), "..", "data",
                           "arrivals_total.csv")
    return default if os.path.exists(default) else None


@pytest.fixture
def make_series():
    def build(values, start="2015-10-01", label="total"):
        return TimeSeries(start_date=dt.date.fromisoformat(start),
                          values=np.asarray(values, dtype=np.int64),
                          label=label)
    return build


@pytest.fixture
def gev_sampler():
    """Inverse-CDF sampler, the independent oracle for the GEV fitter."""
    def sample(rng, n, shape, scale, location):
        u = rng.uniform(size=n)
        if abs(shape) < 1e-12:
            return location - scale * np.log(-np.log(u))
        return location + scale * ((-np.log(u)) ** (-shape) - 1.0) / shape
    return sample


@pytest.fixture
def synthetic_csv(tmp_path):
    """108-day synthetic arrivals file in the ingest CSV format."""
    rng = np.random.default_rng(99)
    t = np.arange(108)
    base = 4300 + 900 * np.cos(2 * np.pi * t / 6.4 - 2.8) - 30 * t
    values = np.clip(np.round(base + rng.normal(0, 700, 108)), 60, None)
    path = tmp_path / "arrivals.csv"
    lines = ["date,total"]
    start = dt.date(2015, 10, 1)
    for i, v in enumerate(values.astype(int)):
        lines.append(f"{(start + dt.timedelta(days=int(i))).isoformat()},{v}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
