"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  C1-C3 need a reconstructed daily-arrivals series (set
INFLUX_REFERENCE_CSV or place it at data/arrivals_total.csv) and skip
otherwise.
"""

import json
import time

import numpy as np
import pytest

from influx import cli
from influx.arma import ArmaModel, fit_armax, simulate
from influx.factor import (KsvdConfig, fast_ica, fit_ppca, ksvd,
                           reconstruct_rank, svd_decompose)
from influx.fractal import central_slope, fd_estimates, pair_count_curve, tukey_window
from influx.ingest import load_series, to_weekly_matrix, weekday_channel
from influx.regress import dominant_period, fit_cosine_linear, fit_linear_ar
from influx.spectral import dft, rescale_frequency
from influx.stats import fit_gev, fit_poisson, moments, weekday_averages

from conftest import reference_csv_path


def check(criterion, passed, detail=""):
    print(f"{criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, f"{criterion} failed: {detail}"


# --------------------------------------------------- A: formula-level


def test_a1_frequency_rescaling():
    rescale_frequency(17.5, 1, 54, 108)  # warm-up
    start = time.perf_counter()
    f_l = rescale_frequency(17.5, 1, 54, 108)
    elapsed = time.perf_counter() - start
    t_l = 1.0 / f_l
    ok = abs(f_l - 0.1620) <= 0.0005 and abs(t_l - 6.17) <= 0.02 and elapsed < 1e-3
    check("A1", ok, f"f_L={f_l:.6f} T_L={t_l:.4f} in {elapsed * 1e6:.1f}us")


def test_a2_period_extraction():
    period = dominant_period(0.968)
    check("A2", abs(period - 6.49) <= 0.01, f"period={period:.4f} days")


def test_a3_central_slope_exact():
    slope = central_slope(2.0, 4.0)
    check("A3", slope == 2.0, f"slope={slope!r}")


def test_a4_tukey_endpoints():
    ok = True
    for n in (2, 5, 17, 64, 101):
        rect = tukey_window(n, 0.0)
        j = np.arange(n)
        hann = 0.5 * (1 - np.cos(2 * np.pi * j / (n - 1)))
        ok &= bool(np.array_equal(rect, np.ones(n)))
        ok &= bool(np.max(np.abs(tukey_window(n, 1.0) - hann)) <= 1e-12)
    check("A4", ok, "q=0 rectangular, q=1 Hann within 1e-12 (N=2,5,17,64,101)")


# --------------------------------------------------- B: oracle suites


def test_b1_dft_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    parseval_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 65))
        y = rng.uniform(0, 10_000, n)
        ours = dft(y).components
        k = np.arange(n)
        direct = np.exp(-2j * np.pi * np.outer(k, k) / n) @ y  # O(N^2) defining sum
        worst = max(worst, float(np.max(np.abs(ours - direct))
                                 / np.max(np.abs(direct))))
        energy_gap = abs(np.sum(y ** 2) - np.sum(np.abs(ours) ** 2) / n)
        parseval_ok &= energy_gap <= 1e-9 * np.sum(y ** 2)
    elapsed = time.perf_counter() - start
    check("B1", worst <= 1e-9 and parseval_ok and elapsed < 1.0,
          f"max rel dev {worst:.2e}, Parseval ok, {elapsed:.2f}s")


def test_b2_armax_recovery():
    start = time.perf_counter()
    truth = ArmaModel(a=np.array([-0.5, 0.2]), b=np.array([10.0]),
                      input_delay=1, c=np.array([0.3]))
    good = 0
    for seed in range(20):
        u = np.random.default_rng(1000 + seed).integers(1, 8, 5000).astype(float)
        y = simulate(truth, u, noise_stdev=1.0, seed=seed)
        fit = fit_armax(y, u, 2, 1, 1, input_delay=1)
        close = (np.all(np.abs(fit.a - truth.a) <= 0.05)
                 and abs(fit.b[0] - 10.0) <= 0.05
                 and abs(fit.c[0] - 0.3) <= 0.05)
        good += close
    elapsed = time.perf_counter() - start
    check("B2", good >= 18 and elapsed < 30,
          f"{good}/20 fits within +-0.05, {elapsed:.1f}s")


def test_b3_cosine_recovery():
    start = time.perf_counter()
    t = np.arange(1, 151, dtype=float)
    truth = (875.2, 0.968, -2.851, -47.065, 6669.5)
    clean = truth[0] * np.cos(truth[1] * t + truth[2]) + truth[3] * t + truth[4]
    model = fit_cosine_linear(clean)
    fitted = (model.a, model.b, model.c, model.d, model.c0)
    exact = all(abs(f - v) <= 1e-6 * abs(v) for f, v in zip(fitted, truth))
    noisy = clean + np.random.default_rng(1).normal(0, 0.05 * truth[0], t.size)
    noisy_model = fit_cosine_linear(noisy)
    period_ok = abs(dominant_period(noisy_model) - 2 * np.pi / truth[1]) \
        <= 0.02 * (2 * np.pi / truth[1])
    elapsed = time.perf_counter() - start
    check("B3", exact and period_ok and elapsed < 5.0,
          f"noiseless within 1e-6 rel, noisy period within 2%, {elapsed:.1f}s")


def test_b4_svd_nesting():
    ok = True
    worst_full = 0.0
    for seed in range(50):
        cells = np.random.default_rng(seed).integers(0, 10_000, (15, 7)).astype(float)
        model = svd_decompose(cells)
        errors = [np.linalg.norm(cells - reconstruct_rank(model, r))
                  for r in range(1, 8)]
        ok &= all(errors[i] >= errors[i + 1] - 1e-9 for i in range(6))
        worst_full = max(worst_full, errors[-1] / np.linalg.norm(cells))
    check("B4", ok and worst_full <= 1e-9,
          f"50 matrices nested, full-rank rel err {worst_full:.2e}")


def test_b5_ppca_monotone_and_subspace():
    monotone = True
    worst_angle = 0.0
    from scipy.linalg import subspace_angles
    for seed in range(10):
        rng = np.random.default_rng(seed)
        w_true = rng.normal(size=(7, 2))
        data = rng.normal(size=(400, 2)) @ w_true.T + rng.uniform(-3, 3, 7) \
            + 0.1 * rng.normal(size=(400, 7))
        for init in ("pca", "random"):
            model = fit_ppca(data, 2, init=init, max_iter=200)
            path = model.log_likelihood_path
            monotone &= bool(np.all(np.diff(path) >= -1e-6 * (1 + np.abs(path[:-1]))))
        angle = float(np.max(np.degrees(subspace_angles(w_true,
                                                        model.components.T))))
        worst_angle = max(worst_angle, angle)
    check("B5", monotone and worst_angle < 5.0,
          f"log-likelihood monotone, worst principal angle {worst_angle:.2f} deg")


def test_b6_fastica_bss():
    good = 0
    cov_ok = True
    for seed in range(20):
        rng = np.random.default_rng(seed)
        sources = rng.uniform(-np.sqrt(3), np.sqrt(3), (2, 10_000))
        mixed = rng.normal(size=(2, 2)) @ sources
        model = fast_ica(mixed, 2, nonlinearity="tanh", mode="symmetric",
                         seed=seed)
        est = model.components
        cov = est @ est.T / est.shape[1]
        cov_ok &= bool(np.allclose(cov, np.eye(2), atol=1e-6))
        corr = np.abs(np.corrcoef(np.vstack([sources, est]))[:2, 2:])
        good += bool(np.all(corr.max(axis=1) > 0.95))
    check("B6", good >= 19 and cov_ok,
          f"{good}/20 seeds separated, unmixed covariance = I within 1e-6")


def test_b7_ksvd():
    start = time.perf_counter()
    exact_ok = True
    for seed in range(5):
        cells = np.random.default_rng(seed).integers(0, 10_000, (15, 7)).astype(float)
        model = ksvd(cells.T, KsvdConfig(dict_size=11, sparsity=7), seed=seed)
        exact_ok &= model.reconstruction_error <= 1e-9
    recovered = 0
    total = 0
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        atoms = rng.normal(size=(20, 24))
        atoms /= np.linalg.norm(atoms, axis=0)
        codes = np.zeros((24, 320))
        for col in range(320):
            support = rng.choice(24, size=3, replace=False)
            codes[support, col] = rng.choice([-1, 1], 3) * rng.uniform(1, 4, 3)
        model = ksvd(atoms @ codes,
                     KsvdConfig(dict_size=24, sparsity=3, max_iterations=60,
                                target_error=1e-8), seed=seed)
        matches = np.abs(model.components @ atoms)
        recovered += int(np.sum(matches.max(axis=0) > 0.99))
        total += 24
    elapsed = time.perf_counter() - start
    check("B7", exact_ok and recovered >= 0.8 * total and elapsed < 60,
          f"weekly-size exact, {recovered}/{total} atoms recovered "
          f"({recovered / total:.0%}), {elapsed:.1f}s")


def test_b8_fractal_calibration():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    positions = np.sort(rng.uniform(0, 1, 500))
    line = np.column_stack([positions, 0.5 + 0.2 * positions])
    fde_line = fd_estimates(pair_count_curve(line), q=0.8).fde
    square = rng.uniform(0, 1, (2000, 2))
    fde_square = fd_estimates(pair_count_curve(square), q=0.8).fde
    elapsed = time.perf_counter() - start
    check("B8", 0.9 <= fde_line <= 1.1 and 1.8 <= fde_square <= 2.2
          and elapsed < 30,
          f"line FDE={fde_line:.3f}, square FDE={fde_square:.3f}, {elapsed:.1f}s")


def test_b9_determinism(synthetic_csv, tmp_path):
    first, second = tmp_path / "r1", tmp_path / "r2"
    code1 = cli.main(["all", "--input", str(synthetic_csv), "--out-dir",
                      str(first), "--seed", "42", "--threshold", "8.5"])
    code2 = cli.main(["all", "--input", str(synthetic_csv), "--out-dir",
                      str(second), "--seed", "42", "--threshold", "8.5"])
    same = (first / "report.json").read_bytes() == (second / "report.json").read_bytes()
    check("B9", code1 == 0 and code2 == 0 and same,
          "two `all` runs produced byte-identical report.json")


# ------------------------------------- C: conditional on the real series


def _reference_series():
    path = reference_csv_path()
    if path is None:
        return None
    return load_series(path)


def test_c1_table_reproduction():
    series = _reference_series()
    if series is None:
        print("C1: SKIP  (no reconstructed reference series)")
        pytest.skip("reference series not available")
    summary = moments(series)
    ok = (summary.min == 76 and summary.max == 10006
          and summary.median == 4077
          and abs(summary.mean - 4151.51) <= 0.01
          and abs(summary.stdev - 2216.79) <= 12
          and abs(summary.skewness - 0.497) <= 0.01
          and abs(summary.excess_kurtosis - 0.081) <= 0.01)
    check("C1", ok, f"moments={summary}")


def test_c2_parametric_fits():
    series = _reference_series()
    if series is None:
        print("C2: SKIP  (no reconstructed reference series)")
        pytest.skip("reference series not available")
    poisson = fit_poisson(series)
    gev = fit_gev(series)
    ok = (abs(poisson.rate - 4151.5) <= 0.1
          and abs(gev.shape + 0.15) <= 0.15
          and abs(gev.scale - 1980) <= 297
          and abs(gev.location - 3240) <= 419)
    check("C2", ok, f"lambda={poisson.rate:.1f} gev=({gev.shape:.3f}, "
                    f"{gev.scale:.0f}, {gev.location:.0f})")


def test_c3_structural_reproductions():
    series = _reference_series()
    if series is None:
        print("C3: SKIP  (no reconstructed reference series)")
        pytest.skip("reference series not available")
    cosine = fit_cosine_linear(series)
    targets = {"a": 875.2, "b": 0.968, "c": -2.851, "d": -47.065, "c0": 6669.5}
    cosine_ok = all(abs(getattr(cosine, k) - v) <= 0.02 * abs(v)
                    for k, v in targets.items())

    fit = fit_armax(series, weekday_channel(series), 9, 1, 3)
    magnitudes = np.abs(fit.a)
    others = np.concatenate([magnitudes[1:2], magnitudes[4:]])  # lags 2, 5..9
    arma_ok = (np.argmax(magnitudes) == 0
               and magnitudes[2] >= 2 * np.mean(others)
               and magnitudes[3] >= 2 * np.mean(others))

    fde = fd_estimates(pair_count_curve(series), q=0.8).fde
    fractal_ok = abs(fde - 1.84) <= 0.1
    check("C3", cosine_ok and arma_ok and fractal_ok,
          f"cosine_ok={cosine_ok} arma_ok={arma_ok} FDE={fde:.3f}")


def test_weekday_imbalance_documented_claim():
    series = _reference_series()
    if series is None:
        print("C-weekday: SKIP  (no reconstructed reference series)")
        pytest.skip("reference series not available")
    averages = weekday_averages(to_weekly_matrix(series))
    sunday_monday = (averages[6] + averages[0]) / 2
    check("C-weekday", sunday_monday > 2 * averages.min(),
          f"sun/mon mean {sunday_monday:.0f} vs min {averages.min():.0f}")


def test_reference_linear_ar_errors():
    series = _reference_series()
    if series is None:
        print("C-linear-ar: SKIP  (no reconstructed reference series)")
        pytest.skip("reference series not available")
    model = fit_linear_ar(series, window=13)
    check("C-linear-ar",
          abs(model.mape - 771.3) <= 0.05 * 771.3
          and abs(model.rmse - 1009.2) <= 0.05 * 1009.2,
          f"mape={model.mape:.1f} rmse={model.rmse:.1f}")


def test_reference_factor_energy_claims():
    series = _reference_series()
    if series is None:
        print("C-factor: SKIP  (no reconstructed reference series)")
        pytest.skip("reference series not available")
    weekly = to_weekly_matrix(series)
    ppca = fit_ppca(weekly, 7)
    top3 = float(np.sum(ppca.energy_fractions[:3]))
    ica = fast_ica(weekly, nonlinearity="tanh", mode="symmetric", seed=42)
    top2 = float(np.sum(ica.energy_fractions[:2]))
    dictionary = ksvd(weekly, KsvdConfig(dict_size=11, sparsity=7), seed=42)
    background = float(dictionary.energy_fractions[0])
    check("C-factor",
          abs(top3 - 0.78) <= 0.05 and abs(top2 - 2 / 3) <= 0.08
          and abs(background - 0.5) <= 0.07,
          f"ppca top-3 {top3:.2f}, ica top-2 {top2:.2f}, "
          f"ksvd background {background:.2f}")
