from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import norm

from src.bootstrap import BootSpec
from src.inference import (
    BOOT_FULL,
    NORMAL,
    ConfidenceBand,
    InsufficientReplicates,
    WeightKindMismatch,
    ci,
    sd_naive,
    sd_naive_lattice,
    variance_factor,
)
from src.models import GridMismatch
from src.periodogram import quantile_pg_from_series
from src.simulation import get_model
from src.rng import substream
from src.smoothing import KernelWeight, SpecDistrWeight, kernel_weights, smooth_pg, smoothed_pg_from_series


def test_uniform_variance_factor():
    n, bw = 1024, 0.3
    nu = variance_factor(KernelWeight("uniform", bw), n)
    j = n // 4
    assert nu[j] == pytest.approx((2 * np.pi / n) / (2 * np.pi * bw), abs=5 / n)


def test_variance_factor_matches_kernel_weights():
    n = 64
    omega = 2 * np.pi * 10 / n
    weights = kernel_weights("epanechnikov", 0.4, n, omega)
    nu = variance_factor(KernelWeight("epanechnikov", 0.4), n)
    assert nu[10] == pytest.approx((2 * np.pi / n) ** 2 * np.sum(weights ** 2))


def test_sd_naive_formula(gaussian_series):
    spg = smoothed_pg_from_series(gaussian_series(128), [0.25, 0.75], weight=KernelWeight(bw=0.5))
    omega = 2 * np.pi * 20 / 128
    sd_re, sd_im = sd_naive(spg, omega, 0, 1)
    G = spg.values[20, :, :, 0]
    nu = variance_factor(spg.weight, 128)[20]
    product = G[0, 0].real * G[1, 1].real
    expected_re = np.sqrt(nu / 2 * max(0.0, product + G[0, 1].real ** 2 - G[0, 1].imag ** 2))
    expected_im = np.sqrt(nu / 2 * max(0.0, product - G[0, 1].real ** 2 + G[0, 1].imag ** 2))
    assert sd_re == pytest.approx(expected_re)
    assert sd_im == pytest.approx(expected_im)


def test_sd_naive_with_distinct_level_sets(gaussian_series):
    Y = gaussian_series(64)
    weight = KernelWeight(bw=0.5)
    cross = smooth_pg(quantile_pg_from_series(Y, [0.25], [0.5, 0.75]), weight)
    full = smooth_pg(quantile_pg_from_series(Y, [0.25, 0.5, 0.75]), weight)
    sd_re, sd_im = sd_naive_lattice(cross)
    full_re, full_im = sd_naive_lattice(full)
    np.testing.assert_allclose(sd_re[:, 0, :], full_re[:, 0, 1:], atol=1e-14)
    np.testing.assert_allclose(sd_im[:, 0, :], full_im[:, 0, 1:], atol=1e-14)


def test_sd_naive_without_diagonal_or_source(gaussian_series):
    cross = smooth_pg(quantile_pg_from_series(gaussian_series(32), [0.25], [0.5]), KernelWeight(bw=0.5))
    detached = replace(cross, pg=None)
    with pytest.raises(GridMismatch):
        sd_naive_lattice(detached)


def test_sd_naive_on_diagonal_has_no_imaginary_part(gaussian_series):
    spg = smoothed_pg_from_series(gaussian_series(64), [0.5], weight=KernelWeight(bw=0.5))
    sd_re, sd_im = sd_naive_lattice(spg)
    assert np.all(sd_im == 0)
    expected = np.sqrt(variance_factor(spg.weight, 64)) * spg.values[:, 0, 0, 0].real
    np.testing.assert_allclose(sd_re[:, 0, 0], expected)


class TestNormalBands:
    def test_band_is_symmetric_around_estimate(self, gaussian_series):
        spg = smoothed_pg_from_series(gaussian_series(64), [0.25, 0.5], weight=KernelWeight(bw=0.6))
        band = ci(spg, alpha=0.1)
        assert band.method == NORMAL
        assert band.coverage == pytest.approx(0.9)
        estimate = spg.values[..., 0]
        sd_re, _ = sd_naive_lattice(spg)
        z = norm.ppf(0.95)
        np.testing.assert_allclose(band.upper_re - estimate.real, z * sd_re)
        np.testing.assert_allclose(estimate.real - band.lower_re, z * sd_re)

    def test_smaller_alpha_gives_wider_band(self, gaussian_series):
        spg = smoothed_pg_from_series(gaussian_series(64), [0.5], weight=KernelWeight(bw=0.6))
        narrow, wide = ci(spg, alpha=0.2), ci(spg, alpha=0.01)
        assert np.all(wide.upper_re - wide.lower_re >= narrow.upper_re - narrow.lower_re)

    def test_alpha_one_gives_zero_width(self, gaussian_series):
        spg = smoothed_pg_from_series(gaussian_series(32), [0.3, 0.6])
        band = ci(spg, alpha=1.0)
        np.testing.assert_allclose(band.lower_re, band.upper_re)
        np.testing.assert_allclose(band.upper_im, spg.values[..., 0].imag)

    def test_band_scales_with_estimate(self, gaussian_series):
        spg = smoothed_pg_from_series(gaussian_series(32), [0.3, 0.6])
        scaled = replace(spg, values=3.0 * spg.values)
        np.testing.assert_allclose(ci(scaled).upper_re, 3.0 * ci(spg).upper_re)
        np.testing.assert_allclose(ci(scaled).lower_im, 3.0 * ci(spg).lower_im)

    def test_rejects_specdistr(self, gaussian_series):
        spg = smoothed_pg_from_series(gaussian_series(16), [0.5], weight=SpecDistrWeight())
        with pytest.raises(WeightKindMismatch):
            ci(spg)
        with pytest.raises(WeightKindMismatch):
            sd_naive_lattice(spg)

    def test_unknown_method(self, gaussian_series):
        spg = smoothed_pg_from_series(gaussian_series(16), [0.5])
        with pytest.raises(ValueError):
            ci(spg, method="pivotal")


class TestBootstrapBands:
    def test_quantiles_of_replicates(self, gaussian_series):
        pg = quantile_pg_from_series(gaussian_series(64), [0.5], boot=BootSpec(B=25, l=8, seed=4))
        spg = smooth_pg(pg, KernelWeight(bw=0.5))
        band = ci(spg, alpha=0.2, method="boot_full")
        assert band.method == BOOT_FULL
        replicates = spg.values[5, 0, 0, 1:].real
        assert band.lower_re[5, 0, 0] == pytest.approx(np.quantile(replicates, 0.1))
        assert band.upper_re[5, 0, 0] == pytest.approx(np.quantile(replicates, 0.9))

    def test_identical_replicates_collapse_band(self, gaussian_series):
        spg = smoothed_pg_from_series(gaussian_series(32), [0.5])
        copies = replace(spg, values=np.repeat(spg.values[..., :1], 21, axis=-1))
        band = ci(copies, method="boot.full")
        np.testing.assert_allclose(band.lower_re, spg.values[..., 0].real)
        np.testing.assert_allclose(band.upper_re, spg.values[..., 0].real)

    def test_needs_enough_replicates(self, gaussian_series):
        pg = quantile_pg_from_series(gaussian_series(32), [0.5], boot=BootSpec(B=5, l=4))
        with pytest.raises(InsufficientReplicates):
            ci(smooth_pg(pg, KernelWeight()), method="boot.full")


def test_band_dict_round_trip(gaussian_series):
    spg = smoothed_pg_from_series(gaussian_series(32), [0.3, 0.6])
    band = ci(spg)
    restored = ConfidenceBand.from_dict(band.to_dict(), spg.n, spg.grid, spg.levels)
    np.testing.assert_allclose(restored.lower_im, band.lower_im)
    np.testing.assert_allclose(restored.upper_re, band.upper_re)
    assert restored.alpha == band.alpha


IID_TRUTH = 0.25 / (2 * np.pi)


def _coverage(method: str, runs: int, boot=None) -> float:
    """Share of interior Fourier frequencies where the tau = 0.5 band covers the iid spectrum"""
    n, bw = 1024, 0.3
    model = get_model("iid-gaussian")
    omega = 2 * np.pi * np.arange(n // 2 + 1) / n
    interior = (omega >= bw) & (omega <= np.pi - bw)
    covered = []
    for r in range(runs):
        Y = model.generate(n, substream(77, "study", r))
        spg = smoothed_pg_from_series(Y, [0.5], weight=KernelWeight(bw=bw), boot=boot, method="fft")
        band = ci(spg, alpha=0.1, method=method)
        lower, upper = band.lower_re[interior, 0, 0], band.upper_re[interior, 0, 0]
        covered.append(np.mean((lower <= IID_TRUTH) & (IID_TRUTH <= upper)))
    return float(np.mean(covered))


@pytest.mark.slow
def test_normal_band_coverage_for_iid_series():
    """Pointwise 90% bands cover the flat iid spectrum about 90% of the time"""
    assert 0.82 <= _coverage(NORMAL, 500) <= 0.97


@pytest.mark.slow
def test_bootstrap_band_coverage_for_iid_series():
    assert 0.78 <= _coverage(BOOT_FULL, 500, boot=BootSpec(B=250, l=32, seed=11)) <= 0.97


@pytest.mark.slow
def test_normal_and_bootstrap_band_widths_agree():
    Y = get_model("iid-gaussian").generate(1024, substream(5, "study", 0))
    spg = smoothed_pg_from_series(
        Y, [0.5], weight=KernelWeight(bw=0.3), boot=BootSpec(B=250, l=32, seed=5), method="fft"
    )
    normal, boot = ci(spg, method=NORMAL), ci(spg, method=BOOT_FULL)
    normal_width = np.median(normal.upper_re[1:, 0, 0] - normal.lower_re[1:, 0, 0])
    boot_width = np.median(boot.upper_re[1:, 0, 0] - boot.lower_re[1:, 0, 0])
    assert 0.5 <= normal_width / boot_width <= 2.0
