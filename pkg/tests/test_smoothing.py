import math

import numpy as np
import pytest
from scipy import integrate

from src.bootstrap import BootSpec
from src.models import CUMULATIVE, HERMITIAN, GridMismatch, LevelGrid
from src.periodogram import QuantilePG, quantile_pg_from_series
from src.smoothing import (
    KERNELS,
    InvalidBandwidth,
    KernelWeight,
    SmoothedPG,
    SpecDistrWeight,
    UnknownKernel,
    kernel_weights,
    smooth_pg,
    smoothed_pg_from_series,
    smoothing_matrix,
    weight_from_dict,
)
from tests.oracles import naive_smoothed


# ============================================================
# Kernels and weights
# ============================================================

@pytest.mark.parametrize("name", sorted(KERNELS))
def test_kernels_have_unit_mass(name):
    mass, _ = integrate.quad(KERNELS[name], -math.pi, math.pi)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_epanechnikov_peak():
    assert KernelWeight("W1", 1.0).evaluate(0.0) == pytest.approx(3 / (4 * math.pi))


def test_aliases_resolve():
    assert KernelWeight("W0").kernel == "uniform"
    assert KernelWeight("Triweight").kernel == "triweight"
    with pytest.raises(UnknownKernel):
        KernelWeight("gaussian")


@pytest.mark.parametrize("bw", [0.0, -0.1, 4.0, float("nan")])
def test_invalid_bandwidth(bw):
    with pytest.raises(InvalidBandwidth):
        KernelWeight("epanechnikov", bw)


def test_periodized_kernel_is_2pi_periodic_and_even():
    weight = KernelWeight("biweight", 2.5)
    u = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(weight.evaluate(u), weight.evaluate(u + 2 * np.pi), atol=1e-12)
    np.testing.assert_allclose(weight.evaluate(u), weight.evaluate(-u), atol=1e-12)


def test_periodized_kernel_integrates_to_one_over_circle():
    weight = KernelWeight("epanechnikov", math.pi)
    mass, _ = integrate.quad(weight.evaluate, -math.pi, math.pi)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_kernel_weights_riemann_sum():
    n = 1024
    weights = kernel_weights("epanechnikov", 0.3, n, np.pi / 2)
    assert weights.shape == (n - 1,)
    assert (2 * np.pi / n) * weights.sum() == pytest.approx(1.0, abs=1e-3)


def test_weight_from_dict():
    assert isinstance(weight_from_dict({"kind": "specdistr"}), SpecDistrWeight)
    weight = weight_from_dict(KernelWeight("W2", 0.2).to_dict())
    assert weight == KernelWeight("biweight", 0.2)


def test_smoothing_matrix_skips_zero_frequency():
    M = smoothing_matrix(KernelWeight(bw=1.0), 16)
    assert M.shape == (9, 16)
    assert np.all(M[:, 0] == 0)
    w = KernelWeight(bw=1.0).circular_weights(16)
    assert M[2, 5] == pytest.approx(w[3])


# ============================================================
# Smoothed periodograms
# ============================================================

def _epanechnikov(bw):
    weight = KernelWeight("epanechnikov", bw)
    return lambda u: float(weight.evaluate(u))


@pytest.mark.parametrize("n", [12, 13])
def test_kernel_smoothing_matches_double_loop(gaussian_series, n):
    Y = gaussian_series(n)
    spg = smoothed_pg_from_series(Y, [0.25, 0.5], weight=KernelWeight("epanechnikov", 1.2))
    assert spg.frequency_kind == HERMITIAN
    W = _epanechnikov(1.2)
    for j, omega in enumerate(spg.frequencies):
        for k1, l1 in enumerate(spg.levels.levels1):
            for k2, l2 in enumerate(spg.levels.levels2):
                expected = naive_smoothed(Y.observations, l1, l2, omega, W)
                assert spg.values[j, k1, k2, 0] == pytest.approx(expected, abs=1e-10)


def test_fft_method_matches_direct(gaussian_series):
    pg = quantile_pg_from_series(gaussian_series(64), [0.3, 0.7])
    weight = KernelWeight("triweight", 0.5)
    direct = smooth_pg(pg, weight, method="direct")
    fast = smooth_pg(pg, weight, method="fft")
    np.testing.assert_allclose(fast.values, direct.values, atol=1e-12)


def test_unknown_method(gaussian_series):
    pg = quantile_pg_from_series(gaussian_series(8), [0.5])
    with pytest.raises(ValueError):
        smooth_pg(pg, KernelWeight(), method="other")


def test_smoothed_diagonal_real_nonnegative(gaussian_series):
    spg = smoothed_pg_from_series(gaussian_series(40), [0.2, 0.5, 0.8])
    diagonal = spg.values[:, np.arange(3), np.arange(3), 0]
    assert np.all(np.abs(diagonal.imag) < 1e-14)
    assert np.all(diagonal.real >= -1e-14)
    assert spg.label == "SmoothedPG"
    assert isinstance(spg, SmoothedPG)


def test_specdistr_accumulates_periodogram(gaussian_series):
    Y = gaussian_series(16)
    pg = quantile_pg_from_series(Y, [0.5])
    spg = smooth_pg(pg, SpecDistrWeight())
    assert spg.frequency_kind == CUMULATIVE
    assert spg.values.shape == (17, 1, 1, 1)
    assert spg.values[0, 0, 0, 0] == 0
    assert spg.values[3, 0, 0, 0] == pytest.approx(2 * np.pi / 16 * pg.values[1:4, 0, 0, 0].sum())


def test_specdistr_total_is_lag_zero_covariance(gaussian_series):
    n = 64
    spg = smoothed_pg_from_series(gaussian_series(n), [0.5], weight=SpecDistrWeight())
    total = spg.get_values([2 * np.pi * (n - 1) / n])[0, 0, 0, 0]
    assert total == pytest.approx(0.25, abs=1e-12)
    assert spg.get_values([2 * np.pi])[0, 0, 0, 0] == pytest.approx(total)


def test_weight_size_mismatch(gaussian_series):
    pg = quantile_pg_from_series(gaussian_series(16), [0.5])
    with pytest.raises(GridMismatch):
        smooth_pg(pg, KernelWeight(n=32))


def test_incomplete_grid_rejected():
    pg = QuantilePG(
        n=8, grid=np.arange(3), levels=LevelGrid.same([0.5]),
        values=np.ones((3, 1, 1, 1)), frequency_kind=HERMITIAN
    )
    with pytest.raises(GridMismatch):
        smooth_pg(pg, KernelWeight())


def test_replicates_smoothed_independently(gaussian_series):
    pg = quantile_pg_from_series(gaussian_series(32), [0.5], boot=BootSpec(B=3, l=4, seed=1))
    spg = smooth_pg(pg, KernelWeight(bw=0.8))
    single = QuantilePG(
        n=32, grid=pg.grid, levels=pg.levels, values=pg.values[..., 2:3], frequency_kind=HERMITIAN
    )
    np.testing.assert_allclose(spg.values[..., 2:3], smooth_pg(single, KernelWeight(bw=0.8)).values)
