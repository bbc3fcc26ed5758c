"""Pointwise confidence bands for smoothed quantile periodograms"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.stats import norm

from src.models import GridMismatch, LevelGrid, QSpecError, UnknownLevel, level_positions, resolve_frequencies
from src.periodogram import quantile_pg
from src.smoothing import KernelWeight, SmoothedPG, smooth_pg, smoothing_matrix


MIN_BOOT_REPLICATES = 20

NORMAL = "normal"
BOOT_FULL = "boot.full"
CI_METHODS = {
    "normal": NORMAL,
    "boot.full": BOOT_FULL,
    "boot_full": BOOT_FULL,
}


class WeightKindMismatch(QSpecError, ValueError):
    """Raised when an operation needs a kernel-smoothed estimator"""
    pass


class InsufficientReplicates(QSpecError, ValueError):
    """Raised when bootstrap bands are requested with too few replicates"""
    pass


@dataclass(frozen=True, eq=False)
class ConfidenceBand:
    """Lower/upper limits of Re and Im per (omega_j, tau1, tau2) for the b = 0 estimate"""
    n: int
    grid: np.ndarray
    levels: LevelGrid
    lower_re: np.ndarray
    upper_re: np.ndarray
    lower_im: np.ndarray
    upper_im: np.ndarray
    alpha: float
    method: str

    @property
    def coverage(self) -> float:
        return 1.0 - self.alpha

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "method": self.method,
            "lower": np.stack([self.lower_re, self.lower_im], axis=-1).tolist(),
            "upper": np.stack([self.upper_re, self.upper_im], axis=-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, n: int, grid: np.ndarray, levels: LevelGrid) -> "ConfidenceBand":
        lower = np.asarray(data["lower"], dtype=np.float64)
        upper = np.asarray(data["upper"], dtype=np.float64)
        return cls(
            n=n,
            grid=np.asarray(grid, dtype=np.int64),
            levels=levels,
            lower_re=lower[..., 0],
            upper_re=upper[..., 0],
            lower_im=lower[..., 1],
            upper_im=upper[..., 1],
            alpha=float(data["alpha"]),
            method=data["method"],
        )


def _require_kernel(spg: SmoothedPG) -> KernelWeight:
    if not isinstance(spg.weight, KernelWeight):
        name = spg.weight.describe() if spg.weight is not None else "no weight"
        raise WeightKindMismatch(f"Confidence bands need a kernel-smoothed estimator, got {name}")
    return spg.weight


def variance_factor(weight: KernelWeight, n: int) -> np.ndarray:
    """nu(omega_j) = (2 pi / n)^2 sum_{s=1}^{n-1} W_n(omega_j - 2 pi s / n)^2 on the half grid"""
    M = smoothing_matrix(weight, n)
    return (2 * np.pi / n) ** 2 * np.sum(M ** 2, axis=1)


def _diagonal_estimates(spg: SmoothedPG, levels: Tuple[float, ...]) -> np.ndarray:
    """Smoothed f(tau, tau) per stored frequency for each requested level, shape (J, K)"""
    try:
        k1 = level_positions(spg.levels.levels1, levels)
        k2 = level_positions(spg.levels.levels2, levels)
        return spg.values[:, k1, k2, 0].real
    except UnknownLevel:
        pass
    if spg.pg is None or spg.pg.freq_rep is None:
        raise GridMismatch(
            "Estimator lacks f(tau, tau) for some levels and keeps no frequency representation to compute it"
        )
    diagonal = smooth_pg(quantile_pg(spg.pg.freq_rep, levels, levels), spg.weight)
    K = len(levels)
    return diagonal.values[:, np.arange(K), np.arange(K), 0].real


def sd_naive_lattice(spg: SmoothedPG) -> Tuple[np.ndarray, np.ndarray]:
    """Plug-in standard deviations of Re and Im for every stored (j, k1, k2)"""
    weight = _require_kernel(spg)
    nu = variance_factor(weight, spg.n)[spg.grid]

    estimate = spg.values[..., 0]
    f11 = _diagonal_estimates(spg, spg.levels.levels1)
    f22 = _diagonal_estimates(spg, spg.levels.levels2)

    product = f11[:, :, None] * f22[:, None, :]
    re2 = estimate.real ** 2
    im2 = estimate.imag ** 2
    scale = (nu / 2)[:, None, None]
    var_re = scale * np.maximum(0.0, product + re2 - im2)
    var_im = scale * np.maximum(0.0, product - re2 + im2)
    return np.sqrt(var_re), np.sqrt(var_im)


def sd_naive(spg: SmoothedPG, omega: float, k1: int, k2: int) -> Tuple[float, float]:
    """(sd of Re, sd of Im) at one frequency and level-index pair"""
    sd_re, sd_im = sd_naive_lattice(spg)
    positions, _ = resolve_frequencies(spg.n, spg.grid, spg.frequency_kind, [omega])
    j = int(positions[0])
    return float(sd_re[j, k1, k2]), float(sd_im[j, k1, k2])


def ci(spg: SmoothedPG, alpha: float = 0.1, method: str = NORMAL) -> ConfidenceBand:
    """Normal-approximation or bootstrap-quantile pointwise bands"""
    if method not in CI_METHODS:
        raise ValueError(f"Unknown CI method: {method} (use 'normal' or 'boot.full')")
    method = CI_METHODS[method]
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    _require_kernel(spg)

    estimate = spg.values[..., 0]
    if method == NORMAL:
        z = norm.ppf(1 - alpha / 2)
        sd_re, sd_im = sd_naive_lattice(spg)
        lower_re, upper_re = estimate.real - z * sd_re, estimate.real + z * sd_re
        lower_im, upper_im = estimate.imag - z * sd_im, estimate.imag + z * sd_im
    else:
        if spg.B < MIN_BOOT_REPLICATES:
            raise InsufficientReplicates(
                f"boot.full needs at least {MIN_BOOT_REPLICATES} replicates, estimator has B={spg.B}"
            )
        replicates = spg.values[..., 1:]
        probs = [alpha / 2, 1 - alpha / 2]
        lower_re, upper_re = np.quantile(replicates.real, probs, axis=-1)
        lower_im, upper_im = np.quantile(replicates.imag, probs, axis=-1)

    return ConfidenceBand(
        n=spg.n,
        grid=spg.grid,
        levels=spg.levels,
        lower_re=lower_re,
        upper_re=upper_re,
        lower_im=lower_im,
        upper_im=upper_im,
        alpha=float(alpha),
        method=method,
    )
