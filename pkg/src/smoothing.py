"""Smoothed quantile periodograms: kernel weights and spectral distribution weights"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from src.bootstrap import BootSpec
from src.freqrep import CLIPPED
from src.models import (
    CUMULATIVE,
    HERMITIAN,
    GridMismatch,
    QSpecError,
    QSpecQuantity,
    TimeSeries,
    full_circle,
)
from src.periodogram import QuantilePG, quantile_pg_from_series


logger = logging.getLogger(__name__)

KERNEL_SUPPORT = math.pi
NORMALIZATION_TOLERANCE = 1e-6


class InvalidBandwidth(QSpecError, ValueError):
    """Raised when a bandwidth is not in (0, pi]"""
    pass


class UnknownKernel(QSpecError, ValueError):
    """Raised for a kernel name outside the catalog"""
    pass


# ============================================================
# Kernel catalog (even, supported on [-pi, pi], unit mass)
# ============================================================

def _polynomial_kernel(constant: float, power: int) -> Callable[[np.ndarray], np.ndarray]:
    def W(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        inside = np.abs(u) <= KERNEL_SUPPORT
        return np.where(inside, constant * (1.0 - (u / math.pi) ** 2) ** power, 0.0)
    return W


KERNELS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "uniform": _polynomial_kernel(1 / (2 * math.pi), 0),
    "epanechnikov": _polynomial_kernel(3 / (4 * math.pi), 1),
    "biweight": _polynomial_kernel(15 / (16 * math.pi), 2),
    "triweight": _polynomial_kernel(35 / (32 * math.pi), 3),
}

KERNEL_ALIASES = {
    "W0": "uniform",
    "W1": "epanechnikov",
    "W2": "biweight",
    "W3": "triweight",
}


def resolve_kernel(name: str) -> str:
    """Canonical catalog name for 'epanechnikov', 'W1', ..."""
    key = KERNEL_ALIASES.get(name, name.lower() if isinstance(name, str) else name)
    if key not in KERNELS:
        known = sorted(KERNELS) + sorted(KERNEL_ALIASES)
        raise UnknownKernel(f"Unknown kernel: {name} (known: {', '.join(known)})")
    return key


@lru_cache(maxsize=None)
def _kernel_mass(name: str) -> float:
    mass, _ = integrate.quad(KERNELS[name], -KERNEL_SUPPORT, KERNEL_SUPPORT)
    return mass


# ============================================================
# Weights
# ============================================================

@dataclass(frozen=True)
class KernelWeight:
    """Periodized kernel W_n(u) = bw^-1 sum_j W((u + 2 pi j) / bw)"""
    kernel: str = "epanechnikov"
    bw: float = 0.3
    n: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kernel", resolve_kernel(self.kernel))
        bw = float(self.bw)
        if not (0.0 < bw <= math.pi) or not math.isfinite(bw):
            raise InvalidBandwidth(f"Bandwidth must lie in (0, pi], got {self.bw}")
        object.__setattr__(self, "bw", bw)
        mass = _kernel_mass(self.kernel)
        if abs(mass - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"Kernel {self.kernel} integrates to {mass}, not 1")

    @property
    def kind(self) -> str:
        return "kernel"

    def mother(self, u: np.ndarray) -> np.ndarray:
        return KERNELS[self.kernel](u)

    def evaluate(self, u: Union[float, np.ndarray]) -> np.ndarray:
        """W_n(u); the periodization sum only needs |j| up to the support reach"""
        u = np.asarray(u, dtype=np.float64)
        reach = int(math.ceil((float(np.max(np.abs(u), initial=0.0)) + self.bw * KERNEL_SUPPORT) / (2 * math.pi))) + 1
        shifts = 2 * math.pi * np.arange(-reach, reach + 1)
        total = np.zeros_like(u)
        for shift in shifts:
            total = total + self.mother((u + shift) / self.bw)
        return total / self.bw

    def circular_weights(self, n: int) -> np.ndarray:
        """w[d] = W_n(2 pi d / n), d = 0..n-1"""
        return self.evaluate(2 * np.pi * np.arange(n) / n)

    def describe(self) -> str:
        return f"KernelWeight({self.kernel}, bw={self.bw:g})"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "kernel": self.kernel, "bw": self.bw}


@dataclass(frozen=True)
class SpecDistrWeight:
    """Step weight W_n(u) = I{u <= 0} for integrated spectra"""
    n: Optional[int] = None

    @property
    def kind(self) -> str:
        return "specdistr"

    def evaluate(self, u: Union[float, np.ndarray]) -> np.ndarray:
        return (np.asarray(u, dtype=np.float64) <= 0).astype(np.float64)

    def describe(self) -> str:
        return "SpecDistrWeight"

    def to_dict(self) -> dict:
        return {"kind": self.kind}


Weight = Union[KernelWeight, SpecDistrWeight]


def weight_from_dict(data: dict) -> Weight:
    if data.get("kind") == "specdistr":
        return SpecDistrWeight()
    return KernelWeight(kernel=data.get("kernel", "epanechnikov"), bw=float(data.get("bw", 0.3)))


def kernel_weights(kernel: str, bw: float, n: int, omega: float) -> np.ndarray:
    """W_n(omega - 2 pi s / n) for s = 1..n-1"""
    s = np.arange(1, n)
    return KernelWeight(kernel, bw).evaluate(omega - 2 * np.pi * s / n)


def smoothing_matrix(weight: KernelWeight, n: int) -> np.ndarray:
    """
    M[j, s] = W_n(2 pi (s - j) / n) for targets j = 0..floor(n/2) and sources s = 0..n-1.

    Column s = 0 is zero: the zero frequency never enters a smoothed estimate.
    """
    w = weight.circular_weights(n)
    j = np.arange(n // 2 + 1)
    s = np.arange(n)
    M = w[(s[None, :] - j[:, None]) % n]
    M[:, 0] = 0.0
    return M


# ============================================================
# Smoothed periodograms
# ============================================================

@dataclass(frozen=True, eq=False)
class SmoothedPG(QSpecQuantity):
    """(2 pi / n) sum_{s=1}^{n-1} W_n(2 pi s / n - omega) I(2 pi s / n)"""
    pg: Optional[QuantilePG] = None
    weight: Optional[Weight] = None

    @property
    def label(self) -> str:
        return "SmoothedPG"


def _check_inputs(pg: QuantilePG, weight: Weight) -> None:
    if weight.n is not None and weight.n != pg.n:
        raise GridMismatch(f"Weight built for n={weight.n}, periodogram has n={pg.n}")
    full = np.arange(pg.n // 2 + 1)
    if pg.frequency_kind != HERMITIAN or len(pg.grid) != len(full) or np.any(pg.grid != full):
        raise GridMismatch("Smoothing needs a periodogram on the complete Fourier grid")


def smooth_pg(pg: QuantilePG, weight: Weight, method: str = "direct") -> SmoothedPG:
    """
    Smooth every level pair and replicate of pg.

    Kernel weights give a Hermitian estimate on s = 0..floor(n/2). The spectral
    distribution weight gives the cumulative sum over 1 <= s <= j, stored on
    s = 0..n so that omega = 2 pi is available.
    """
    _check_inputs(pg, weight)
    n = pg.n
    I_full = full_circle(pg.values, n)
    I_full[0] = 0.0

    if isinstance(weight, SpecDistrWeight):
        partial = np.cumsum(I_full, axis=0)
        values = (2 * np.pi / n) * np.concatenate([partial, partial[-1:]], axis=0)
        grid = np.arange(n + 1)
        kind = CUMULATIVE
    elif method == "direct":
        M = smoothing_matrix(weight, n)
        values = (2 * np.pi / n) * np.tensordot(M, I_full, axes=(1, 0))
        grid = np.arange(n // 2 + 1)
        kind = HERMITIAN
    elif method == "fft":
        logger.debug("smooth_pg: circular convolution for n=%d", n)
        w = weight.circular_weights(n)
        spectrum = np.fft.fft(w).reshape((n,) + (1,) * (I_full.ndim - 1))
        conv = np.fft.ifft(spectrum * np.fft.fft(I_full, axis=0), axis=0)
        values = (2 * np.pi / n) * conv[: n // 2 + 1]
        grid = np.arange(n // 2 + 1)
        kind = HERMITIAN
    else:
        raise ValueError(f"Unknown smoothing method: {method} (use 'direct' or 'fft')")

    return SmoothedPG(
        n=n,
        grid=grid,
        levels=pg.levels,
        values=values,
        frequency_kind=kind,
        pg=pg,
        weight=weight,
    )


def smoothed_pg_from_series(
    Y: TimeSeries,
    levels1: Sequence[float],
    levels2: Optional[Sequence[float]] = None,
    type: str = CLIPPED,
    rank_based: bool = True,
    weight: Optional[Weight] = None,
    boot: Optional[BootSpec] = None,
    threads: int = 1,
    method: str = "direct",
) -> SmoothedPG:
    pg = quantile_pg_from_series(
        Y, levels1, levels2, type=type, rank_based=rank_based, boot=boot, threads=threads
    )
    return smooth_pg(pg, weight if weight is not None else KernelWeight(), method=method)
