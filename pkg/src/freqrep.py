"""Frequency representations: clipped Fourier transforms and harmonic quantile regression"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.bootstrap import BootSpec
from src.models import (
    HERMITIAN,
    FourierGrid,
    QSpecError,
    TimeSeries,
    fold_frequency,
    format_value_table,
    level_positions,
    resolve_frequencies,
    sorted_levels,
)
from src.quantreg import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
    DegenerateDesign,
    SolverNotConverged,
    rq_fit,
    sample_quantile,
)


logger = logging.getLogger(__name__)

CLIPPED = "clipped"
QREG = "qr"

# Above this many (frequency x observation) products the FFT path is used
DIRECT_DFT_LIMIT = 2 ** 22
RANK_TOLERANCE = 1e-12


class LevelOutOfRange(QSpecError, ValueError):
    """Raised when a level is outside the admissible range of an estimator"""
    pass


@dataclass(frozen=True, eq=False)
class FreqRep:
    """
    Frequency representation values[j][k][b] on the half Fourier grid.

    kind is "clipped" (clipped DFT d) or "qr" (harmonic regression coefficient b).
    b = 0 is the original data, b = 1..B the bootstrap replicates.
    """
    source: TimeSeries
    levels: Tuple[float, ...]
    values: np.ndarray
    rank_based: bool
    kind: str
    boot: Optional[BootSpec] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        J = self.source.n // 2 + 1
        if values.ndim != 3 or values.shape[:2] != (J, len(self.levels)):
            raise ValueError(f"Lattice shape {values.shape} does not match ({J}, {len(self.levels)}, B+1)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def grid(self) -> FourierGrid:
        return FourierGrid(self.n)

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    @property
    def B(self) -> int:
        return self.values.shape[2] - 1

    @property
    def label(self) -> str:
        return "ClippedFT" if self.kind == CLIPPED else "QRegEstimator"

    def get_values(
        self,
        frequencies: Optional[Sequence[float]] = None,
        levels: Optional[Sequence[float]] = None,
    ) -> np.ndarray:
        """Lattice (J, K, B+1) for any Fourier frequencies, folded onto [0, pi]"""
        positions, conjugate = resolve_frequencies(
            self.n, self.grid.indices, HERMITIAN, frequencies
        )
        k = level_positions(self.levels, levels)
        out = self.values[positions][:, k].copy()
        out[conjugate] = np.conj(out[conjugate])
        return out

    def summary(self, digits: int = 3) -> str:
        lines = [
            f"{self.label} (J={self.values.shape[0]}, K={len(self.levels)}, B+1={self.B + 1})",
            "Frequencies:  " + " ".join(f"{w:.4f}" for w in self.frequencies),
            "Levels     :  " + " ".join(f"{x:g}" for x in self.levels),
            "",
            "Values:",
        ]
        lines.extend(format_value_table(self.frequencies, self.levels, self.values[:, :, 0], digits))
        return "\n".join(lines)


# ============================================================
# Ranks and clipping
# ============================================================

def empirical_ranks(Y: TimeSeries) -> np.ndarray:
    """r_t = #{s : X_s <= X_t}; ties share their maximal rank"""
    x = Y.observations
    return np.searchsorted(np.sort(x), x, side="right").astype(np.int64)


def check_levels(levels: Sequence[float], interval: Optional[str]) -> Tuple[float, ...]:
    """Sort levels and check them against "[0,1]", "(0,1)" or nothing"""
    levels = sorted_levels(levels)
    if not levels:
        raise LevelOutOfRange("At least one level is required")
    if interval == "[0,1]":
        bad = [x for x in levels if not 0.0 <= x <= 1.0]
    elif interval == "(0,1)":
        bad = [x for x in levels if not 0.0 < x < 1.0]
    else:
        bad = []
    if bad:
        raise LevelOutOfRange(f"Levels {bad} outside {interval}")
    return levels


def _replicate_positions(n: int, boot: Optional[BootSpec]) -> List[np.ndarray]:
    positions = [np.arange(n)]
    if boot is not None:
        positions.extend(boot.positions(n))
    return positions


def _phase_matrix(n: int, indices: np.ndarray) -> np.ndarray:
    """exp(-i 2 pi s t / n) with s*t reduced mod n before scaling"""
    t = np.arange(n)
    angles = 2 * np.pi * ((indices[:, None] * t[None, :]) % n) / n
    return np.exp(-1j * angles)


def clipped_ft(
    Y: TimeSeries,
    levels: Sequence[float],
    rank_based: bool = True,
    boot: Optional[BootSpec] = None,
    direct_limit: int = DIRECT_DFT_LIMIT,
) -> FreqRep:
    """
    DFT of the clipped series I{X_t <= q} (raw levels) or I{r_t <= n tau} (ranks).

    Bootstrap replicates resample the pseudo-observations of the original series
    with moving-blocks positions.
    """
    levels = check_levels(levels, "[0,1]" if rank_based else None)
    n = Y.n
    grid = FourierGrid(n)
    level_arr = np.asarray(levels)

    if rank_based:
        scores = empirical_ranks(Y).astype(np.float64)
        thresholds = n * level_arr + RANK_TOLERANCE
    else:
        scores = Y.observations
        thresholds = level_arr

    # (B+1, K, n) indicator cube
    indicators = np.stack([
        (scores[pos][None, :] <= thresholds[:, None]).astype(np.float64)
        for pos in _replicate_positions(n, boot)
    ])

    J = len(grid)
    if J * n <= direct_limit:
        phases = _phase_matrix(n, grid.indices)
        flat = indicators.reshape(-1, n)
        dft = (phases @ flat.T).reshape(J, indicators.shape[0], len(levels))
        values = dft.transpose(0, 2, 1)
    else:
        logger.debug("clipped_ft: FFT path for n=%d", n)
        values = np.fft.fft(indicators, axis=-1)[..., :J].transpose(2, 1, 0)

    return FreqRep(
        source=Y,
        levels=levels,
        values=values,
        rank_based=rank_based,
        kind=CLIPPED,
        boot=boot,
    )


# ============================================================
# Harmonic quantile regression
# ============================================================

def regression_responses(Y: TimeSeries, rank_based: bool) -> np.ndarray:
    """Ranks n F_n(X_t), or n X_t for the raw estimator"""
    if rank_based:
        return empirical_ranks(Y).astype(np.float64)
    return Y.n * Y.observations


def harmonic_design(n: int, s: int) -> np.ndarray:
    """Design rows for omega = 2 pi s / n: (1, 2cos, -2sin), or (1, cos) at pi"""
    t = np.arange(n)
    s = s % n
    angles = 2 * np.pi * ((s * t) % n) / n
    if 2 * s == n:
        return np.column_stack([np.ones(n), np.cos(angles)])
    return np.column_stack([np.ones(n), 2 * np.cos(angles), -2 * np.sin(angles)])


def zero_frequency_count(n: int, tau: float) -> float:
    """Count floor(n tau) stored at omega = 0"""
    return float(np.floor(n * tau + RANK_TOLERANCE))


def _fit_index(
    y: np.ndarray,
    tau: float,
    s: int,
    tol: float,
    max_iter: int,
) -> Tuple[float, complex]:
    n = y.shape[0]
    s = s % n
    if s == 0:
        return sample_quantile(y, tau), complex(zero_frequency_count(n, tau), 0.0)

    X = harmonic_design(n, s)
    if n < X.shape[1]:
        raise DegenerateDesign(f"n={n} observations cannot identify {X.shape[1]} coefficients")
    fit = rq_fit(X, y, tau, tol=tol, max_iter=max_iter)
    coef = fit.coefficients
    if X.shape[1] == 2:
        return float(coef[0]), complex(coef[1], 0.0)
    return float(coef[0]), complex(coef[1], coef[2])


def qreg_fit(
    Y: TimeSeries,
    tau: float,
    omega: float,
    rank_based: bool = True,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[float, complex]:
    """
    Harmonic quantile regression of the responses on (1, 2cos(wt), -2sin(wt)).

    Returns (a, b). At omega = 0 mod 2pi b is the count floor(n tau).
    """
    if not 0.0 < tau < 1.0:
        raise LevelOutOfRange(f"Level {tau} outside (0,1)")
    s, conjugate = fold_frequency(omega, Y.n)
    s_full = Y.n - s if conjugate else s
    return _fit_index(regression_responses(Y, rank_based), tau, s_full, tol, max_iter)


def qreg_estimator(
    Y: TimeSeries,
    levels: Sequence[float],
    rank_based: bool = True,
    boot: Optional[BootSpec] = None,
    threads: int = 1,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FreqRep:
    """b-hat for every level, half-grid frequency and replicate"""
    levels = check_levels(levels, "(0,1)")
    n = Y.n
    grid = FourierGrid(n)
    responses = regression_responses(Y, rank_based)
    replicates = [responses[pos] for pos in _replicate_positions(n, boot)]

    def fit_frequency(j: int) -> np.ndarray:
        s = int(grid.indices[j])
        row = np.empty((len(levels), len(replicates)), dtype=np.complex128)
        if s == 0:
            for k, tau in enumerate(levels):
                row[k] = zero_frequency_count(n, tau)
            return row
        for k, tau in enumerate(levels):
            for b, y in enumerate(replicates):
                try:
                    row[k, b] = _fit_index(y, tau, s, tol, max_iter)[1]
                except SolverNotConverged as e:
                    omega = 2 * np.pi * s / n
                    raise SolverNotConverged(
                        f"{e} (tau={tau:g}, omega={omega:.6f}, b={b})", gap=e.gap
                    ) from e
        return row

    values = np.empty((len(grid), len(levels), len(replicates)), dtype=np.complex128)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for j, row in enumerate(pool.map(fit_frequency, range(len(grid)))):
                values[j] = row
    else:
        for j in range(len(grid)):
            values[j] = fit_frequency(j)

    return FreqRep(
        source=Y,
        levels=levels,
        values=values,
        rank_based=rank_based,
        kind=QREG,
        boot=boot,
    )
