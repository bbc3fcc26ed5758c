"""Data models shared by every quantile spectral quantity"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np


FREQUENCY_TOLERANCE = 1e-8
LEVEL_TOLERANCE = 1e-12

HERMITIAN = "hermitian"
CUMULATIVE = "cumulative"


# ============================================================
# Errors
# ============================================================

class QSpecError(Exception):
    """Base class for all errors raised by this package"""
    pass


class InvalidTimeSeries(QSpecError, ValueError):
    """Raised when observations are too short or not finite"""
    pass


class NonFourierFrequency(QSpecError, ValueError):
    """Raised when a frequency does not lie on the Fourier grid"""
    pass


class UnknownFrequency(NonFourierFrequency):
    """Raised when a Fourier frequency is valid but was not stored"""
    pass


class UnknownLevel(QSpecError, ValueError):
    """Raised when a requested level is not part of the stored levels"""
    pass


class GridMismatch(QSpecError, ValueError):
    """Raised when two objects live on incompatible frequency/level grids"""
    pass


# ============================================================
# Time series and grids
# ============================================================

@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Observed time series X_0, ..., X_{n-1}"""
    observations: np.ndarray

    def __post_init__(self):
        obs = np.array(self.observations, dtype=np.float64).reshape(-1)
        if obs.shape[0] < 2:
            raise InvalidTimeSeries(f"Need at least 2 observations, got {obs.shape[0]}")
        if not np.all(np.isfinite(obs)):
            raise InvalidTimeSeries("Observations must be finite (no NaN/Inf)")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return int(self.observations.shape[0])

    def __len__(self) -> int:
        return self.n

    def transform(self, func) -> "TimeSeries":
        """Apply an elementwise transform, e.g. np.exp"""
        return TimeSeries(func(self.observations))


@dataclass(frozen=True)
class FourierGrid:
    """Fourier frequencies 2*pi*s/n for s = 0..floor(n/2)"""
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Grid size must be positive, got {self.n}")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n // 2 + 1)

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * self.indices / self.n

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n

    def __len__(self) -> int:
        return self.n // 2 + 1


@dataclass(frozen=True)
class LevelGrid:
    """Pair of sorted level sets (tau_1, tau_2 or q_1, q_2)"""
    levels1: Tuple[float, ...]
    levels2: Tuple[float, ...]

    def __post_init__(self):
        l1 = tuple(float(x) for x in self.levels1)
        l2 = tuple(float(x) for x in self.levels2)
        for name, levels in (("levels1", l1), ("levels2", l2)):
            if not levels:
                raise ValueError(f"{name} must not be empty")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValueError(f"{name} must be strictly increasing: {levels}")
        object.__setattr__(self, "levels1", l1)
        object.__setattr__(self, "levels2", l2)

    @classmethod
    def same(cls, levels: Sequence[float]) -> "LevelGrid":
        return cls(tuple(levels), tuple(levels))

    @property
    def same_levels(self) -> bool:
        return self.levels1 == self.levels2

    def check_probabilities(self, closed: bool = False) -> bool:
        """True when all levels are in (0,1), or [0,1] when closed"""
        all_levels = self.levels1 + self.levels2
        if closed:
            return all(0.0 <= x <= 1.0 for x in all_levels)
        return all(0.0 < x < 1.0 for x in all_levels)


def sorted_levels(levels: Sequence[float]) -> Tuple[float, ...]:
    """Sort and de-duplicate user supplied levels"""
    out: List[float] = []
    for x in sorted(float(v) for v in levels):
        if not out or abs(x - out[-1]) > LEVEL_TOLERANCE:
            out.append(x)
    return tuple(out)


def level_positions(stored: Sequence[float], requested: Optional[Sequence[float]]) -> List[int]:
    """Map requested levels onto indices of the stored levels"""
    if requested is None:
        return list(range(len(stored)))
    positions = []
    for level in requested:
        matches = [k for k, s in enumerate(stored) if abs(s - float(level)) <= LEVEL_TOLERANCE]
        if not matches:
            raise UnknownLevel(f"Level {level} not in stored levels {list(stored)}")
        positions.append(matches[0])
    return positions


# ============================================================
# Frequency conventions
# ============================================================

def _grid_position(omega: float, n: int) -> int:
    x = float(omega) * n / (2 * math.pi)
    s = round(x)
    if abs(x - s) > FREQUENCY_TOLERANCE * max(1.0, abs(x) / n):
        raise NonFourierFrequency(f"Frequency {omega} is not a Fourier frequency for n={n}")
    return int(s)


def fold_frequency(omega: float, n: int) -> Tuple[int, bool]:
    """
    Fold a Fourier frequency onto the stored half grid [0, pi].

    Returns (s, conjugate) where s indexes 2*pi*s/n in [0, pi] and conjugate is
    True when the value at omega is the conjugate of the value at index s.
    """
    s = _grid_position(omega, n) % n
    if 2 * s <= n:
        return s, False
    return n - s, True


def snap_frequency(omega: float, n: int) -> int:
    """Grid index s in [0, n] for omega in [0, 2*pi], no folding"""
    s = _grid_position(omega, n)
    if s < 0 or s > n:
        raise NonFourierFrequency(f"Frequency {omega} outside [0, 2*pi]")
    return s


# ============================================================
# Quantile spectral quantities
# ============================================================

@dataclass(frozen=True, eq=False)
class QSpecQuantity:
    """
    Complex values Q_b(omega_j, level1_k1, level2_k2) on a Fourier lattice.

    values has shape (J, K1, K2, B+1); b = 0 is the point estimate, 1..B are
    bootstrap replicates. grid holds the stored Fourier indices s (omega = 2*pi*s/n).
    """
    n: int
    grid: np.ndarray
    levels: LevelGrid
    values: np.ndarray
    frequency_kind: str

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.int64).reshape(-1)
        values = np.array(self.values, dtype=np.complex128)
        expected = (grid.shape[0], len(self.levels.levels1), len(self.levels.levels2))
        if values.ndim != 4 or values.shape[:3] != expected:
            raise GridMismatch(f"Values shape {values.shape} does not match lattice {expected} x (B+1)")
        if self.frequency_kind not in (HERMITIAN, CUMULATIVE):
            raise ValueError(f"Unknown frequency kind: {self.frequency_kind}")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * self.grid / self.n

    @property
    def B(self) -> int:
        return self.values.shape[3] - 1

    @property
    def label(self) -> str:
        return type(self).__name__

    def get_values(
        self,
        frequencies: Optional[Sequence[float]] = None,
        levels1: Optional[Sequence[float]] = None,
        levels2: Optional[Sequence[float]] = None,
    ) -> np.ndarray:
        return get_values(self, frequencies, levels1, levels2)

    def summary(self, digits: int = 3) -> str:
        """Console rendering of the b = 0 values, diagonal or first row of levels"""
        lines = [
            f"{self.label} (J={len(self.grid)}, K1={len(self.levels.levels1)}, "
            f"K2={len(self.levels.levels2)}, B+1={self.B + 1})",
            "Frequencies:  " + " ".join(f"{w:.4f}" for w in self.frequencies),
            "Levels 1   :  " + " ".join(f"{x:g}" for x in self.levels.levels1),
            "Levels 2   :  " + " ".join(f"{x:g}" for x in self.levels.levels2),
            "",
            "Values (level 1 = first level):",
        ]
        lines.extend(format_value_table(
            self.frequencies, self.levels.levels2, self.values[:, 0, :, 0], digits
        ))
        return "\n".join(lines)


def format_value_table(
    frequencies: np.ndarray,
    levels: Sequence[float],
    values: np.ndarray,
    digits: int = 3,
) -> List[str]:
    """Rows of 'frequency  value value ...' with complex formatting"""
    header = f"{'':>7} " + " ".join(f"{'tau=' + format(x, 'g'):>16}" for x in levels)
    rows = [header]
    for omega, row in zip(frequencies, values):
        cells = []
        for z in row:
            sign = "+" if z.imag >= 0 else "-"
            cells.append(f"{z.real:.{digits}f}{sign}{abs(z.imag):.{digits}f}i".rjust(16))
        rows.append(f"{omega:>7.3f} " + " ".join(cells))
    return rows


def resolve_frequencies(
    n: int,
    grid: np.ndarray,
    frequency_kind: str,
    frequencies: Optional[Sequence[float]],
) -> Tuple[np.ndarray, np.ndarray]:
    """Positions into the stored grid plus a conjugation mask for each request"""
    if frequencies is None:
        positions = np.arange(len(grid))
        return positions, np.zeros(len(grid), dtype=bool)

    lookup = {int(s): pos for pos, s in enumerate(grid)}
    positions = []
    conjugate = []
    for omega in np.atleast_1d(np.asarray(frequencies, dtype=np.float64)):
        if frequency_kind == HERMITIAN:
            s, conj = fold_frequency(omega, n)
        else:
            s, conj = snap_frequency(omega, n), False
        if s not in lookup:
            raise UnknownFrequency(f"Frequency {omega} (index {s}) is not stored")
        positions.append(lookup[s])
        conjugate.append(conj)
    return np.array(positions, dtype=np.int64), np.array(conjugate, dtype=bool)


def get_values(
    q: QSpecQuantity,
    frequencies: Optional[Sequence[float]] = None,
    levels1: Optional[Sequence[float]] = None,
    levels2: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Values for arbitrary Fourier frequencies and level subsets.

    Hermitian quantities use Q(2*pi - omega) = conj(Q(omega)) and 2*pi periodicity,
    so any omega = 2*pi*j/n can be requested. Returns shape (J, K1, K2, B+1).
    """
    positions, conjugate = resolve_frequencies(q.n, q.grid, q.frequency_kind, frequencies)
    k1 = level_positions(q.levels.levels1, levels1)
    k2 = level_positions(q.levels.levels2, levels2)

    out = q.values[positions][:, k1][:, :, k2].copy()
    out[conjugate] = np.conj(out[conjugate])
    return out


def full_circle(values: np.ndarray, n: int) -> np.ndarray:
    """
    Expand a Hermitian lattice stored on s = 0..floor(n/2) to s = 0..n-1.

    The first axis of values must be the complete half grid.
    """
    half = n // 2 + 1
    if values.shape[0] != half:
        raise GridMismatch(f"Expected {half} stored frequencies, got {values.shape[0]}")
    mirror = np.conj(values[1:n - half + 1][::-1])
    return np.concatenate([values, mirror], axis=0)
