"""Quantile periodograms: scaled outer products of frequency representations"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.bootstrap import BootSpec
from src.freqrep import CLIPPED, DIRECT_DFT_LIMIT, QREG, FreqRep, clipped_ft, qreg_estimator
from src.models import HERMITIAN, LevelGrid, QSpecQuantity, TimeSeries, level_positions, sorted_levels
from src.quantreg import DEFAULT_MAX_ITER, DEFAULT_TOLERANCE


@dataclass(frozen=True, eq=False)
class QuantilePG(QSpecQuantity):
    """I[j][k1][k2][b] = v[j][k1][b] conj(v[j][k2][b]) / (2 pi n)"""
    freq_rep: Optional[FreqRep] = None

    @property
    def kind(self) -> Optional[str]:
        return self.freq_rep.kind if self.freq_rep is not None else None

    @property
    def rank_based(self) -> Optional[bool]:
        return self.freq_rep.rank_based if self.freq_rep is not None else None


def quantile_pg(
    fr: FreqRep,
    levels1: Optional[Sequence[float]] = None,
    levels2: Optional[Sequence[float]] = None,
) -> QuantilePG:
    """Periodogram of fr, optionally restricted to level subsets of its levels"""
    levels1 = sorted_levels(levels1) if levels1 is not None else fr.levels
    levels2 = sorted_levels(levels2) if levels2 is not None else levels1
    k1 = level_positions(fr.levels, levels1)
    k2 = level_positions(fr.levels, levels2)

    v1 = fr.values[:, k1, :]
    v2 = fr.values[:, k2, :]
    values = v1[:, :, None, :] * np.conj(v2[:, None, :, :]) / (2 * np.pi * fr.n)

    levels = LevelGrid(levels1, levels2)
    if levels.same_levels:
        K = len(levels1)
        for a in range(K):
            values[:, a, a, :] = values[:, a, a, :].real
            for c in range(a + 1, K):
                values[:, c, a, :] = np.conj(values[:, a, c, :])

    return QuantilePG(
        n=fr.n,
        grid=fr.grid.indices,
        levels=levels,
        values=values,
        frequency_kind=HERMITIAN,
        freq_rep=fr,
    )


def quantile_pg_from_series(
    Y: TimeSeries,
    levels1: Sequence[float],
    levels2: Optional[Sequence[float]] = None,
    type: str = CLIPPED,
    rank_based: bool = True,
    boot: Optional[BootSpec] = None,
    threads: int = 1,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    direct_limit: int = DIRECT_DFT_LIMIT,
) -> QuantilePG:
    """Frequency representation plus periodogram in one call"""
    levels1 = sorted_levels(levels1)
    levels2 = sorted_levels(levels2) if levels2 is not None else levels1
    all_levels = sorted_levels(levels1 + levels2)
    if type == CLIPPED:
        fr = clipped_ft(Y, all_levels, rank_based=rank_based, boot=boot, direct_limit=direct_limit)
    elif type == QREG:
        fr = qreg_estimator(
            Y, all_levels, rank_based=rank_based, boot=boot, threads=threads, tol=tol, max_iter=max_iter
        )
    else:
        raise ValueError(f"Unknown periodogram type: {type} (use '{CLIPPED}' or '{QREG}')")
    return quantile_pg(fr, levels1, levels2)
