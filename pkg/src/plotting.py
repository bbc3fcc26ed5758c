"""K x K panel figures of quantile spectral quantities"""

from pathlib import Path
from typing import List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from src.documents import ResultDocument
from src.models import CUMULATIVE, level_positions, resolve_frequencies


COLORS = {
    'estimate': '#2E86AB',      # Deep blue
    'band': '#2E86AB',
    'overlay': '#A23B72',       # Magenta
    'background': '#FAFAFA',
    'grid': '#E0E0E0',
    'text': '#2D3436',
}

SCALINGS = ("individual", "real-imaginary")

plt.rcParams['font.family'] = 'sans-serif'
plt.rcParams['font.sans-serif'] = ['DejaVu Sans']
plt.rcParams['font.size'] = 9
plt.rcParams['axes.titlesize'] = 10
plt.rcParams['figure.titlesize'] = 12
# Fixed ids and no timestamp keep SVG output byte-identical across runs
plt.rcParams['svg.hashsalt'] = 'qspec'
plt.rcParams['svg.fonttype'] = 'path'


def _frequency_mask(frequencies: np.ndarray, freq_min: float, freq_max: float) -> np.ndarray:
    tol = 1e-12 * max(1.0, abs(freq_max))
    return (frequencies >= freq_min - tol) & (frequencies <= freq_max + tol)


def unfolded_frequencies(doc: ResultDocument, freq_min: float, freq_max: float) -> np.ndarray:
    """
    Fourier frequencies of doc inside [freq_min, freq_max].

    Hermitian documents reach any 2*pi*s/n whose folded index is stored, so the
    range may extend below 0 or past pi; cumulative documents keep their own grid.
    """
    if doc.frequency_kind == CUMULATIVE:
        frequencies = doc.frequencies
        return frequencies[_frequency_mask(frequencies, freq_min, freq_max)]
    n = doc.n
    lo = int(np.ceil(freq_min * n / (2 * np.pi) - 1e-9))
    hi = int(np.floor(freq_max * n / (2 * np.pi) + 1e-9))
    s = np.arange(lo, hi + 1)
    folded = np.mod(s, n)
    folded = np.minimum(folded, n - folded)
    s = s[np.isin(folded, np.asarray(doc.grid))]
    return 2 * np.pi * s / n


def _unfold(doc: ResultDocument, frequencies: np.ndarray):
    """b = 0 values and band limits of doc at frequencies, conjugating mirrored ones"""
    positions, conjugate = resolve_frequencies(doc.n, np.asarray(doc.grid), doc.frequency_kind, frequencies)
    values = doc.values[positions][..., 0]
    values = np.where(conjugate[:, None, None], np.conj(values), values)
    band = doc.confidence_band()
    if band is None:
        return values, None
    flip = conjugate[:, None, None]
    lower_im, upper_im = band.lower_im[positions], band.upper_im[positions]
    limits = {
        "Re": (band.lower_re[positions], band.upper_re[positions]),
        "Im": (np.where(flip, -upper_im, lower_im), np.where(flip, -lower_im, upper_im)),
    }
    return values, limits


def _style_axis(ax) -> None:
    ax.set_facecolor(COLORS['background'])
    ax.grid(linestyle='--', alpha=0.7, color=COLORS['grid'])
    ax.set_axisbelow(True)
    ax.spines['top'].set_visible(False)
    ax.spines['right'].set_visible(False)
    ax.spines['left'].set_color(COLORS['grid'])
    ax.spines['bottom'].set_color(COLORS['grid'])


def panel_parts(K1: int, K2: int) -> List[List[str]]:
    """'Re' on and below the diagonal, 'Im' above it"""
    return [["Re" if r >= c else "Im" for c in range(K2)] for r in range(K1)]


def panel_figure(
    doc: ResultDocument,
    levels: Optional[Sequence[float]] = None,
    freq_min: Optional[float] = None,
    freq_max: Optional[float] = None,
    overlay: Optional[ResultDocument] = None,
    scaling: str = "individual",
    ribbon_alpha: float = 0.3,
):
    """
    K1 x K2 panel figure of the b = 0 values of doc.

    Panel (r, c) shows Re Q(omega, level1_r, level2_c) for r >= c and Im for r < c.
    CI ribbons are drawn when doc carries a band; overlay adds a model quantity.
    Hermitian documents are unfolded over the whole range, e.g. [0, 4*pi] for
    a frequency representation.
    """
    if scaling not in SCALINGS:
        raise ValueError(f"Unknown scaling: {scaling} (use one of {', '.join(SCALINGS)})")
    k1 = level_positions(doc.levels1, levels)
    k2 = level_positions(doc.levels2, levels)

    upper_default = 2 * np.pi if doc.frequency_kind == CUMULATIVE else np.pi
    freq_min = 0.0 if freq_min is None else float(freq_min)
    freq_max = upper_default if freq_max is None else float(freq_max)
    if freq_max <= freq_min:
        raise ValueError(f"Empty frequency range [{freq_min}, {freq_max}]")

    x = unfolded_frequencies(doc, freq_min, freq_max)
    estimate, limits = _unfold(doc, x)
    band = doc.confidence_band()

    overlay_x = overlay_values = overlay_k1 = overlay_k2 = None
    if overlay is not None:
        overlay_x = unfolded_frequencies(overlay, freq_min, freq_max)
        overlay_values, _ = _unfold(overlay, overlay_x)
        overlay_k1 = level_positions(overlay.levels1, [doc.levels1[k] for k in k1])
        overlay_k2 = level_positions(overlay.levels2, [doc.levels2[k] for k in k2])

    K1, K2 = len(k1), len(k2)
    parts = panel_parts(K1, K2)
    fig, axes = plt.subplots(K1, K2, figsize=(3.2 * K2, 2.4 * K1), squeeze=False)
    fig.patch.set_facecolor(COLORS['background'])

    for r in range(K1):
        for c in range(K2):
            ax = axes[r][c]
            _style_axis(ax)
            part = np.real if parts[r][c] == "Re" else np.imag
            ax.plot(x, part(estimate[:, k1[r], k2[c]]), color=COLORS['estimate'], linewidth=1.2)

            if limits is not None:
                lower, upper = limits[parts[r][c]]
                ax.fill_between(
                    x, lower[:, k1[r], k2[c]], upper[:, k1[r], k2[c]],
                    color=COLORS['band'], alpha=ribbon_alpha, linewidth=0
                )

            if overlay is not None:
                ax.plot(
                    overlay_x, part(overlay_values[:, overlay_k1[r], overlay_k2[c]]),
                    color=COLORS['overlay'], linewidth=1.0, linestyle='--'
                )

            ax.set_xlim(freq_min, freq_max)
            ax.set_title(parts[r][c], color=COLORS['text'])
            if c == 0:
                ax.set_ylabel(f"tau1 = {doc.levels1[k1[r]]:g}", color=COLORS['text'])
            if r == K1 - 1:
                ax.set_xlabel(f"omega  (tau2 = {doc.levels2[k2[c]]:g})", color=COLORS['text'])

    if scaling == "real-imaginary":
        for name in ("Re", "Im"):
            group = [axes[r][c] for r in range(K1) for c in range(K2) if parts[r][c] == name]
            if not group:
                continue
            low = min(ax.get_ylim()[0] for ax in group)
            high = max(ax.get_ylim()[1] for ax in group)
            for ax in group:
                ax.set_ylim(low, high)

    title = doc.kind
    if band is not None:
        title += f" with {100 * (1 - band.alpha):g}% {band.method} bands"
    fig.suptitle(title, fontweight='bold', color=COLORS['text'])
    fig.tight_layout()
    return fig


def plot_document(doc: ResultDocument, out: Union[str, Path], **options) -> Path:
    """Write panel_figure(doc, **options) as a deterministic SVG"""
    fig = panel_figure(doc, **options)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format='svg', facecolor=COLORS['background'], metadata={'Date': None})
    plt.close(fig)
    return out
