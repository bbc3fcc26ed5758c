"""Simulation-based model spectra: time-series models, QuantileSD accumulation and state files"""

import hashlib
import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import ndtri

from src.freqrep import check_levels, clipped_ft
from src.models import (
    CUMULATIVE,
    HERMITIAN,
    LevelGrid,
    QSpecError,
    QSpecQuantity,
    TimeSeries,
    full_circle,
)
from src.periodogram import quantile_pg
from src.rng import substream


logger = logging.getLogger(__name__)

COPULA = "copula"
LAPLACE = "laplace"

QAR1_SCALE = 1.9
QAR1_BURN_IN = 1000
SMOOTHING_EXPONENT = 0.3

STATE_MAGIC = b"QSPECSD\x00"
STATE_VERSION = 1


class CorruptState(QSpecError, ValueError):
    """Raised when a state file or state object is inconsistent"""
    pass


class StateMismatch(QSpecError, ValueError):
    """Raised when a state does not match the requested parameters"""
    pass


class UnknownModel(QSpecError, ValueError):
    """Raised for a model name outside the registry"""
    pass


# ============================================================
# Models
# ============================================================

def _uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform draws in the open interval (0, 1)"""
    u = rng.random(size)
    return np.where(u > 0.0, u, np.finfo(np.float64).tiny)


def qar1_generate(
    N: int,
    rng: np.random.Generator,
    scale: float = QAR1_SCALE,
    burn_in: int = QAR1_BURN_IN,
) -> TimeSeries:
    """X_t = scale (U_t - 0.5) X_{t-1} + Phi^-1(U_t), started at 0 after burn_in steps"""
    u = _uniforms(rng, N + burn_in)
    theta0 = ndtri(u)
    theta1 = scale * (u - 0.5)
    x = np.empty(N + burn_in)
    previous = 0.0
    for t in range(N + burn_in):
        previous = theta1[t] * previous + theta0[t]
        x[t] = previous
    return TimeSeries(x[burn_in:])


def iid_gaussian_generate(N: int, rng: np.random.Generator) -> TimeSeries:
    return TimeSeries(ndtri(_uniforms(rng, N)))


@dataclass(frozen=True)
class ModelSpec:
    """Named time-series model; generate(N, rng) is deterministic given the stream"""
    name: str
    params: Dict[str, float]
    generator: Callable[..., TimeSeries] = field(repr=False, compare=False)

    def generate(self, N: int, rng: np.random.Generator) -> TimeSeries:
        return self.generator(N, rng, **self.params)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


MODELS: Dict[str, Tuple[Callable[..., TimeSeries], Dict[str, float]]] = {
    "qar1": (qar1_generate, {"scale": QAR1_SCALE, "burn_in": QAR1_BURN_IN}),
    "iid-gaussian": (iid_gaussian_generate, {}),
}


def get_model(name: str, params: Optional[Dict[str, float]] = None) -> ModelSpec:
    """Build a registered model, overriding default parameters"""
    if name not in MODELS:
        raise UnknownModel(f"Unknown model: {name} (known: {', '.join(sorted(MODELS))})")
    generator, defaults = MODELS[name]
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in defaults:
            raise UnknownModel(f"Model {name} has no parameter '{key}'")
        merged[key] = type(defaults[key])(value)
    return ModelSpec(name=name, params=merged, generator=generator)


# ============================================================
# QuantileSD state
# ============================================================

class QuantileSD(QSpecQuantity):
    """Model quantile spectral density approximated by simulation"""
    pass


class IntegrQuantileSD(QSpecQuantity):
    """Cumulated model quantile spectral density on [0, 2 pi]"""
    pass


@dataclass(frozen=True, eq=False)
class QuantileSDState:
    """
    Running mean and M2 of the periodogram of R simulated copies.

    M2 is complex componentwise: Re holds the sum of squared deviations of the real
    parts, Im that of the imaginary parts. Copies first_copy..first_copy+R-1 are
    included; values holds the frequency-smoothed mean.
    """
    model: str
    params: Dict[str, float]
    N: int
    levels: Tuple[float, ...]
    type: str
    seed: int
    R: int
    mean: np.ndarray
    m2: np.ndarray
    values: np.ndarray
    first_copy: int = 0

    @property
    def next_copy(self) -> int:
        return self.first_copy + self.R

    @property
    def std_error(self) -> Optional[np.ndarray]:
        """sqrt(M2 / (R (R-1))) per Re/Im part; None while R < 2"""
        if self.R < 2:
            return None
        denom = self.R * (self.R - 1)
        return np.sqrt(self.m2.real / denom) + 1j * np.sqrt(self.m2.imag / denom)

    def model_spec(self) -> ModelSpec:
        return get_model(self.model, self.params)

    def to_quantity(self) -> QuantileSD:
        return QuantileSD(
            n=self.N,
            grid=np.arange(self.N // 2 + 1),
            levels=LevelGrid.same(self.levels),
            values=self.values[..., None],
            frequency_kind=HERMITIAN,
        )

    def check(self) -> None:
        """Raise CorruptState unless all lattices match (N, levels)"""
        K = len(self.levels)
        shape = (self.N // 2 + 1, K, K)
        for name in ("mean", "m2", "values"):
            lattice = getattr(self, name)
            if lattice.shape != shape:
                raise CorruptState(f"State lattice '{name}' has shape {lattice.shape}, expected {shape}")
        if self.R < 1 or self.first_copy < 0:
            raise CorruptState(f"Invalid copy range: first_copy={self.first_copy}, R={self.R}")
        if self.type not in (COPULA, LAPLACE):
            raise CorruptState(f"Unknown spectrum type: {self.type}")

    def merge(self, other: "QuantileSDState") -> "QuantileSDState":
        """Combine with a state covering the copies directly after this one"""
        for name in ("model", "params", "N", "levels", "type", "seed"):
            if getattr(self, name) != getattr(other, name):
                raise StateMismatch(f"Cannot merge states with different {name}")
        if other.first_copy != self.next_copy:
            raise StateMismatch(
                f"States are not adjacent: copies end at {self.next_copy}, other starts at {other.first_copy}"
            )
        total = self.R + other.R
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.R / total)
        correction = (delta.real ** 2 + 1j * delta.imag ** 2) * (self.R * other.R / total)
        m2 = self.m2 + other.m2 + correction
        return replace(self, R=total, mean=mean, m2=m2, values=smooth_mean(mean, self.N))


def smoothing_halfwidth(N: int) -> int:
    return max(1, int(round(N ** SMOOTHING_EXPONENT)))


def smooth_mean(mean: np.ndarray, N: int) -> np.ndarray:
    """
    Centered moving average over 2m+1 Fourier frequencies on the circle.

    Index 0 never contributes; neighbours beyond pi come from conjugate symmetry.
    """
    m = smoothing_halfwidth(N)
    circle = full_circle(mean, N)
    targets = np.arange(N // 2 + 1)
    total = np.zeros_like(mean)
    count = np.zeros(len(targets))
    for d in range(-m, m + 1):
        source = (targets + d) % N
        keep = source != 0
        total[keep] += circle[source[keep]]
        count[keep] += 1
    return total / count[:, None, None]


def _copy_periodogram(model: ModelSpec, N: int, levels: Tuple[float, ...], kind: str, seed: int, r: int) -> np.ndarray:
    Y = model.generate(N, substream(seed, "copy", r))
    fr = clipped_ft(Y, levels, rank_based=(kind == COPULA))
    return quantile_pg(fr).values[..., 0]


def _accumulate(
    model: ModelSpec,
    N: int,
    levels: Tuple[float, ...],
    kind: str,
    seed: int,
    start: int,
    count: int,
    mean: np.ndarray,
    m2: np.ndarray,
    R: int,
    threads: int = 1,
    quiet: bool = False,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Welford updates for copies start..start+count-1 in ascending order"""
    mean = mean.copy()
    m2 = m2.copy()
    batch = max(1, threads * 8)
    report_every = max(1, count // 10)
    done = 0

    def compute(r: int) -> np.ndarray:
        return _copy_periodogram(model, N, levels, kind, seed, r)

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for first in range(start, start + count, batch):
            indices = range(first, min(first + batch, start + count))
            periodograms = list(pool.map(compute, indices)) if pool else [compute(r) for r in indices]
            for pg in periodograms:
                R += 1
                delta = pg - mean
                mean += delta / R
                delta2 = pg - mean
                m2 += delta.real * delta2.real + 1j * (delta.imag * delta2.imag)
                done += 1
                if not quiet and (done % report_every == 0 or done == count):
                    print(f"  Copies: {done}/{count} (R={R})")
    finally:
        if pool is not None:
            pool.shutdown()
    return mean, m2, R


def quantile_sd(
    model: ModelSpec,
    N: int,
    levels: Sequence[float],
    R: int,
    seed: int = 2581,
    type: str = COPULA,
    threads: int = 1,
    quiet: bool = True,
    first_copy: int = 0,
) -> QuantileSDState:
    """Mean periodogram of R simulated copies, smoothed across frequencies"""
    if R < 1:
        raise ValueError(f"Need at least one copy, got R={R}")
    if N < 8:
        raise ValueError(f"Series length must be at least 8, got N={N}")
    if type not in (COPULA, LAPLACE):
        raise ValueError(f"Unknown spectrum type: {type} (use '{COPULA}' or '{LAPLACE}')")
    levels = check_levels(levels, "(0,1)" if type == COPULA else None)

    if not quiet:
        print(f"\n{'=' * 50}")
        print(f"QuantileSD: {model.name}, N={N}, R={R}, type={type}")
        print(f"{'=' * 50}")

    K = len(levels)
    zeros = np.zeros((N // 2 + 1, K, K), dtype=np.complex128)
    mean, m2, count = _accumulate(model, N, levels, type, seed, first_copy, R, zeros, zeros, 0, threads, quiet)
    state = QuantileSDState(
        model=model.name,
        params=dict(model.params),
        N=N,
        levels=levels,
        type=type,
        seed=int(seed),
        R=count,
        mean=mean,
        m2=m2,
        values=smooth_mean(mean, N),
        first_copy=first_copy,
    )
    logger.info("quantile_sd: %s N=%d R=%d done", model.name, N, count)
    return state


def increase_precision(
    state: QuantileSDState,
    delta_R: int,
    threads: int = 1,
    quiet: bool = True,
) -> QuantileSDState:
    """Continue the copy sequence; equals a fresh run with R + delta_R copies"""
    state.check()
    if delta_R < 0:
        raise ValueError(f"delta_R must be non-negative, got {delta_R}")
    if delta_R == 0:
        return state

    model = state.model_spec()
    logger.info("Resuming %s at copy %d (+%d)", state.model, state.next_copy, delta_R)
    if not quiet:
        print(f"\nIncreasing precision: R={state.R} -> {state.R + delta_R}")
    mean, m2, count = _accumulate(
        model, state.N, state.levels, state.type, state.seed,
        state.next_copy, delta_R, state.mean, state.m2, state.R, threads, quiet
    )
    return replace(state, R=count, mean=mean, m2=m2, values=smooth_mean(mean, state.N))


def integr_quantile_sd(state: QuantileSDState) -> IntegrQuantileSD:
    """F(omega_j) = (2 pi / N) sum_{s=1}^{j} f(2 pi s / N) for j = 0..N"""
    N = state.N
    circle = full_circle(state.values, N)
    terms = circle[np.arange(1, N + 1) % N]
    partial = (2 * np.pi / N) * np.cumsum(terms, axis=0)
    values = np.concatenate([np.zeros_like(partial[:1]), partial], axis=0)
    return IntegrQuantileSD(
        n=N,
        grid=np.arange(N + 1),
        levels=LevelGrid.same(state.levels),
        values=values[..., None],
        frequency_kind=CUMULATIVE,
    )


# ============================================================
# State files
# ============================================================

def _payload(state: QuantileSDState) -> bytes:
    return b"".join(
        np.ascontiguousarray(lattice, dtype="<c16").tobytes()
        for lattice in (state.mean, state.m2, state.values)
    )


def save_state(state: QuantileSDState, path: Union[str, Path]) -> None:
    """Magic, version, JSON header length, JSON header, little-endian complex lattices"""
    state.check()
    payload = _payload(state)
    header = {
        "model": state.model,
        "params": state.params,
        "N": state.N,
        "levels": list(state.levels),
        "type": state.type,
        "seed": state.seed,
        "R": state.R,
        "first_copy": state.first_copy,
        "next_copy": state.next_copy,
        "dtype": "<c16",
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(STATE_MAGIC)
        f.write(struct.pack("<II", STATE_VERSION, len(encoded)))
        f.write(encoded)
        f.write(payload)


def load_state(path: Union[str, Path]) -> QuantileSDState:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CorruptState(f"Cannot read state file {path}: {e}") from e

    prefix = len(STATE_MAGIC) + 8
    if len(data) < prefix or data[:len(STATE_MAGIC)] != STATE_MAGIC:
        raise CorruptState(f"{path} is not a QuantileSD state file")
    version, header_len = struct.unpack("<II", data[len(STATE_MAGIC):prefix])
    if version != STATE_VERSION:
        raise CorruptState(f"Unsupported state version {version} (expected {STATE_VERSION})")

    try:
        header = json.loads(data[prefix:prefix + header_len].decode("utf-8"))
        N = int(header["N"])
        levels = tuple(float(x) for x in header["levels"])
        expected_digest = header["sha256"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise CorruptState(f"Malformed state header: {e}") from e

    payload = data[prefix + header_len:]
    if hashlib.sha256(payload).hexdigest() != expected_digest:
        raise CorruptState("State payload digest does not match its header")

    shape = (N // 2 + 1, len(levels), len(levels))
    size = int(np.prod(shape)) * 16
    if len(payload) != 3 * size:
        raise CorruptState(f"State payload has {len(payload)} bytes, expected {3 * size}")
    lattices: List[np.ndarray] = [
        np.frombuffer(payload[i * size:(i + 1) * size], dtype="<c16").reshape(shape).astype(np.complex128)
        for i in range(3)
    ]

    try:
        state = QuantileSDState(
            model=header["model"],
            params=dict(header["params"]),
            N=N,
            levels=levels,
            type=header["type"],
            seed=int(header["seed"]),
            R=int(header["R"]),
            mean=lattices[0],
            m2=lattices[1],
            values=lattices[2],
            first_copy=int(header.get("first_copy", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptState(f"Malformed state header: {e}") from e
    state.check()
    if header.get("next_copy", state.next_copy) != state.next_copy:
        raise CorruptState("Recorded stream position disagrees with the copy count")
    return state
