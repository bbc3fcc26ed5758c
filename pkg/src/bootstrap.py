"""Moving-blocks bootstrap positions"""

from dataclasses import dataclass

import numpy as np

from src.models import QSpecError
from src.rng import substream


class InvalidBlockLength(QSpecError, ValueError):
    """Raised when the block length is not in 1..n"""
    pass


@dataclass(frozen=True)
class BootSpec:
    """Bootstrap configuration: B replicates of blocks of length l"""
    B: int
    l: int
    seed: int = 2581
    method: str = "mbb"

    def __post_init__(self):
        if self.method != "mbb":
            raise ValueError(f"Unsupported bootstrap method: {self.method}")
        if self.B < 1:
            raise ValueError(f"Need at least one replicate, got B={self.B}")
        if self.l < 1:
            raise InvalidBlockLength(f"Block length must be positive, got l={self.l}")

    def positions(self, n: int) -> np.ndarray:
        return mbb_positions(n, self.l, self.B, self.seed)

    def to_dict(self) -> dict:
        return {"method": self.method, "B": self.B, "l": self.l, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "BootSpec":
        return cls(
            B=int(data["B"]),
            l=int(data["l"]),
            seed=int(data.get("seed", 2581)),
            method=data.get("method", "mbb")
        )


def replicate_positions(n: int, l: int, seed: int, b: int) -> np.ndarray:
    """Positions of replicate b (1-based) drawn from its own substream"""
    rng = substream(seed, "mbb", b)
    num_blocks = -(-n // l)
    starts = rng.integers(0, n - l + 1, size=num_blocks, dtype=np.int64)
    indices = (starts[:, None] + np.arange(l)).reshape(-1)
    return indices[:n]


def mbb_positions(n: int, l: int, B: int, seed: int) -> np.ndarray:
    """
    Moving-blocks bootstrap positions, shape (B, n).

    Each replicate concatenates ceil(n/l) blocks of l consecutive indices whose
    starts are uniform on {0, ..., n-l}, keeping the first n indices.
    """
    if not 1 <= l <= n:
        raise InvalidBlockLength(f"Block length must satisfy 1 <= l <= n, got l={l}, n={n}")
    if B < 1:
        raise ValueError(f"Need at least one replicate, got B={B}")
    return np.stack([replicate_positions(n, l, seed, b) for b in range(1, B + 1)])
