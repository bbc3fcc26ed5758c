"""Counter-based, splittable random streams"""

import numpy as np


# Purposes keep bootstrap, simulation and study streams disjoint for one seed
PURPOSES = {
    "mbb": 1,
    "copy": 2,
    "study": 3,
}


def substream(seed: int, purpose: str, index: int) -> np.random.Generator:
    """
    Independent Philox generator for (seed, purpose, index).

    The stream depends only on these three values, never on how many other
    streams were drawn before, so replicates can run in any order or in parallel.
    """
    if purpose not in PURPOSES:
        raise ValueError(f"Unknown stream purpose: {purpose}")
    if seed < 0 or index < 0:
        raise ValueError("Seed and stream index must be non-negative")
    sequence = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(PURPOSES[purpose], int(index)))
    return np.random.Generator(np.random.Philox(sequence))
