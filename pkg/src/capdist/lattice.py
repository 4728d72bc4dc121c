"""Quantized probability simplices shared by the solver and the oracle."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def simplex_lattice(k: int, resolution: int) -> np.ndarray:
    """All pmfs of length k whose entries are multiples of 1/(resolution-1).

    Enumerated as compositions of resolution-1 among k coordinates, in
    lexicographic order of the composition vectors.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    denom = resolution - 1
    combos: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining: int, parts: int) -> None:
        if parts == 1:
            combos.append(prefix + (remaining,))
            return
        for first in range(remaining + 1):
            rec(prefix + (first,), remaining - first, parts - 1)

    rec((), denom, k)
    arr = np.array(combos, dtype=float) / denom
    arr.setflags(write=False)
    return arr


def lattice_size(k: int, resolution: int) -> int:
    return math.comb(resolution - 1 + k - 1, k - 1)
