"""
Sobol low-discrepancy points

Gray-code Sobol construction with 32-bit direction integers read from
sobol_directions.txt. Point n (n >= 1) is the XOR of the direction integers
selected by the bits of gray(n) = n ^ (n >> 1), scaled by 2^-32.
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import List, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DIRECTIONS_FILE = Path(__file__).with_name('sobol_directions.txt')
BITS = 32
MAX_DIMENSION = 32


@lru_cache(maxsize=1)
def _direction_table() -> List[Tuple[int, int, List[int]]]:
    rows = []
    with open(DIRECTIONS_FILE, encoding='utf-8') as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            fields = [int(v) for v in line.split()]
            degree, coefficients, initial = fields[1], fields[2], fields[3:]
            if len(initial) != degree:
                raise ValueError(f"Malformed direction-number row for dimension {fields[0]}")
            rows.append((degree, coefficients, initial))
    return rows


def supported_dimensions() -> int:
    return min(MAX_DIMENSION, len(_direction_table()) + 1)


@lru_cache(maxsize=None)
def direction_integers(dim: int) -> np.ndarray:
    """Direction integers v_{j,k} as a (dim, BITS) uint64 array; column k is bit k+1."""
    if not 1 <= dim <= supported_dimensions():
        raise ValueError(f"Sobol dimension must be in [1, {supported_dimensions()}], got {dim}")
    table = _direction_table()
    directions = np.zeros((dim, BITS), dtype=np.uint64)
    for j in range(dim):
        if j == 0:
            m = [1] * BITS
        else:
            degree, a, initial = table[j - 1]
            m = list(initial)
            for i in range(degree, BITS):
                value = m[i - degree] ^ (m[i - degree] << degree)
                for k in range(1, degree):
                    if (a >> (degree - 1 - k)) & 1:
                        value ^= m[i - k] << k
                m.append(value)
        for k in range(BITS):
            directions[j, k] = np.uint64(m[k] << (BITS - 1 - k))
    return directions


def sobol_points(dim: int, count: int, skip: int = 0) -> np.ndarray:
    """
    Points skip+1, ..., skip+count of the dim-dimensional Sobol sequence.

    The all-zero point (index 0) is never returned. Output shape (count, dim),
    every coordinate in [0, 1).
    """
    if count < 0 or skip < 0:
        raise ValueError(f"count and skip must be nonnegative, got count={count}, skip={skip}")
    if skip + count >= 2 ** BITS:
        raise ValueError(f"Sobol index {skip + count} exceeds the 2^{BITS} supported points")
    directions = direction_integers(dim)
    if count == 0:
        return np.zeros((0, dim))

    index = np.arange(skip + 1, skip + count + 1, dtype=np.uint64)
    gray = index ^ (index >> np.uint64(1))
    state = np.zeros((count, dim), dtype=np.uint64)
    for bit in range(BITS):
        selected = ((gray >> np.uint64(bit)) & np.uint64(1)).astype(bool)
        if selected.any():
            state[selected] ^= directions[:, bit]
    return state.astype(np.float64) / float(2 ** BITS)
