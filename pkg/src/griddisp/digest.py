"""64-bit FNV-1a over byte buffers."""

import numpy as np
from numba import njit

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


@njit(cache=True)
def _fnv1a(buf, h):
    prime = np.uint64(FNV_PRIME)
    for b in buf:
        h = (h ^ np.uint64(b)) * prime
    return h


def fnv1a64(data: bytes, h: int = FNV_OFFSET) -> int:
    buf = np.frombuffer(data, dtype=np.uint8)
    return int(_fnv1a(buf, np.uint64(h)))


def fnv1a64_reference(data: bytes) -> int:
    # plain python version, used as the oracle in tests
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h
