"""Counter-based random streams keyed on (seed, pair index, draw slot).

Every random quantity a pair needs is drawn from its own Philox4x32-10 block,
addressed by the pair's global index and a fixed slot number. A pair's
randomness therefore does not depend on how the pairs are chunked or which
worker processes them.
"""
from __future__ import annotations

from enum import IntEnum

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_ROUNDS = 10
_TWO_M53 = 2.0**-53


class Slot(IntEnum):
    """Fixed draw slots. Renumbering these changes every simulated result."""

    EMIT = 0
    DT = 1
    NU_A = 2
    NU_CORR = 3
    BASIS_A = 4
    BASIS_B = 5
    DETECT_A = 6
    DETECT_B = 7
    JITTER_A = 8
    JITTER_B = 9
    EVE_INTERCEPT = 10
    EVE_BASIS = 11
    EVE_MEASURE = 12
    EVE_CONJ = 13


def philox4x32(counter, key, rounds: int = _ROUNDS):
    """Philox4x32 block function on uint64 arrays holding 32-bit words.

    Args:
        counter: sequence of four arrays (or ints), each < 2**32.
        key: pair of ints < 2**32.

    Returns:
        Tuple of four uint64 arrays, each holding a 32-bit output word.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
    k0, k1 = int(key[0]), int(key[1])
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = c0 * _M0
        p1 = c2 * _M1
        hi0, lo0 = p0 >> np.uint64(32), p0 & _MASK32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _MASK32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
    return c0, c1, c2, c3


class PairStreams:
    """Random draws for a block of pairs identified by their global indices.

    ``PairStreams(seed, np.arange(start, stop))`` yields exactly the same
    values for pair ``i`` as any other block containing ``i``.
    """

    def __init__(self, seed: int, index):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.index = np.atleast_1d(np.asarray(index, dtype=np.uint64))
        self._key = (seed & 0xFFFFFFFF, seed >> 32)

    @classmethod
    def for_range(cls, seed: int, start: int, stop: int) -> "PairStreams":
        return cls(seed, np.arange(start, stop, dtype=np.uint64))

    def __len__(self) -> int:
        return self.index.size

    def _doubles(self, slot: int) -> tuple[np.ndarray, np.ndarray]:
        lo = self.index & _MASK32
        hi = self.index >> np.uint64(32)
        zero = np.zeros_like(lo)
        x0, x1, x2, x3 = philox4x32((lo, hi, zero + np.uint64(int(slot)), zero), self._key)
        a = ((x0 << np.uint64(32)) | x1) >> np.uint64(11)
        b = ((x2 << np.uint64(32)) | x3) >> np.uint64(11)
        # open interval (0, 1): safe for log()
        return (a.astype(np.float64) + 0.5) * _TWO_M53, (b.astype(np.float64) + 0.5) * _TWO_M53

    def uniform(self, slot: int) -> np.ndarray:
        """One uniform draw in (0, 1) per pair."""
        return self._doubles(slot)[0]

    def normal(self, slot: int) -> np.ndarray:
        """One standard normal draw per pair (Box-Muller, cosine branch)."""
        u1, u2 = self._doubles(slot)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
