"""Per-stage hash family shared by all table-based sketches.

Stage i maps a key to ((a_i * x + b_i) mod p) mod size_i, where p is the
Mersenne prime 2^61 - 1 and x is the key folded to 64 bits.  The a_i are
drawn odd and pairwise coprime so the stages hash independently.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

MERSENNE61 = (1 << 61) - 1


def fold_key(key: bytes) -> int:
    """Fold key bytes to a 64-bit unsigned int: XOR of little-endian 8-byte
    chunks (last chunk may be short)."""
    x = 0
    for i in range(0, len(key), 8):
        x ^= int.from_bytes(key[i : i + 8], "little")
    return x


@dataclass(frozen=True)
class HashFamily:
    """d per-stage hash functions over fixed table sizes.

    Immutable after construction; reproducible from a master seed.
    """

    params: tuple[tuple[int, int], ...]  # (a_i, b_i) per stage
    sizes: tuple[int, ...]
    prime: int = MERSENNE61

    def __post_init__(self):
        if len(self.params) != len(self.sizes):
            raise ValueError("one (a, b) pair per stage required")
        for a, b in self.params:
            if not 1 <= a < self.prime or not 0 <= b < self.prime:
                raise ValueError("hash parameters out of range")

    @classmethod
    def from_seed(cls, seed: int, sizes) -> "HashFamily":
        """Draw odd multipliers, rejecting any pair with gcd > 1."""
        rng = random.Random(seed)
        a_list: list[int] = []
        b_list: list[int] = []
        while len(a_list) < len(sizes):
            a = rng.randrange(1, MERSENNE61) | 1
            if all(math.gcd(a, prev) == 1 for prev in a_list):
                a_list.append(a)
                b_list.append(rng.randrange(0, MERSENNE61))
        return cls(
            params=tuple(zip(a_list, b_list)),
            sizes=tuple(int(s) for s in sizes),
        )

    @property
    def d(self) -> int:
        return len(self.params)

    def slot(self, stage: int, x: int) -> int:
        """Slot index for a pre-folded 64-bit key value."""
        if not 0 <= stage < self.d:
            raise IndexError(f"stage {stage} out of range (d={self.d})")
        a, b = self.params[stage]
        return ((a * x + b) % self.prime) % self.sizes[stage]

    def hash_key(self, stage: int, key: bytes) -> int:
        return self.slot(stage, fold_key(key))

    def index_table(self, folds) -> np.ndarray:
        """(d, n) matrix of slot indices for a vector of folded keys."""
        out = np.empty((self.d, len(folds)), dtype=np.int64)
        p = self.prime
        for stage, (a, b) in enumerate(self.params):
            size = self.sizes[stage]
            out[stage] = [((a * int(x) + b) % p) % size for x in folds]
        return out


class PositionTable:
    """Cached slot positions for every key a KeySpace has interned.

    Column j holds key id j's slot at each stage.  Per-stage offsets, when
    given, shift stage-local indices into one flat array laid out stage
    after stage.  The table extends lazily as the key space grows, so the
    modular arithmetic runs once per key rather than once per packet.
    """

    def __init__(self, family: HashFamily, keyspace, offsets=None):
        if offsets is not None and len(offsets) != family.d:
            raise ValueError("one offset per stage required")
        self.family = family
        self.keyspace = keyspace
        self._offsets = (
            None if offsets is None
            else np.asarray(offsets, dtype=np.int64).reshape(-1, 1)
        )
        self._pos = np.empty((family.d, 0), dtype=np.int64)
        self._count = 0

    def array(self) -> np.ndarray:
        """(d, len(keyspace)) positions, extending for newly interned keys."""
        n = len(self.keyspace)
        if n > self._count:
            fresh = self.family.index_table(self.keyspace.folds()[self._count : n])
            if self._offsets is not None:
                fresh += self._offsets
            self._pos = np.concatenate([self._pos, fresh], axis=1)
            self._count = n
        return self._pos
