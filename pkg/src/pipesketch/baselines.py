"""Sampling and sketching baselines the staged tables are compared against.

SampleAndHold admits each unheld flow with a per-packet coin flip and then
counts every later packet of admitted flows exactly.  CmsWithCache keeps a
count-min sketch plus a hashed cache of flows whose estimate crossed a
threshold; cached flows are counted exactly and bypass the sketch.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import get_backend
from .errors import ConfigError
from .flows import Granularity, KeySpace, TopKReport, rank_entries
from .hashing import HashFamily, PositionTable

COUNTER_BYTES = 4


class SampleAndHold:
    """Hold table keyed by flow, filled by sampling.

    The sampling probability defaults to capacity / expected_packets times
    an oversampling factor, i.e. one expected admission per slot.  Packets
    with weight w are admitted with probability 1 - (1-p)^w.  A flow's
    count starts at the admitting packet, so held counts never overestimate.
    """

    def __init__(self, capacity: int, *, sampling_prob: float | None = None,
                 expected_packets: int | None = None, oversampling: float = 1.0,
                 granularity: Granularity = Granularity.FIVE_TUPLE,
                 keyspace: KeySpace | None = None, seed: int = 0,
                 backend: str | None = None):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        if sampling_prob is None:
            if not expected_packets or expected_packets < 1:
                raise ConfigError("give sampling_prob or expected_packets")
            sampling_prob = min(1.0, oversampling * capacity / expected_packets)
        if not 0.0 < sampling_prob <= 1.0:
            raise ConfigError(f"sampling_prob must be in (0, 1], got {sampling_prob}")
        self.capacity = int(capacity)
        self.sampling_prob = float(sampling_prob)
        self.granularity = granularity
        self.keyspace = keyspace if keyspace is not None else KeySpace()
        self.held_key = np.full(self.capacity, -1, dtype=np.int64)
        self.held_val = np.zeros(self.capacity, dtype=np.int64)
        self.n_held = 0
        self.dropped_full = 0
        self.total_weight = 0
        # tagged stream: stays independent of a trace generator fed the
        # same seed
        self._rng = np.random.default_rng([seed, 0x5348])
        self._kern = get_backend(backend)

    @property
    def memory_bytes(self) -> int:
        return self.capacity * self.granularity.slot_bytes

    def update(self, key: bytes, weight: int = 1) -> None:
        kid = self.keyspace.intern(key)
        self.update_ids(np.array([kid], dtype=np.int64),
                        np.array([weight], dtype=np.int64))

    def consume(self, trace) -> None:
        if trace.keyspace is not self.keyspace:
            raise ConfigError("trace was encoded over a different key space")
        self.update_ids(trace.kids, trace.weights)

    def update_ids(self, kids: np.ndarray, weights: np.ndarray) -> None:
        # one uniform per packet, drawn up front: the stream consumed is a
        # function of packet count alone, so batch splits cannot change it
        uniforms = self._rng.random(len(kids))
        self.n_held, dropped = self._kern.sh_run(
            self.held_key, self.held_val, self.n_held, kids, weights,
            uniforms, self.sampling_prob)
        self.dropped_full += int(dropped)
        self.total_weight += int(weights.sum())

    def estimate(self, key: bytes) -> int:
        kid = self.keyspace.id_of(key)
        if kid is None:
            return 0
        hits = np.flatnonzero(self.held_key[: self.n_held] == kid)
        return int(self.held_val[hits[0]]) if len(hits) else 0

    def entries(self) -> list[tuple[bytes, int]]:
        keys = self.keyspace.keys
        return [(keys[int(self.held_key[i])], int(self.held_val[i]))
                for i in range(self.n_held)]

    def report(self, k: int, overreport_factor: float = 1.0) -> TopKReport:
        if k < 1 or overreport_factor < 1.0:
            raise ConfigError("k must be >= 1 and overreport_factor >= 1")
        requested = math.ceil(k * overreport_factor)
        items = self.entries()
        return TopKReport(
            entries=rank_entries(items, requested),
            requested=requested,
            clamped=requested > len(items),
            metadata={"scheme": "sample_and_hold", "capacity": self.capacity,
                      "sampling_prob": self.sampling_prob},
        )

    def reset(self) -> None:
        self.held_key.fill(-1)
        self.held_val.fill(0)
        self.n_held = 0
        self.dropped_full = 0
        self.total_weight = 0


class CmsWithCache:
    """Count-min sketch fronted by a hashed heavy-flow cache.

    Uncached packets update all sketch rows; when the min-row estimate
    reaches the threshold the flow tries its single cache slot, losing to
    any existing occupant.  The cache stores the sketch estimate at
    admission plus an exact count of later packets, and reports their sum.
    Halving the byte budget between sketch and cache is done by from_bytes.
    """

    def __init__(self, width: int, cache_slots: int, threshold: int, *,
                 depth: int = 4, granularity: Granularity = Granularity.FIVE_TUPLE,
                 keyspace: KeySpace | None = None, seed: int = 0,
                 backend: str | None = None):
        if width < 1 or depth < 1 or cache_slots < 1:
            raise ConfigError("width, depth, and cache_slots must be >= 1")
        if threshold < 1:
            raise ConfigError(f"threshold must be >= 1, got {threshold}")
        self.width = int(width)
        self.depth = int(depth)
        self.cache_slots = int(cache_slots)
        self.threshold = int(threshold)
        self.granularity = granularity
        self.keyspace = keyspace if keyspace is not None else KeySpace()
        self._row_family = HashFamily.from_seed(seed, (self.width,) * self.depth)
        self._cache_family = HashFamily.from_seed(seed + 1, (self.cache_slots,))
        self._row_pos = PositionTable(self._row_family, self.keyspace)
        self._cache_pos = PositionTable(self._cache_family, self.keyspace)
        self.rows = np.zeros((self.depth, self.width), dtype=np.int64)
        self.cache_key = np.full(self.cache_slots, -1, dtype=np.int64)
        self.cache_seed = np.zeros(self.cache_slots, dtype=np.int64)
        self.cache_exact = np.zeros(self.cache_slots, dtype=np.int64)
        self.admitted = 0
        self.collisions = 0
        self.total_weight = 0
        self._kern = get_backend(backend)

    @classmethod
    def from_bytes(cls, total_bytes: int, threshold: int, *, depth: int = 4,
                   granularity: Granularity = Granularity.FIVE_TUPLE,
                   **kwargs) -> "CmsWithCache":
        """Split a byte budget half to the sketch, half to the cache."""
        sketch_bytes = total_bytes // 2
        width = sketch_bytes // (depth * COUNTER_BYTES)
        cache_slots = (total_bytes - sketch_bytes) // granularity.slot_bytes
        if width < 1 or cache_slots < 1:
            raise ConfigError(f"{total_bytes} bytes is too small to split")
        return cls(width, cache_slots, threshold, depth=depth,
                   granularity=granularity, **kwargs)

    @property
    def memory_bytes(self) -> int:
        return (self.depth * self.width * COUNTER_BYTES
                + self.cache_slots * self.granularity.slot_bytes)

    def update(self, key: bytes, weight: int = 1) -> None:
        kid = self.keyspace.intern(key)
        self.update_ids(np.array([kid], dtype=np.int64),
                        np.array([weight], dtype=np.int64))

    def consume(self, trace) -> None:
        if trace.keyspace is not self.keyspace:
            raise ConfigError("trace was encoded over a different key space")
        self.update_ids(trace.kids, trace.weights)

    def update_ids(self, kids: np.ndarray, weights: np.ndarray) -> None:
        admitted, collisions = self._kern.cms_run(
            self.rows, self.cache_key, self.cache_seed, self.cache_exact,
            self._row_pos.array(), self._cache_pos.array()[0], kids, weights,
            self.threshold)
        self.admitted += int(admitted)
        self.collisions += int(collisions)
        self.total_weight += int(weights.sum())

    def sketch_estimate(self, key: bytes) -> int:
        """Min-row estimate, ignoring the cache."""
        kid = self.keyspace.intern(key)
        pos = self._row_pos.array()
        return int(min(self.rows[j, pos[j, kid]] for j in range(self.depth)))

    def estimate(self, key: bytes) -> int:
        kid = self.keyspace.intern(key)
        cpos = self._cache_pos.array()[0][kid]
        if self.cache_key[cpos] == kid:
            return int(self.cache_seed[cpos] + self.cache_exact[cpos])
        return self.sketch_estimate(key)

    def entries(self) -> list[tuple[bytes, int]]:
        keys = self.keyspace.keys
        return [(keys[int(k)], int(s + e))
                for k, s, e in zip(self.cache_key, self.cache_seed, self.cache_exact)
                if k >= 0]

    def report(self, k: int, overreport_factor: float = 1.0) -> TopKReport:
        if k < 1 or overreport_factor < 1.0:
            raise ConfigError("k must be >= 1 and overreport_factor >= 1")
        requested = math.ceil(k * overreport_factor)
        items = self.entries()
        return TopKReport(
            entries=rank_entries(items, requested),
            requested=requested,
            clamped=requested > len(items),
            metadata={"scheme": "cms_cache", "width": self.width,
                      "depth": self.depth, "cache_slots": self.cache_slots,
                      "threshold": self.threshold},
        )

    def reset(self) -> None:
        self.rows.fill(0)
        self.cache_key.fill(-1)
        self.cache_seed.fill(0)
        self.cache_exact.fill(0)
        self.admitted = 0
        self.collisions = 0
        self.total_weight = 0
