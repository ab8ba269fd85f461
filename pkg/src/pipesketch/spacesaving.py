"""Space saving: one table of (key, count) pairs with min-replacement.

A hit increments its counter.  A miss takes the lowest-index empty slot
while any remain; once the table is full it replaces the slot with the
smallest count (ties: lowest index), inheriting that count.  Counters
therefore never underestimate, overestimate by at most the current table
minimum, and any flow above total/slots is guaranteed present.
"""

from __future__ import annotations

import math

import numpy as np

from . import _pure
from .backend import get_backend
from .errors import ConfigError, InstrumentationError
from .flows import Granularity, KeySpace, TopKReport, rank_entries


class SpaceSaving:
    def __init__(self, slots: int, *, granularity: Granularity = Granularity.FIVE_TUPLE,
                 keyspace: KeySpace | None = None, track_contributors: bool = False,
                 backend: str | None = None):
        if slots < 1:
            raise ConfigError(f"slots must be >= 1, got {slots}")
        self.slots = int(slots)
        self.granularity = granularity
        self.keyspace = keyspace if keyspace is not None else KeySpace()
        self.slot_key = np.full(self.slots, -1, dtype=np.int64)
        self.slot_val = np.zeros(self.slots, dtype=np.int64)
        self._contributors = [set() for _ in range(self.slots)] if track_contributors else None
        self._kern = get_backend(backend)
        self.total_weight = 0

    @property
    def memory_bytes(self) -> int:
        return self.slots * self.granularity.slot_bytes

    def update(self, key: bytes, weight: int = 1) -> None:
        kid = self.keyspace.intern(key)
        self.update_ids(np.array([kid], dtype=np.int64),
                        np.array([weight], dtype=np.int64))

    def consume(self, trace) -> None:
        """Process an EncodedTrace built over this sketch's key space."""
        if trace.keyspace is not self.keyspace:
            raise ConfigError("trace was encoded over a different key space")
        self.update_ids(trace.kids, trace.weights)

    def update_ids(self, kids: np.ndarray, weights: np.ndarray) -> None:
        if self._contributors is not None:
            # contributor sets exist only in the pure kernel
            _pure.ss_run(self.slot_key, self.slot_val, kids, weights,
                         len(self.keyspace), contributors=self._contributors)
        else:
            self._kern.ss_run(self.slot_key, self.slot_val, kids, weights,
                              len(self.keyspace))
        self.total_weight += int(weights.sum())

    def occupancy(self) -> int:
        return int(np.count_nonzero(self.slot_key >= 0))

    def current_min(self) -> int:
        """Smallest counter once the table is full; 0 before that (no slot
        has been replaced yet, so every counter is still exact)."""
        if self.occupancy() < self.slots:
            return 0
        return int(self.slot_val.min())

    def estimate(self, key: bytes) -> int:
        kid = self.keyspace.id_of(key)
        if kid is None:
            return 0
        hits = np.flatnonzero(self.slot_key == kid)
        return int(self.slot_val[hits[0]]) if len(hits) else 0

    def entries(self) -> list[tuple[bytes, int]]:
        keys = self.keyspace.keys
        return [(keys[int(k)], int(v))
                for k, v in zip(self.slot_key, self.slot_val) if k >= 0]

    def report(self, k: int, overreport_factor: float = 1.0) -> TopKReport:
        if k < 1 or overreport_factor < 1.0:
            raise ConfigError("k must be >= 1 and overreport_factor >= 1")
        requested = math.ceil(k * overreport_factor)
        items = self.entries()
        return TopKReport(
            entries=rank_entries(items, requested),
            requested=requested,
            clamped=requested > len(items),
            metadata={"scheme": "space_saving", "slots": self.slots},
        )

    def keys_per_counter(self) -> np.ndarray:
        """Distinct keys that ever incremented each occupied slot."""
        if self._contributors is None:
            raise InstrumentationError("construct with track_contributors=True")
        return np.array([len(self._contributors[s])
                         for s in range(self.slots) if self.slot_key[s] >= 0])

    def reset(self) -> None:
        self.slot_key.fill(-1)
        self.slot_val.fill(0)
        self.total_weight = 0
        if self._contributors is not None:
            self._contributors = [set() for _ in range(self.slots)]
