"""Multi-stage hash tables for top-k flow tracking.

Both schemes split a slot budget across d stages, each stage hashed
independently (see hashing.HashFamily).  HashParallel probes one slot per
stage and replaces the probed minimum on a full miss.  HashPipe removes
the second read pass: stage one always installs the incoming key and the
displaced entry rolls through the remaining stages, swapping itself into
any smaller-valued slot, so each stage is touched at most once per packet
with at most one read and one write.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _pure
from .backend import get_backend
from .errors import ConfigError, InstrumentationError
from .flows import Granularity, KeySpace, TopKReport, rank_entries
from .hashing import HashFamily, PositionTable


def split_slots(slots: int, d: int) -> list[int]:
    """Per-stage table sizes: as even as possible, earlier stages take the
    remainder, every stage at least one slot."""
    if d < 1:
        raise ConfigError(f"d must be >= 1, got {d}")
    if slots < d:
        raise ConfigError(f"{slots} slots cannot cover {d} stages")
    base, rem = divmod(slots, d)
    return [base + 1] * rem + [base] * (d - rem)


@dataclass(frozen=True)
class EvictionOutcome:
    """What one packet's insertion did to previously tabled state.

    At most one of the fields is populated: a fully displaced entry
    (evicted_key/evicted_count) or the stage where the displaced entry
    merged into an existing counter for the same key.
    """

    evicted_key: bytes | None = None
    evicted_count: int = 0
    merged_stage: int | None = None

    @property
    def evicted(self) -> bool:
        return self.evicted_key is not None


class _StagedTable:
    """Shared state for the staged schemes: flat slot arrays plus cached
    per-key stage positions."""

    def __init__(self, slots, d, *, seed, granularity, keyspace, backend):
        sizes = split_slots(slots, d)
        offsets = np.cumsum([0] + sizes[:-1])
        self.slots = int(slots)
        self.d = int(d)
        self.granularity = granularity
        self.keyspace = keyspace if keyspace is not None else KeySpace()
        self.family = HashFamily.from_seed(seed, sizes)
        self._postab = PositionTable(self.family, self.keyspace, offsets)
        self.slot_key = np.full(self.slots, -1, dtype=np.int64)
        self.slot_val = np.zeros(self.slots, dtype=np.int64)
        self.valid = np.zeros(self.slots, dtype=np.int8)
        self._kern = get_backend(backend)
        self.seq = 0
        self.total_weight = 0

    @property
    def stage_sizes(self) -> tuple[int, ...]:
        return self.family.sizes

    @property
    def memory_bytes(self) -> int:
        return self.slots * self.granularity.slot_bytes

    def occupancy(self) -> int:
        return int(self.valid.sum())

    def mass_in_table(self) -> int:
        return int(self.slot_val[self.valid.astype(bool)].sum())

    def _check_trace(self, trace) -> None:
        if trace.keyspace is not self.keyspace:
            raise ConfigError("trace was encoded over a different key space")

    def _entries_by_key(self) -> dict[int, int]:
        """Occupied slots aggregated per key id (duplicates summed: each
        slot counts a disjoint stretch of the flow's packets)."""
        out: dict[int, int] = {}
        live = self.valid.astype(bool)
        for kid, val in zip(self.slot_key[live], self.slot_val[live]):
            out[int(kid)] = out.get(int(kid), 0) + int(val)
        return out

    def estimate(self, key: bytes) -> int:
        kid = self.keyspace.id_of(key)
        if kid is None:
            return 0
        live = self.valid.astype(bool) & (self.slot_key == kid)
        return int(self.slot_val[live].sum())

    def report(self, k: int, overreport_factor: float = 1.0) -> TopKReport:
        if k < 1 or overreport_factor < 1.0:
            raise ConfigError("k must be >= 1 and overreport_factor >= 1")
        requested = math.ceil(k * overreport_factor)
        keys = self.keyspace.keys
        items = [(keys[kid], val) for kid, val in self._entries_by_key().items()]
        return TopKReport(
            entries=rank_entries(items, requested),
            requested=requested,
            clamped=requested > len(items),
            metadata={"scheme": type(self).__name__, "slots": self.slots, "d": self.d},
        )

    def _base_reset(self) -> None:
        self.slot_key.fill(-1)
        self.slot_val.fill(0)
        self.valid.fill(0)
        self.seq = 0
        self.total_weight = 0


class HashPipe(_StagedTable):
    """Pipelined scheme: always-insert first stage, rolling minimum after.

    ``eviction_sample_every`` records the counter value of every full
    eviction caused by a packet whose sequence number falls on that grid
    (0 disables sampling).  ``record_access`` keeps a per-packet log of
    (stage, reads, writes) touches; it forces the pure kernel.
    """

    def __init__(self, slots: int, d: int = 6, *, seed: int = 0,
                 granularity: Granularity = Granularity.FIVE_TUPLE,
                 keyspace: KeySpace | None = None,
                 eviction_sample_every: int = 0,
                 record_access: bool = False,
                 backend: str | None = None):
        super().__init__(slots, d, seed=seed, granularity=granularity,
                         keyspace=keyspace, backend=backend)
        if eviction_sample_every < 0:
            raise ConfigError("eviction_sample_every must be >= 0")
        self.eviction_sample_every = int(eviction_sample_every)
        self.record_access = bool(record_access)
        self.access_log: list[list[tuple[int, int, int]]] = []
        self.evicted_mass = 0
        self.evict_count = 0
        self._samples: list[np.ndarray] = []

    def insert(self, key: bytes, weight: int = 1) -> EvictionOutcome:
        kid = self.keyspace.intern(key)
        outcomes: list[tuple] = []
        self._run(np.array([kid], dtype=np.int64),
                  np.array([weight], dtype=np.int64), outcomes)
        tag = outcomes[0]
        if tag[0] == "evicted":
            return EvictionOutcome(evicted_key=self.keyspace.keys[tag[1]],
                                   evicted_count=tag[2])
        if tag[0] == "merged":
            return EvictionOutcome(merged_stage=tag[1])
        return EvictionOutcome()

    def insert_batch(self, kids: np.ndarray, weights: np.ndarray) -> None:
        self._run(kids, weights, None)

    def consume(self, trace) -> None:
        self._check_trace(trace)
        self.insert_batch(trace.kids, trace.weights)

    def _run(self, kids, weights, outcomes) -> None:
        pos = self._postab.array()
        every = self.eviction_sample_every
        cap = len(kids) // every + 1 if every else 0
        samples = np.empty(cap, dtype=np.int64)
        if outcomes is not None or self.record_access:
            log = self.access_log if self.record_access else None
            mass, count, n_samp = _pure.hp_pipe_run(
                self.slot_key, self.slot_val, self.valid, pos, kids, weights,
                self.seq, every, samples, outcomes=outcomes, access_log=log)
        else:
            mass, count, n_samp = self._kern.hp_pipe_run(
                self.slot_key, self.slot_val, self.valid, pos, kids, weights,
                self.seq, every, samples)
        self.evicted_mass += int(mass)
        self.evict_count += int(count)
        if n_samp:
            self._samples.append(samples[:n_samp].copy())
        self.seq += len(kids)
        self.total_weight += int(weights.sum())

    def eviction_samples(self) -> np.ndarray:
        if not self.eviction_sample_every:
            raise InstrumentationError("construct with eviction_sample_every > 0")
        if not self._samples:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(self._samples)

    def eviction_ccdf(self, max_size: int) -> np.ndarray:
        """P[sampled evicted count > t] for t = 0..max_size."""
        s = self.eviction_samples()
        if len(s) == 0:
            return np.zeros(max_size + 1)
        return np.array([(s > t).mean() for t in range(max_size + 1)])

    def duplicate_fraction(self) -> float:
        """Share of occupied slots wasted on extra copies of a key that
        already holds another slot."""
        live = self.slot_key[self.valid.astype(bool)]
        if len(live) == 0:
            return 0.0
        return 1.0 - len(np.unique(live)) / len(live)

    def reset(self) -> None:
        self._base_reset()
        self.evicted_mass = 0
        self.evict_count = 0
        self._samples = []
        self.access_log = []


@dataclass
class ReplacementLog:
    """One row per min-replacement: packet sequence number, the minimum
    value probed across stages, the value installed in its place, and the
    installed key id."""

    seq: np.ndarray
    probed_min: np.ndarray
    installed: np.ndarray
    kid: np.ndarray

    def __len__(self) -> int:
        return len(self.seq)


class HashParallel(_StagedTable):
    """Probe-everything scheme: one slot per stage, hit increments, first
    empty stage takes new keys, otherwise the probed minimum is replaced
    and its count inherited.

    ``record_replacements`` logs every replacement (see ReplacementLog);
    ``filled_at`` is the sequence number at which the table became full.
    """

    def __init__(self, slots: int, d: int = 6, *, seed: int = 0,
                 granularity: Granularity = Granularity.FIVE_TUPLE,
                 keyspace: KeySpace | None = None,
                 record_replacements: bool = False,
                 backend: str | None = None):
        super().__init__(slots, d, seed=seed, granularity=granularity,
                         keyspace=keyspace, backend=backend)
        self.record_replacements = bool(record_replacements)
        self.filled_at: int | None = None
        self.replacement_count = 0
        self._rep: list[tuple[np.ndarray, ...]] = []

    def update(self, key: bytes, weight: int = 1) -> None:
        kid = self.keyspace.intern(key)
        self.update_ids(np.array([kid], dtype=np.int64),
                        np.array([weight], dtype=np.int64))

    def consume(self, trace) -> None:
        self._check_trace(trace)
        self.update_ids(trace.kids, trace.weights)

    def update_ids(self, kids: np.ndarray, weights: np.ndarray) -> None:
        pos = self._postab.array()
        record = self.record_replacements
        cap = len(kids) if record else 0
        rep_seq = np.empty(cap, dtype=np.int64)
        rep_min = np.empty(cap, dtype=np.int64)
        rep_val = np.empty(cap, dtype=np.int64)
        rep_kid = np.empty(cap, dtype=np.int64)
        n_reps, _, fill_seq = self._kern.hp_parallel_run(
            self.slot_key, self.slot_val, self.valid, pos, kids, weights,
            self.seq, record, rep_seq, rep_min, rep_val, rep_kid)
        if record and n_reps:
            self._rep.append((rep_seq[:n_reps].copy(), rep_min[:n_reps].copy(),
                              rep_val[:n_reps].copy(), rep_kid[:n_reps].copy()))
        self.replacement_count += int(n_reps)
        if fill_seq >= 0 and self.filled_at is None:
            self.filled_at = int(fill_seq)
        self.seq += len(kids)
        self.total_weight += int(weights.sum())

    def replacement_log(self) -> ReplacementLog:
        if not self.record_replacements:
            raise InstrumentationError("construct with record_replacements=True")
        if not self._rep:
            empty = np.empty(0, dtype=np.int64)
            return ReplacementLog(empty, empty.copy(), empty.copy(), empty.copy())
        cols = tuple(np.concatenate(col) for col in zip(*self._rep))
        return ReplacementLog(*cols)

    def reset(self) -> None:
        self._base_reset()
        self.filled_at = None
        self.replacement_count = 0
        self._rep = []
