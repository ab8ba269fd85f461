"""Flow keys, packet records, trace intervals and the exact-count oracle.

A flow key is a fixed-length byte string whose layout depends on the chosen
granularity:

* five-tuple: src(4) dst(4) proto(1) sport(2) dport(2)  -> 13 bytes
* ip-pair:   src(4) dst(4)                              ->  8 bytes
* src-ip:    src(4)                                     ->  4 bytes

IP/port fields are big-endian.  The all-zero byte string is reserved as the
empty-slot sentinel; a packet that would genuinely encode to all zeros gets
its final field forced to 0xFF (tables also carry explicit validity flags,
so this is belt and braces).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


class Granularity(enum.Enum):
    FIVE_TUPLE = "five_tuple"
    IP_PAIR = "ip_pair"
    SRC_IP = "src_ip"

    @property
    def key_len(self) -> int:
        return _KEY_LEN[self]

    @property
    def slot_bytes(self) -> int:
        # key + 4-byte counter + validity byte
        return self.key_len + 5


_KEY_LEN = {
    Granularity.FIVE_TUPLE: 13,
    Granularity.IP_PAIR: 8,
    Granularity.SRC_IP: 4,
}


def encode_key(granularity, src_ip, dst_ip=0, proto=0, sport=0, dport=0):
    """Build the canonical key bytes for one packet.

    IPs may be dotted-quad strings or 32-bit integers.
    """
    src = _ip_to_int(src_ip)
    if granularity is Granularity.SRC_IP:
        key = src.to_bytes(4, "big")
        return key if any(key) else key[:3] + b"\xff"
    dst = _ip_to_int(dst_ip)
    if granularity is Granularity.IP_PAIR:
        key = src.to_bytes(4, "big") + dst.to_bytes(4, "big")
        return key if any(key) else key[:7] + b"\xff"
    if not 0 <= proto <= 255:
        raise ValueError(f"proto out of range: {proto}")
    if not 0 <= sport <= 65535 or not 0 <= dport <= 65535:
        raise ValueError(f"port out of range: {sport}/{dport}")
    key = (
        src.to_bytes(4, "big")
        + dst.to_bytes(4, "big")
        + bytes([proto])
        + sport.to_bytes(2, "big")
        + dport.to_bytes(2, "big")
    )
    if not any(key):
        # reserved sentinel: remap the degenerate all-zero tuple
        key = key[:8] + b"\xff" + key[9:]
    return key


def decode_key(granularity, key):
    """Inverse of encode_key; returns (src, dst, proto, sport, dport) ints
    (missing fields zero for coarser granularities)."""
    if len(key) != granularity.key_len:
        raise ValueError(f"key length {len(key)} != {granularity.key_len}")
    src = int.from_bytes(key[0:4], "big")
    if granularity is Granularity.SRC_IP:
        return (src, 0, 0, 0, 0)
    dst = int.from_bytes(key[4:8], "big")
    if granularity is Granularity.IP_PAIR:
        return (src, dst, 0, 0, 0)
    return (
        src,
        dst,
        key[8],
        int.from_bytes(key[9:11], "big"),
        int.from_bytes(key[11:13], "big"),
    )


def _ip_to_int(ip) -> int:
    if isinstance(ip, int):
        if not 0 <= ip <= 0xFFFFFFFF:
            raise ValueError(f"IP out of range: {ip}")
        return ip
    parts = str(ip).split(".")
    if len(parts) != 4:
        raise ValueError(f"not a dotted quad: {ip!r}")
    octets = [int(p) for p in parts]
    if any(o < 0 or o > 255 for o in octets):
        raise ValueError(f"not a dotted quad: {ip!r}")
    return (octets[0] << 24) | (octets[1] << 16) | (octets[2] << 8) | octets[3]


def format_ip(value: int) -> str:
    return ".".join(str((value >> s) & 0xFF) for s in (24, 16, 8, 0))


@dataclass(slots=True)
class PacketRecord:
    """One packet event: key + weight (1 for packet counting, bytes for
    byte counting) + 0-based position in the trace."""

    key: bytes
    weight: int = 1
    seq: int = 0
    ts: float | None = None


@dataclass
class TraceInterval:
    """An ordered chunk of a trace; the unit over which tables are zeroed
    and metrics are computed."""

    interval_id: int
    records: list[PacketRecord]

    def __len__(self) -> int:
        return len(self.records)


class ExactCounts:
    """Ground-truth per-flow counts for one interval."""

    def __init__(self, counts: dict[bytes, int] | None = None):
        self.counts = counts or {}

    @classmethod
    def from_records(cls, records) -> "ExactCounts":
        counts: dict[bytes, int] = {}
        for rec in records:
            counts[rec.key] = counts.get(rec.key, 0) + rec.weight
        return cls(counts)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, key: bytes) -> int:
        return self.counts.get(key, 0)

    def __len__(self) -> int:
        return len(self.counts)

    def top(self, k: int) -> list[tuple[bytes, int]]:
        """The k largest flows, descending count, ties broken by ascending
        key bytes."""
        if k < 1:
            raise ValueError("k must be >= 1")
        items = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return items[:k]


def exact_topk(interval, k: int) -> list[tuple[bytes, int]]:
    """True top-k flows of an interval (full per-flow counting)."""
    if isinstance(interval, ExactCounts):
        return interval.top(k)
    records = interval.records if isinstance(interval, TraceInterval) else interval
    return ExactCounts.from_records(records).top(k)


def chunk_trace(records, by_count: int | None = None,
                by_time: float | None = None) -> list[TraceInterval]:
    """Split a record stream into intervals, preserving order.

    Exactly one of by_count / by_time must be given.  Time chunking bins
    records into windows of the given width starting at the first record's
    timestamp and requires timestamped input.
    """
    if (by_count is None) == (by_time is None):
        raise ConfigError("give exactly one of by_count / by_time")
    intervals: list[TraceInterval] = []
    if by_count is not None:
        if by_count < 1:
            raise ConfigError("by_count must be >= 1")
        bucket: list[PacketRecord] = []
        for rec in records:
            bucket.append(rec)
            if len(bucket) == by_count:
                intervals.append(TraceInterval(len(intervals), bucket))
                bucket = []
        if bucket:
            intervals.append(TraceInterval(len(intervals), bucket))
        return intervals

    if by_time <= 0:
        raise ConfigError("by_time must be > 0")
    t0 = None
    current_bin = 0
    bucket = []
    for rec in records:
        if rec.ts is None:
            raise ConfigError("time chunking requires timestamped records")
        if t0 is None:
            t0 = rec.ts
        rec_bin = int((rec.ts - t0) // by_time)
        if rec_bin != current_bin and bucket:
            intervals.append(TraceInterval(len(intervals), bucket))
            bucket = []
            current_bin = rec_bin
        bucket.append(rec)
    if bucket:
        intervals.append(TraceInterval(len(intervals), bucket))
    return intervals


class KeySpace:
    """Interns flow keys to dense integer ids.

    Sketch kernels run on ids; id equality is exact byte equality, so the
    interning is invisible to the algorithms.  Folded 64-bit hash inputs are
    cached per key (see hashing.fold_key).
    """

    def __init__(self):
        self._ids: dict[bytes, int] = {}
        self.keys: list[bytes] = []
        self._folds: list[int] = []

    def intern(self, key: bytes) -> int:
        kid = self._ids.get(key)
        if kid is None:
            from .hashing import fold_key

            kid = len(self.keys)
            self._ids[key] = kid
            self.keys.append(key)
            self._folds.append(fold_key(key))
        return kid

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: bytes) -> bool:
        return key in self._ids

    def id_of(self, key: bytes) -> int | None:
        return self._ids.get(key)

    def folds(self) -> np.ndarray:
        return np.array(self._folds, dtype=np.uint64)


@dataclass
class EncodedTrace:
    """Array form of one interval: per-packet key ids and weights over a
    shared KeySpace.  Positions are interval-local (0-based)."""

    keyspace: KeySpace
    kids: np.ndarray
    weights: np.ndarray
    timestamps: np.ndarray | None = None
    interval_id: int = 0

    @classmethod
    def from_records(cls, records, keyspace: KeySpace | None = None,
                     interval_id: int = 0) -> "EncodedTrace":
        ks = keyspace if keyspace is not None else KeySpace()
        kids = []
        weights = []
        ts = []
        has_ts = True
        for rec in records:
            kids.append(ks.intern(rec.key))
            weights.append(rec.weight)
            if rec.ts is None:
                has_ts = False
            elif has_ts:
                ts.append(rec.ts)
        return cls(
            keyspace=ks,
            kids=np.asarray(kids, dtype=np.int64),
            weights=np.asarray(weights, dtype=np.int64),
            timestamps=np.asarray(ts) if has_ts and ts else None,
            interval_id=interval_id,
        )

    def __len__(self) -> int:
        return len(self.kids)

    @property
    def total_weight(self) -> int:
        return int(self.weights.sum())

    def exact_counts(self) -> ExactCounts:
        per_id = np.bincount(self.kids, weights=self.weights,
                             minlength=len(self.keyspace)).astype(np.int64)
        keys = self.keyspace.keys
        return ExactCounts({keys[i]: int(c) for i, c in enumerate(per_id) if c})


@dataclass
class TopKReport:
    """Result of asking a sketch for its top flows.

    ``requested`` is ceil(k * overreport_factor); ``clamped`` is set when the
    table could not supply that many entries (request exceeded the table size
    or its current occupancy).
    """

    entries: list[tuple[bytes, int]]
    requested: int
    clamped: bool = False
    metadata: dict = field(default_factory=dict)

    def keys(self) -> set[bytes]:
        return {key for key, _ in self.entries}

    def __len__(self) -> int:
        return len(self.entries)


def rank_entries(items, limit: int) -> list[tuple[bytes, int]]:
    """Top ``limit`` (key, count) pairs: descending count, ties by ascending
    key bytes."""
    return sorted(items, key=lambda kv: (-kv[1], kv[0]))[:limit]
