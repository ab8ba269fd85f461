"""Flow keys, records, intervals, and the exact-count oracle."""

import numpy as np
import pytest

from pipesketch.errors import ConfigError
from pipesketch.flows import (EncodedTrace, ExactCounts, Granularity, KeySpace,
                              PacketRecord, TopKReport, chunk_trace, decode_key,
                              encode_key, exact_topk, format_ip, rank_entries)


def test_key_lengths_and_slot_bytes():
    assert Granularity.FIVE_TUPLE.key_len == 13
    assert Granularity.IP_PAIR.key_len == 8
    assert Granularity.SRC_IP.key_len == 4
    # key + 4-byte counter + validity byte
    assert Granularity.FIVE_TUPLE.slot_bytes == 18
    assert Granularity.IP_PAIR.slot_bytes == 13
    assert Granularity.SRC_IP.slot_bytes == 9


def test_encode_decode_round_trip():
    key = encode_key(Granularity.FIVE_TUPLE, "10.1.2.3", "192.168.0.9", 6, 1234, 443)
    assert len(key) == 13
    assert decode_key(Granularity.FIVE_TUPLE, key) == (
        0x0A010203, 0xC0A80009, 6, 1234, 443)


def test_encode_accepts_ints_and_strings():
    a = encode_key(Granularity.IP_PAIR, "10.0.0.1", "10.0.0.2")
    b = encode_key(Granularity.IP_PAIR, 0x0A000001, 0x0A000002)
    assert a == b


def test_encode_big_endian_layout():
    key = encode_key(Granularity.FIVE_TUPLE, "1.2.3.4", "5.6.7.8", 17, 0x0102, 0x0304)
    assert key == bytes([1, 2, 3, 4, 5, 6, 7, 8, 17, 1, 2, 3, 4])


def test_all_zero_key_is_remapped():
    # the all-zero byte string is the empty-slot sentinel
    five = encode_key(Granularity.FIVE_TUPLE, 0, 0, 0, 0, 0)
    assert any(five) and five[8] == 0xFF
    pair = encode_key(Granularity.IP_PAIR, 0, 0)
    assert any(pair) and pair[-1] == 0xFF
    src = encode_key(Granularity.SRC_IP, 0)
    assert any(src) and src[-1] == 0xFF


def test_remap_lands_on_reserved_proto():
    # the degenerate all-zero tuple aliases proto-255-from-0.0.0.0, traffic
    # that cannot occur; every other tuple is untouched
    remapped = encode_key(Granularity.FIVE_TUPLE, 0, 0, 0, 0, 0)
    assert remapped == encode_key(Granularity.FIVE_TUPLE, 0, 0, 0xFF, 0, 0)
    near = encode_key(Granularity.FIVE_TUPLE, 0, 0, 0, 0, 1)
    assert near[8] == 0


def test_encode_rejects_out_of_range():
    with pytest.raises(ValueError):
        encode_key(Granularity.FIVE_TUPLE, "1.2.3.4", "5.6.7.8", 300, 1, 1)
    with pytest.raises(ValueError):
        encode_key(Granularity.FIVE_TUPLE, "1.2.3.4", "5.6.7.8", 6, 70000, 1)
    with pytest.raises(ValueError):
        encode_key(Granularity.SRC_IP, "1.2.3")
    with pytest.raises(ValueError):
        encode_key(Granularity.SRC_IP, 1 << 32)


def test_format_ip():
    assert format_ip(0x0A010203) == "10.1.2.3"
    assert format_ip(0) == "0.0.0.0"


def _records(seq):
    return [PacketRecord(key=k.encode(), weight=w, seq=i)
            for i, (k, w) in enumerate(seq)]


def test_exact_counts_and_topk():
    recs = _records([("a", 1), ("b", 2), ("a", 3), ("c", 1)])
    counts = ExactCounts.from_records(recs)
    assert counts[b"a"] == 4 and counts[b"b"] == 2 and counts[b"c"] == 1
    assert counts[b"zz"] == 0
    assert counts.total == 7
    assert len(counts) == 3
    assert exact_topk(recs, 2) == [(b"a", 4), (b"b", 2)]


def test_topk_ties_break_by_key_bytes():
    recs = _records([("b", 2), ("a", 2), ("c", 2)])
    assert exact_topk(recs, 3) == [(b"a", 2), (b"b", 2), (b"c", 2)]


def test_topk_requires_positive_k():
    with pytest.raises(ValueError):
        ExactCounts({b"a": 1}).top(0)


def test_chunk_by_count():
    recs = _records([("a", 1)] * 10)
    ivs = chunk_trace(recs, by_count=4)
    assert [len(iv) for iv in ivs] == [4, 4, 2]
    assert [iv.interval_id for iv in ivs] == [0, 1, 2]


def test_chunk_by_time():
    recs = [PacketRecord(key=b"x", seq=i, ts=100.0 + t)
            for i, t in enumerate([0.0, 0.5, 0.9, 1.1, 2.5])]
    ivs = chunk_trace(recs, by_time=1.0)
    assert [len(iv) for iv in ivs] == [3, 1, 1]


def test_chunk_needs_exactly_one_axis():
    recs = _records([("a", 1)])
    with pytest.raises(ConfigError):
        chunk_trace(recs)
    with pytest.raises(ConfigError):
        chunk_trace(recs, by_count=5, by_time=1.0)
    with pytest.raises(ConfigError):
        chunk_trace(recs, by_time=1.0)  # records lack timestamps


def test_keyspace_interning():
    ks = KeySpace()
    a = ks.intern(b"alpha")
    b = ks.intern(b"beta")
    assert a == 0 and b == 1
    assert ks.intern(b"alpha") == a
    assert len(ks) == 2
    assert b"alpha" in ks and b"gamma" not in ks
    assert ks.id_of(b"beta") == 1 and ks.id_of(b"gamma") is None
    assert ks.keys[a] == b"alpha"
    assert ks.folds().dtype == np.uint64 and len(ks.folds()) == 2


def test_encoded_trace_round_trip():
    recs = _records([("a", 1), ("b", 2), ("a", 1)])
    enc = EncodedTrace.from_records(recs)
    assert enc.kids.tolist() == [0, 1, 0]
    assert enc.total_weight == 4
    counts = enc.exact_counts()
    assert counts[b"a"] == 2 and counts[b"b"] == 2


def test_rank_entries_and_report_keys():
    items = [(b"b", 5), (b"a", 5), (b"c", 9)]
    assert rank_entries(items, 2) == [(b"c", 9), (b"a", 5)]
    rep = TopKReport(entries=rank_entries(items, 2), requested=2)
    assert rep.keys() == {b"c", b"a"}
    assert len(rep) == 2
