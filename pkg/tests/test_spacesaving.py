"""Space-saving table semantics."""

import random
from collections import Counter

import pytest

from pipesketch.errors import ConfigError, InstrumentationError
from pipesketch.flows import Granularity, KeySpace
from pipesketch.spacesaving import SpaceSaving


def test_hit_increments_existing_counter():
    ss = SpaceSaving(4)
    ss.update(b"A")
    ss.update(b"A", 5)
    assert ss.estimate(b"A") == 6
    assert ss.occupancy() == 1


def test_misses_fill_lowest_empty_slot_first():
    ss = SpaceSaving(3)
    for key in (b"A", b"B", b"C"):
        ss.update(key)
    assert list(ss.slot_key) == [0, 1, 2]
    assert ss.occupancy() == 3


def test_full_table_replaces_min_and_inherits_count():
    ss = SpaceSaving(2)
    ss.update(b"A", 3)
    ss.update(b"B", 1)
    ss.update(b"C", 1)
    # B held the min (1); C takes the slot and inherits min + weight
    assert ss.estimate(b"C") == 2
    assert ss.estimate(b"B") == 0
    assert ss.estimate(b"A") == 3


def test_min_tie_breaks_to_lowest_slot():
    ss = SpaceSaving(2)
    ss.update(b"A")
    ss.update(b"B")
    ss.update(b"C")
    assert ss.estimate(b"A") == 0
    assert ss.estimate(b"B") == 1
    assert ss.estimate(b"C") == 2


def test_current_min_is_zero_until_full():
    ss = SpaceSaving(3)
    ss.update(b"A", 7)
    ss.update(b"B", 9)
    assert ss.current_min() == 0
    ss.update(b"C", 4)
    assert ss.current_min() == 4


def test_no_underestimation_and_bounded_overestimation():
    for seed in range(8):
        rng = random.Random(seed)
        ss = SpaceSaving(10)
        truth = Counter()
        for _ in range(500):
            key = bytes([rng.randrange(50)])
            w = rng.randrange(1, 4)
            ss.update(key, w)
            truth[key] += w
        bound = ss.current_min()
        present = dict(ss.entries())
        for key, val in present.items():
            assert val >= truth[key]
            assert val - truth[key] <= bound


def test_heavy_flow_guaranteed_present():
    for seed in range(8):
        rng = random.Random(100 + seed)
        ss = SpaceSaving(8)
        truth = Counter()
        for _ in range(400):
            # skewed stream: low byte values dominate
            key = bytes([min(rng.randrange(40), rng.randrange(40))])
            ss.update(key)
            truth[key] += 1
        present = dict(ss.entries())
        for key, count in truth.items():
            if count * ss.slots > ss.total_weight:
                assert key in present


def test_contributor_sets_accumulate_across_replacements():
    ss = SpaceSaving(2, track_contributors=True)
    for key in (b"A", b"B", b"C"):
        ss.update(key)
    # C displaced A in slot 0, so that counter has seen two distinct keys
    assert sorted(ss.keys_per_counter().tolist()) == [1, 2]


def test_keys_per_counter_requires_tracking():
    ss = SpaceSaving(2)
    ss.update(b"A")
    with pytest.raises(InstrumentationError):
        ss.keys_per_counter()


def test_report_ranks_and_clamps():
    ss = SpaceSaving(4)
    ss.update(b"A", 5)
    ss.update(b"B", 9)
    ss.update(b"C", 1)
    rep = ss.report(2)
    assert [key for key, _ in rep.entries] == [b"B", b"A"]
    assert not rep.clamped
    wide = ss.report(2, overreport_factor=2.5)
    assert wide.requested == 5
    assert wide.clamped
    assert len(wide.entries) == 3
    assert wide.metadata["scheme"] == "space_saving"


def test_report_rejects_bad_arguments():
    ss = SpaceSaving(2)
    with pytest.raises(ConfigError):
        ss.report(0)
    with pytest.raises(ConfigError):
        ss.report(5, overreport_factor=0.5)


def test_consume_rejects_foreign_keyspace():
    from pipesketch.flows import EncodedTrace, PacketRecord

    ks = KeySpace()
    trace = EncodedTrace.from_records([PacketRecord(key=b"A")], ks)
    ss = SpaceSaving(2)
    with pytest.raises(ConfigError):
        ss.consume(trace)


def test_memory_bytes_counts_key_plus_counter():
    assert SpaceSaving(100).memory_bytes == 100 * 18
    assert SpaceSaving(10, granularity=Granularity.SRC_IP).memory_bytes == 10 * 9


def test_slots_must_be_positive():
    with pytest.raises(ConfigError):
        SpaceSaving(0)


def test_reset_clears_table_and_contributors():
    ss = SpaceSaving(2, track_contributors=True)
    ss.update(b"A", 3)
    ss.reset()
    assert ss.occupancy() == 0
    assert ss.total_weight == 0
    ss.update(b"B")
    assert ss.keys_per_counter().tolist() == [1]
