"""Sampling and sketch baselines."""

import random
from collections import Counter

import numpy as np
import pytest

from pipesketch import _pure
from pipesketch.baselines import CmsWithCache, SampleAndHold
from pipesketch.errors import ConfigError
from pipesketch.flows import EncodedTrace, KeySpace, PacketRecord


def test_default_sampling_probability_from_expected_packets():
    sh = SampleAndHold(100, expected_packets=10000, oversampling=2.0)
    assert sh.sampling_prob == pytest.approx(0.02)
    assert SampleAndHold(100, expected_packets=50).sampling_prob == 1.0


def test_sampling_config_errors():
    with pytest.raises(ConfigError):
        SampleAndHold(0, sampling_prob=0.5)
    with pytest.raises(ConfigError):
        SampleAndHold(5)
    with pytest.raises(ConfigError):
        SampleAndHold(5, sampling_prob=0.0)
    with pytest.raises(ConfigError):
        SampleAndHold(5, sampling_prob=1.5)
    with pytest.raises(ConfigError):
        SampleAndHold(5, expected_packets=0)


def test_weighted_admission_probability_in_kernel():
    held_key = np.full(4, -1, dtype=np.int64)
    held_val = np.zeros(4, dtype=np.int64)
    kids = np.array([0, 1, 2], dtype=np.int64)
    weights = np.array([2, 2, 1], dtype=np.int64)
    uniforms = np.array([0.70, 0.80, 0.49])
    # p = 0.5: weight-2 packets admit below 1-(1-p)^2 = 0.75, weight-1 below 0.5
    n, dropped = _pure.sh_run(held_key, held_val, 0, kids, weights, uniforms, 0.5)
    assert n == 2 and dropped == 0
    assert held_key[:2].tolist() == [0, 2]
    assert held_val[:2].tolist() == [2, 1]


def test_full_table_drops_new_flows_but_counts_held():
    sh = SampleAndHold(2, sampling_prob=1.0)
    sh.update(b"A")
    sh.update(b"B")
    sh.update(b"C")
    assert sh.n_held == 2 and sh.dropped_full == 1
    sh.update(b"A")
    assert sh.estimate(b"A") == 2
    assert sh.estimate(b"C") == 0


def test_held_counts_never_overestimate():
    rng = random.Random(5)
    sh = SampleAndHold(20, sampling_prob=0.3, seed=4)
    truth = Counter()
    for _ in range(600):
        key = bytes([rng.randrange(40)])
        sh.update(key)
        truth[key] += 1
    assert sh.n_held > 0
    for key, val in sh.entries():
        assert 0 < val <= truth[key]


def test_batch_split_does_not_change_sampling():
    rng = random.Random(11)
    keys = [bytes([rng.randrange(30)]) for _ in range(400)]
    whole = SampleAndHold(50, sampling_prob=0.2, seed=9)
    split = SampleAndHold(50, sampling_prob=0.2, seed=9)
    kids_w = np.array([whole.keyspace.intern(k) for k in keys], dtype=np.int64)
    kids_s = np.array([split.keyspace.intern(k) for k in keys], dtype=np.int64)
    ones = np.ones(len(keys), dtype=np.int64)
    whole.update_ids(kids_w, ones)
    for lo in range(0, len(keys), 37):
        split.update_ids(kids_s[lo : lo + 37], ones[lo : lo + 37])
    assert whole.n_held == split.n_held
    assert whole.held_key[: whole.n_held].tolist() == split.held_key[: split.n_held].tolist()
    assert whole.held_val[: whole.n_held].tolist() == split.held_val[: split.n_held].tolist()


def test_sample_report_and_reset():
    sh = SampleAndHold(4, sampling_prob=1.0)
    sh.update(b"A", 5)
    sh.update(b"B", 2)
    rep = sh.report(1, overreport_factor=2.0)
    assert rep.requested == 2
    assert [k for k, _ in rep.entries] == [b"A", b"B"]
    assert rep.metadata["scheme"] == "sample_and_hold"
    sh.reset()
    assert sh.n_held == 0 and sh.total_weight == 0
    assert sh.estimate(b"A") == 0


def test_cache_admission_reports_full_count_for_lone_flow():
    cms = CmsWithCache(8, 4, 50, depth=2)
    for _ in range(100):
        cms.update(b"A")
    # the estimate reaches 50 at packet 50 and seeds the cache entry; the
    # remaining 50 packets are counted exactly, so the report is spot on
    assert cms.admitted == 1 and cms.collisions == 0
    assert cms.sketch_estimate(b"A") == 50
    assert cms.estimate(b"A") == 100
    assert cms.entries() == [(b"A", 100)]


def test_cache_collision_retains_first_occupant():
    cms = CmsWithCache(16, 1, 3, depth=2)
    for _ in range(5):
        cms.update(b"A")
    for _ in range(5):
        cms.update(b"B")
    # A seeded at 3 plus 2 exact packets; B keeps losing the lone slot
    assert cms.admitted == 1
    assert cms.collisions >= 1
    assert cms.entries() == [(b"A", 5)]
    assert 5 <= cms.estimate(b"B") <= 8


def test_below_threshold_flows_stay_out_of_cache():
    rng = random.Random(2)
    cms = CmsWithCache(32, 4, 1000, depth=2)
    truth = Counter()
    for _ in range(300):
        key = bytes([rng.randrange(20)])
        cms.update(key)
        truth[key] += 1
    assert cms.admitted == 0 and cms.entries() == []
    for key, count in truth.items():
        assert cms.sketch_estimate(key) >= count


def test_from_bytes_splits_budget_half_and_half():
    cms = CmsWithCache.from_bytes(10000, 100, depth=4)
    assert cms.width == 312  # (10000 // 2) // (4 rows * 4 bytes)
    assert cms.cache_slots == 277  # (10000 - 5000) // 18-byte slots
    assert cms.memory_bytes <= 10000
    with pytest.raises(ConfigError):
        CmsWithCache.from_bytes(30, 10)


def test_cms_config_errors():
    with pytest.raises(ConfigError):
        CmsWithCache(0, 1, 5)
    with pytest.raises(ConfigError):
        CmsWithCache(4, 0, 5)
    with pytest.raises(ConfigError):
        CmsWithCache(4, 1, 0)


def test_cms_memory_accounting():
    assert CmsWithCache(10, 5, 7, depth=4).memory_bytes == 4 * 10 * 4 + 5 * 18


def test_cms_report_and_reset():
    cms = CmsWithCache(8, 4, 2, depth=2)
    for _ in range(4):
        cms.update(b"A")
    rep = cms.report(1)
    assert rep.entries == [(b"A", 4)]
    assert rep.metadata["scheme"] == "cms_cache"
    cms.reset()
    assert cms.admitted == 0 and cms.total_weight == 0
    assert cms.estimate(b"A") == 0 and cms.entries() == []


def test_baselines_reject_foreign_keyspace():
    trace = EncodedTrace.from_records([PacketRecord(key=b"A")], KeySpace())
    with pytest.raises(ConfigError):
        SampleAndHold(2, sampling_prob=1.0).consume(trace)
    with pytest.raises(ConfigError):
        CmsWithCache(4, 2, 5).consume(trace)
