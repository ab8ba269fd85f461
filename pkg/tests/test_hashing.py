"""Hash family and position-table behavior."""

import math

import numpy as np
import pytest

from pipesketch.flows import KeySpace
from pipesketch.hashing import MERSENNE61, HashFamily, PositionTable, fold_key


def test_fold_short_key_is_little_endian_value():
    assert fold_key(b"\x01\x00\x00\x00") == 1
    assert fold_key(b"\x00\x01") == 256


def test_fold_xors_eight_byte_chunks():
    key = bytes(range(13))
    first = int.from_bytes(key[:8], "little")
    second = int.from_bytes(key[8:], "little")
    assert fold_key(key) == first ^ second
    assert fold_key(key) < 1 << 64


def test_family_from_seed_draws_odd_pairwise_coprime_multipliers():
    fam = HashFamily.from_seed(7, (64,) * 8)
    a_values = [a for a, _ in fam.params]
    assert all(a % 2 == 1 for a in a_values)
    for i in range(len(a_values)):
        for j in range(i + 1, len(a_values)):
            assert math.gcd(a_values[i], a_values[j]) == 1
    for a, b in fam.params:
        assert 1 <= a < MERSENNE61
        assert 0 <= b < MERSENNE61


def test_family_is_deterministic_per_seed():
    assert HashFamily.from_seed(3, (10, 20)) == HashFamily.from_seed(3, (10, 20))
    assert HashFamily.from_seed(3, (10, 20)) != HashFamily.from_seed(4, (10, 20))


def test_slot_matches_formula():
    fam = HashFamily.from_seed(1, (97, 64))
    x = fold_key(b"some flow key")
    for stage in range(2):
        a, b = fam.params[stage]
        assert fam.slot(stage, x) == ((a * x + b) % MERSENNE61) % fam.sizes[stage]
    assert fam.hash_key(1, b"some flow key") == fam.slot(1, x)


def test_slot_stage_bounds():
    fam = HashFamily.from_seed(1, (8,))
    with pytest.raises(IndexError):
        fam.slot(1, 5)
    with pytest.raises(IndexError):
        fam.slot(-1, 5)


def test_parameter_validation():
    with pytest.raises(ValueError):
        HashFamily(params=((1, 0),), sizes=(4, 4))
    with pytest.raises(ValueError):
        HashFamily(params=((0, 0),), sizes=(4,))
    with pytest.raises(ValueError):
        HashFamily(params=((1, MERSENNE61),), sizes=(4,))


def test_index_table_matches_slot():
    fam = HashFamily.from_seed(5, (31, 57, 100))
    folds = np.array([fold_key(bytes([i] * 13)) for i in range(1, 30)],
                     dtype=np.uint64)
    table = fam.index_table(folds)
    assert table.shape == (3, 29)
    for stage in range(3):
        for j, x in enumerate(folds):
            assert table[stage, j] == fam.slot(stage, int(x))


def test_stage_distribution_is_roughly_uniform():
    scipy_stats = pytest.importorskip("scipy.stats")
    fam = HashFamily.from_seed(11, (32,))
    counts = np.zeros(32)
    for i in range(16000):
        counts[fam.hash_key(0, i.to_bytes(8, "big"))] += 1
    _, p = scipy_stats.chisquare(counts)
    assert p > 1e-4


def test_position_table_extends_lazily():
    ks = KeySpace()
    fam = HashFamily.from_seed(2, (16, 16))
    tab = PositionTable(fam, ks)
    assert tab.array().shape == (2, 0)
    ks.intern(b"one")
    ks.intern(b"two")
    arr = tab.array()
    assert arr.shape == (2, 2)
    assert arr[0, 0] == fam.hash_key(0, b"one")
    assert arr[1, 1] == fam.hash_key(1, b"two")
    ks.intern(b"three")
    arr2 = tab.array()
    assert arr2.shape == (2, 3)
    assert (arr2[:, :2] == arr).all()


def test_position_table_offsets_flatten_stages():
    ks = KeySpace()
    ks.intern(b"k")
    fam = HashFamily.from_seed(9, (10, 7))
    flat = PositionTable(fam, ks, offsets=(0, 10))
    arr = flat.array()
    assert 0 <= arr[0, 0] < 10
    assert 10 <= arr[1, 0] < 17
    with pytest.raises(ValueError):
        PositionTable(fam, ks, offsets=(0,))
