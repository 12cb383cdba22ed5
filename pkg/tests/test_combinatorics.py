"""
Tests for permutation and partition combinatorics.
"""

from math import comb

import pytest

from jetsym.combinatorics import (CosetSpec, bell_number, coset_weight, cut_blocks, fdb_coefficient,
                                  integer_partitions, orbit_count, set_partitions, shapes_up_to,
                                  stabilizer_order, subset_perms)
from jetsym.exceptions import JetsymError


def test_subset_perms_count_and_shape():
    """Test that subset permutations are C(p, q) two-block increasing maps."""
    for p in range(0, 6):
        for q in range(0, p + 1):
            perms = subset_perms(p, q)
            assert len(perms) == comb(p, q)
            assert len(set(perms)) == len(perms)
            for perm in perms:
                assert sorted(perm) == list(range(1, p + 1))
                assert list(perm[:q]) == sorted(perm[:q])
                assert list(perm[q:]) == sorted(perm[q:])


def test_subset_perms_bounds():
    """Test that q outside 0..p is rejected."""
    with pytest.raises(JetsymError):
        subset_perms(2, 3)


def test_coset_weight_small_instance():
    """Test lengths (1, 2) with multiplicities (2, 1)."""
    spec = CosetSpec((1, 2), (2, 1))
    assert spec.shape == (1, 1, 2)
    assert coset_weight(spec) == (4, 6)
    assert orbit_count(spec) == 6


def test_coset_weight_matches_orbits():
    """Test |F| against brute-force orbit counts for every shape of size six or less."""
    for shape in shapes_up_to(6, 6):
        if not shape:
            continue
        spec = CosetSpec.from_shape(shape)
        h, f = coset_weight(spec)
        assert h == stabilizer_order(shape)
        assert orbit_count(spec) == f


@pytest.mark.slow
def test_coset_weight_matches_orbits_size_seven():
    """Test |F| against orbit counts for shapes of size seven."""
    for shape in integer_partitions(7):
        spec = CosetSpec.from_shape(shape)
        assert orbit_count(spec) == coset_weight(spec)[1]


def test_coset_spec_validation():
    """Test malformed block structures."""
    with pytest.raises(JetsymError):
        CosetSpec((2, 1), (1, 1))
    with pytest.raises(JetsymError):
        CosetSpec((1,), (1, 2))
    with pytest.raises(JetsymError):
        CosetSpec((1,), (0,))


def test_integer_partitions():
    """Test partitions as non-decreasing tuples."""
    assert set(integer_partitions(4)) == {(4,), (1, 3), (2, 2), (1, 1, 2), (1, 1, 1, 1)}
    assert set(integer_partitions(4, 2)) == {(2, 2), (1, 1, 2), (1, 1, 1, 1)}
    assert list(integer_partitions(0)) == [()]
    assert sum(1 for _ in integer_partitions(7)) == 15


def test_set_partitions_bell_numbers():
    """Test that set partitions are counted by the Bell numbers."""
    expected = [1, 1, 2, 5, 15, 52, 203, 877]
    assert [bell_number(k) for k in range(8)] == expected
    for k in range(7):
        assert sum(1 for _ in set_partitions(range(k))) == expected[k]


def test_fdb_coefficient():
    """Test the set-partition counts behind the fifth derivative."""
    assert fdb_coefficient((1, 2, 2)) == 15
    assert fdb_coefficient((1, 1, 3)) == 10
    assert fdb_coefficient((1, 1, 1, 1, 1)) == 1
    assert sum(fdb_coefficient(s) for s in integer_partitions(5)) == bell_number(5)


def test_cut_blocks():
    """Test splitting an arrangement into consecutive blocks."""
    assert cut_blocks((3, 1, 2, 4), (1, 3)) == [(3,), (1, 2, 4)]
