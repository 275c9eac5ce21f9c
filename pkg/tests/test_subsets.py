from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from twlab.subsets import (
    SubsetCode,
    binomial,
    compress,
    enumerate_subsets,
    expand,
    intersect_size,
)

from oracles import colex_subsets


@pytest.mark.parametrize(
    "n, k, expected",
    [(4, 2, 6), (5, -1, 0), (2, 1, 2), (3, 5, 0), (0, 0, 1), (10, 10, 1)],
)
def test_binomial(n, k, expected):
    assert binomial(n, k) == expected


def test_binomial_rejects_negative_top():
    with pytest.raises(ValueError):
        binomial(-1, 0)


def test_enumerate_examples():
    assert [s.elements() for s in enumerate_subsets(3, 2)] == [(1, 2), (1, 3), (2, 3)]
    assert [s.mask for s in enumerate_subsets(3, 0)] == [0]
    assert [s.elements() for s in enumerate_subsets(5, 1)] == [(1,), (2,), (3,), (4,), (5,)]
    assert enumerate_subsets(3, 4) == []


@pytest.mark.parametrize("v", range(0, 9))
def test_enumerate_matches_colex_oracle(v):
    for k in range(v + 1):
        got = [frozenset(s.elements()) for s in enumerate_subsets(v, k)]
        assert got == colex_subsets(v, k)


@pytest.mark.parametrize("v", range(0, 17))
def test_rank_is_bijection(v):
    for k in range(v + 1):
        subs = enumerate_subsets(v, k)
        assert len(subs) == comb(v, k)
        assert [s.rank() for s in subs] == list(range(len(subs)))
        masks = [s.mask for s in subs]
        assert masks == sorted(set(masks))


@given(st.data())
def test_unrank_rank_roundtrip(data):
    v = data.draw(st.integers(0, 16))
    k = data.draw(st.integers(0, v))
    r = data.draw(st.integers(0, comb(v, k) - 1))
    s = SubsetCode.unrank(r, v, k)
    assert s.rank() == r
    assert s.k == k and s.mask.bit_count() == k and s.mask >> v == 0


def test_unrank_out_of_range():
    with pytest.raises(ValueError):
        SubsetCode.unrank(3, 3, 2)


def test_subset_invariants_enforced():
    with pytest.raises(ValueError):
        SubsetCode(0b111, 3, 2)
    with pytest.raises(ValueError):
        SubsetCode(0b1000, 3, 1)


def test_intersect_size():
    def s(*xs):
        return SubsetCode.from_elements(xs, 5)

    assert intersect_size(s(1, 2), s(2, 3)) == 1
    assert intersect_size(s(1, 2), s(3, 4)) == 0
    y = s(1, 3, 5)
    assert intersect_size(y, y) == 3
    with pytest.raises(ValueError):
        intersect_size(SubsetCode.from_elements([1], 3), SubsetCode.from_elements([1], 4))


@given(st.integers(0, 2**10 - 1), st.integers(0, 2**10 - 1))
def test_compress_expand(mask, support):
    packed = compress(mask, support)
    assert packed < 1 << support.bit_count()
    assert expand(packed, support) == mask & support


def test_compress_preserves_order():
    support = 0b1011010
    inside = [m for m in range(1 << 7) if m & ~support == 0]
    packed = [compress(m, support) for m in inside]
    assert packed == sorted(packed)
    assert sorted(packed) == list(range(1 << 4))


def test_str_and_elements():
    s = SubsetCode.from_elements([4, 1], 6)
    assert str(s) == "{1,4}"
    assert s.elements() == (1, 4) and len(s) == 2
