import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import aitken_syt, brute_max_content, brute_partitions, brute_syt, contents, \
    euler_partition_counts, hook_length
from rtwalk.errors import CapExceededError
from rtwalk.tableaux import (
    EMPTY,
    Partition,
    SkewShape,
    content_map,
    content_sum,
    enumerate_partitions,
    enumerate_subpartitions,
    enumerate_superpartitions,
    max_content,
    max_content_large,
    max_content_skew,
    syt_count,
    syt_count_skew,
    transpose,
)


def partitions_strategy(max_size=12):
    return st.integers(0, max_size).flatmap(
        lambda n: st.sampled_from([Partition(p) for p in brute_partitions(n)]))


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition((1, 2))
    with pytest.raises(ValueError):
        Partition((2, 0, 1))
    assert Partition((2, 0)) == Partition((2,))
    assert Partition(()) == EMPTY and EMPTY.size == 0
    lam = Partition((4, 2, 1))
    assert lam.first == 4 and lam.remainder_size == 3 and lam.part(5) == 0
    assert lam.to_json() == [4, 2, 1]


def test_skew_validation():
    with pytest.raises(ValueError):
        SkewShape(Partition((2,)), Partition((1, 1)))
    s = SkewShape(Partition((3, 1)), Partition((1,)))
    assert s.size == 3
    assert s.to_json() == {"outer": [3, 1], "inner": [1]}


def test_content_sum_examples():
    for l in range(8):
        assert content_sum((l,) if l else ()) == l * (l - 1) // 2
    assert content_sum((4, 2, 1)) == 3
    assert content_sum(()) == 0


@settings(max_examples=80, deadline=None)
@given(partitions_strategy())
def test_content_sum_matches_oracle_and_transpose(lam):
    assert content_sum(lam) == contents(lam)
    assert content_sum(transpose(lam)) == -content_sum(lam)
    assert transpose(transpose(lam)) == lam


def test_transpose_examples():
    assert transpose((4, 2, 1)) == (3, 2, 1, 1)
    assert transpose((5,)) == (1,) * 5


def test_transpose_involution_all_up_to_12():
    for n in range(13):
        for lam in enumerate_partitions(n):
            assert transpose(transpose(lam)) == lam
            assert content_sum(transpose(lam)) == -content_sum(lam)


def test_content_map_matches_coordinates():
    cm = content_map(SkewShape(Partition((3, 2)), Partition((1,))))
    assert cm == {(1, 2): 1, (1, 3): 2, (2, 1): -1, (2, 2): 0}


# ---- tableau counts ----

def test_syt_examples():
    assert syt_count((2, 1)) == 2
    f, g = 6, 3
    assert syt_count((f - 1, 1), (f - g,)) == g
    assert syt_count((f - 1, 1)) == f - 1
    for k in range(1, 8):
        assert syt_count((k,)) == 1
    assert syt_count_skew(SkewShape(Partition((2, 1)), EMPTY)) == 2


def test_syt_matches_explicit_fillings_up_to_8_boxes():
    for outer_size in range(9):
        for outer in brute_partitions(outer_size):
            for inner_size in range(outer_size + 1):
                for inner in brute_partitions(inner_size):
                    if len(inner) > len(outer) or any(a > b for a, b in zip(inner, outer)):
                        continue
                    assert syt_count(outer, inner) == brute_syt(outer, inner), (outer, inner)


@settings(max_examples=60, deadline=None)
@given(partitions_strategy(14), st.data())
def test_syt_matches_aitken_determinant(lam, data):
    m = data.draw(st.integers(0, lam.size))
    subs = list(enumerate_subpartitions(lam, m))
    mu = data.draw(st.sampled_from(subs))
    assert syt_count(lam, mu) == aitken_syt(lam, mu)
    if m == 0:
        assert syt_count(lam) == (hook_length(lam) if lam else 1)


def test_branching_identity():
    for l in range(11):
        for lam in enumerate_partitions(l):
            whole = syt_count(lam)
            for m in range(l + 1):
                total = sum(syt_count(lam, mu) * syt_count(mu) for mu in enumerate_subpartitions(lam, m))
                assert total == whole, (lam, m)


def test_square_sum_identity():
    for k in range(11):
        assert sum(syt_count(lam) ** 2 for lam in enumerate_partitions(k)) == math.factorial(k)


# ---- enumeration ----

def test_enumerate_partitions_examples():
    assert [tuple(p) for p in enumerate_partitions(4)] == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    assert list(enumerate_partitions(0)) == [EMPTY]
    assert len(list(enumerate_partitions(10))) == 42


def test_partition_counts_match_euler_recurrence():
    p = euler_partition_counts(30)
    for n in range(31):
        listed = list(enumerate_partitions(n))
        assert len(listed) == p[n]
        assert listed == sorted(listed, reverse=True)
        assert len(set(listed)) == len(listed)


def test_enumerate_partitions_cap():
    with pytest.raises(CapExceededError):
        list(enumerate_partitions(10, cap=5))


def test_subpartition_examples():
    assert list(enumerate_subpartitions(Partition((2, 1)), 1)) == [Partition((1,))]
    assert list(enumerate_subpartitions(Partition((5, 3)), 0)) == [EMPTY]
    assert list(enumerate_subpartitions(Partition((2, 2)), 2)) == [Partition((2,)), Partition((1, 1))]


def test_superpartition_examples():
    assert len(list(enumerate_superpartitions(EMPTY, 3))) == 3
    assert list(enumerate_superpartitions(Partition((1,)), 2)) == [Partition((2,)), Partition((1, 1))]
    assert list(enumerate_superpartitions(Partition((2,)), 3)) == [Partition((3,)), Partition((2, 1))]


@settings(max_examples=50, deadline=None)
@given(partitions_strategy(9), st.data())
def test_sub_and_super_against_filter(lam, data):
    m = data.draw(st.integers(0, lam.size))
    expected = [p for p in brute_partitions(m) if len(p) <= len(lam) and all(a <= b for a, b in zip(p, lam))]
    assert sorted(map(tuple, enumerate_subpartitions(lam, m))) == sorted(expected)
    top = data.draw(st.integers(lam.size, lam.size + 4))
    expected_sup = [p for p in brute_partitions(top)
                    if len(p) >= len(lam) and all(a <= b for a, b in zip(lam, p))]
    assert sorted(map(tuple, enumerate_superpartitions(lam, top))) == sorted(expected_sup)


# ---- content maxima ----

def test_max_content_skew_examples():
    assert max_content_skew(9, 5, 4, 2) == content_sum((5, 4)) - content_sum((3, 2))
    for l in range(8):
        for m in range(l + 1):
            assert max_content_skew(l, m, 0, 0) == (l * l - l) // 2 - (m * m - m) // 2
    assert max_content_skew(4, 0, 2, 0) == content_sum((2, 2))


def test_max_content_examples():
    for l in range(1, 10):
        assert max_content(l, 0) == l * (l - 1) // 2
    assert max_content(0, 0) == 0
    assert max_content(6, 2) == content_sum((4, 2))


def test_max_content_exhaustive():
    for l in range(1, 13):
        for i in range(l):
            best = brute_max_content(l, i)
            if best is None:
                continue
            if 2 * i <= l:
                assert max_content(l, i) == best
            assert best <= max_content(l, i)
            assert best <= max_content_large(l, i)


def test_max_content_skew_dominates_exhaustive():
    for l in range(13):
        lams = list(enumerate_partitions(l))
        for m in range(l + 1):
            for lam in lams:
                for mu in enumerate_subpartitions(lam, m):
                    bound = max_content_skew(l, m, lam.remainder_size, mu.remainder_size)
                    assert content_sum(lam) - content_sum(mu) <= bound
