import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvsign.combin import (Partition, PartitionFamily, binom_ratio, comb0, enumerate_partitions,
                           enumerate_subsets, log_binomial, log_factorial_ratio, log_sum_exp)
from cvsign.errors import CapacityError, DomainError


def stirling2(n, k):
    return sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)) // math.factorial(k)


def test_comb0_zero_convention():
    assert comb0(5, 2) == 10
    assert comb0(3, 4) == 0
    assert comb0(3, -1) == 0
    assert comb0(-1, 0) == 0


@given(st.integers(0, 3000), st.data())
def test_log_binomial_matches_exact(l, data):
    j = data.draw(st.integers(0, l))
    exact = math.log(math.comb(l, j)) if l else 0.0
    assert log_binomial(l, j) == pytest.approx(exact, rel=1e-13, abs=1e-12)


def test_log_binomial_out_of_range():
    assert log_binomial(4, 5) == -math.inf


@given(st.integers(1000, 10**9), st.integers(0, 200))
def test_log_factorial_ratio_large(b, d):
    a = b + d
    direct = math.fsum(math.log(b + i) for i in range(1, d + 1))
    assert log_factorial_ratio(a, b) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_log_factorial_ratio_stirling_branch():
    # d > 64 and b >= 1000 takes the Stirling difference
    b, d = 10**8, 5000
    direct = math.fsum(math.log(b + i) for i in range(1, d + 1))
    assert log_factorial_ratio(b + d, b) == pytest.approx(direct, rel=1e-13)


def test_binom_ratio_exact_and_float_agree():
    num, den = [(30, 7)], [(40, 8)]
    exact = binom_ratio(num, den)
    assert exact.exact == Fraction(math.comb(30, 7), math.comb(40, 8))
    big = binom_ratio([(129247013 - 27, 4)], [(129247013, 5)])
    ref = math.comb(129247013 - 27, 4) / math.comb(129247013, 5)
    assert big.value() == pytest.approx(ref, rel=1e-12)


def test_binom_ratio_zero_and_division():
    assert binom_ratio([(3, 5)], [(4, 2)]).is_zero
    with pytest.raises(ZeroDivisionError):
        binom_ratio([(4, 2)], [(3, 5)])


def test_log_sum_exp():
    assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2))
    assert log_sum_exp([-math.inf]) == -math.inf
    assert log_sum_exp([1000.0, 1000.0]) == pytest.approx(1000 + math.log(2))


def test_subsets():
    subs = list(enumerate_subsets(5, 2))
    assert len(subs) == 10 and subs[0] == (0, 1)
    with pytest.raises(CapacityError):
        enumerate_subsets(30, 2)
    with pytest.raises(DomainError):
        enumerate_subsets(5, 0)


def test_partition_canonical_and_str():
    p = Partition(3, ((2, 1), (0,)))
    assert p.blocks == ((0,), (1, 2))
    assert str(p) == "1|23"
    assert p == Partition(3, ((0,), (2, 1)))
    with pytest.raises(DomainError):
        Partition(3, ((0,), (1,)))


@pytest.mark.parametrize("n", range(2, 9))
def test_all_bipartition_count(n):
    assert len(PartitionFamily.all_bipartitions(n).partitions()) == 2 ** (n - 1) - 1


@pytest.mark.parametrize("n,k", [(4, 2), (5, 3), (6, 3), (6, 4), (7, 2), (7, 5)])
def test_k_separable_count(n, k):
    parts = PartitionFamily.k_separable(n, k).partitions()
    assert len(parts) == stirling2(n, k)
    assert len(set(parts)) == len(parts)


def test_fixed_size_and_sizes():
    assert len(PartitionFamily.fixed_size_bipartition(6, 2).partitions()) == 15
    assert len(PartitionFamily.fixed_size_bipartition(6, 3).partitions()) == 10
    parts = PartitionFamily.k_separable_sizes(6, (4, 1, 1)).partitions()
    assert len(parts) == 15
    assert all(sorted(p.sizes) == [1, 1, 4] for p in parts)


def test_j_producible_blocks_bounded():
    fam = PartitionFamily.j_producible(5, 3)
    parts = fam.partitions()
    assert all(max(p.sizes) <= 3 for p in parts)
    # Bell number B5 = 52 minus partitions with a block of 4 or 5 (5 + 1)
    assert len(parts) == 52 - 6
    assert PartitionFamily.j_producible(4, 4).accepts(Partition(4, ((0, 1, 2, 3),)))


def test_family_validation():
    with pytest.raises(DomainError):
        PartitionFamily.fixed_size_bipartition(4, 4)
    with pytest.raises(DomainError):
        PartitionFamily.k_separable_sizes(4, (2, 1))
    with pytest.raises(CapacityError):
        list(enumerate_partitions(PartitionFamily.all_bipartitions(30)))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.data())
def test_family_members_accepted(n, data):
    k = data.draw(st.integers(1, n))
    fam = PartitionFamily.k_separable(n, k)
    parts = fam.partitions()
    assert all(fam.accepts(p) for p in parts)
    assert all(sorted(x for b in p.blocks for x in b) == list(range(n)) for p in parts)
