import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacobs_ladder.errors import ContractViolation, RangeError
from jacobs_ladder.sieve import (
    BasePrimeOracle,
    SievePlan,
    base_primes_for,
    prime_count,
    prime_counts_at,
    segment_parity_prefix,
    sieve_segment,
    simple_sieve,
    trial_division_is_prime,
)


def oracle_primes(lo, hi):
    return [n for n in range(lo, hi) if trial_division_is_prime(n)]


@pytest.mark.parametrize("n, expected", [(0, False), (1, False), (2, True), (3, True), (4, False),
                                         (91, False), (97, True), (7919, True)])
def test_trial_division(n, expected):
    assert trial_division_is_prime(n) is expected


def test_segment_small_range():
    seg = sieve_segment(2, 30, [2, 3, 5])
    assert seg.primes().tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert seg.prime_count == 10


def test_segment_offset_range():
    seg = sieve_segment(100, 120, [2, 3, 5, 7])
    assert seg.primes().tolist() == [101, 103, 107, 109, 113]
    assert seg.prime_count == 5


def test_segment_single_element():
    seg = sieve_segment(3, 4, [2])
    assert seg.primes().tolist() == [3]
    assert seg.prime_count == 1
    assert seg.is_prime(3)
    with pytest.raises(RangeError):
        seg.is_prime(4)


def test_segment_rejects_bad_bounds():
    with pytest.raises(ContractViolation):
        sieve_segment(1, 10, [2, 3])
    with pytest.raises(ContractViolation):
        sieve_segment(10, 10, [2, 3])


def test_segment_rejects_missing_base_primes():
    with pytest.raises(ContractViolation):
        sieve_segment(100, 200, [2, 3, 5, 7, 11])


def test_indicator_matches_primes():
    seg = sieve_segment(50, 90, base_primes_for(90))
    ind = seg.indicator()
    assert ind.sum() == seg.prime_count
    assert [50 + i for i in np.flatnonzero(ind)] == oracle_primes(50, 90)


@settings(max_examples=60, deadline=None)
@given(lo=st.integers(2, 200_000), width=st.integers(1, 3000))
def test_segment_matches_trial_division(lo, width):
    hi = lo + width
    seg = sieve_segment(lo, hi, base_primes_for(hi))
    assert seg.primes().tolist() == oracle_primes(lo, hi)
    assert seg.prime_count == len(oracle_primes(lo, hi))


def test_simple_sieve():
    assert simple_sieve(1).tolist() == []
    assert simple_sieve(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


@pytest.mark.parametrize("limit, expected", [(1, 0), (2, 1), (100, 25), (10**6, 78498)])
def test_prime_count(limit, expected):
    assert prime_count(limit, segment_size=65_536) == expected


def test_prime_count_independent_of_segment_size():
    assert {prime_count(50_000, s) for s in (97, 1000, 10**6)} == {5133}


def test_plan_covers_range():
    plan = SievePlan.build(100, 30)
    assert plan.segments == ((2, 32), (32, 62), (62, 92), (92, 101))
    with pytest.raises(ContractViolation):
        SievePlan.build(100, 0)


def test_parity_prefix_examples():
    plan = SievePlan(39, 28, ((2, 30), (30, 40)))
    assert segment_parity_prefix(plan, [10, 5]) == [0, 0]
    assert segment_parity_prefix(SievePlan(1, 1, ()), []) == []
    three = SievePlan(10, 3, ((2, 5), (5, 8), (8, 11)))
    assert segment_parity_prefix(three, [4, 4, 2]) == [0, 0, 0]
    assert segment_parity_prefix(three, [3, 4, 2]) == [0, 1, 1]
    with pytest.raises(ContractViolation):
        segment_parity_prefix(three, [1, 2])


def test_base_prime_oracle():
    oracle = BasePrimeOracle(10_000)
    values = list(range(0, 10_001))
    assert oracle.is_prime_many(values).tolist() == [trial_division_is_prime(v) for v in values]
    assert oracle(9973) and not oracle(9971)
    with pytest.raises(RangeError):
        oracle(10_001)


def test_prime_counts_at():
    got = prime_counts_at([1, 10, 100, 1000, 7919], segment_size=300)
    assert got == {1: 0, 10: 4, 100: 25, 1000: 168, 7919: 1000}
