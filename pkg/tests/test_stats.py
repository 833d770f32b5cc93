import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from jacobs_ladder import reference
from jacobs_ladder.errors import InsufficientDataError, InvariantViolation
from jacobs_ladder.sieve import BasePrimeOracle, trial_division_is_prime
from jacobs_ladder.stats import (
    BENFORD,
    BalanceAccumulator,
    GapHistogram,
    average_gap,
    balance,
    benford_histogram,
    exp_decay_fit,
    gap_histogram,
    gap_percentage_report,
    gap_share_series,
    jumping_champions,
    last_digit_histogram,
    primes_in_zeroes,
    slope_fit,
    slope_models,
    slope_series,
    zero_counts_at,
    zero_growth_report,
)
from jacobs_ladder.walker import CrossingRecord, naive_walk, triangle_ladder, walk


@pytest.fixture(scope="module")
def zeroes_1e6():
    return walk(10**6, segment_size=10**5).zeroes


def test_gap_histogram_small():
    h = gap_histogram(CrossingRecord(0, [1, 3, 7]))
    assert h.counts == {2: 1, 4: 1}
    assert h.total_gaps == 2 and h.max_gap == 4


def test_gap_histogram_structure(zeroes_1e6):
    h = gap_histogram(zeroes_1e6)
    assert sum(h.counts.values()) == h.total_gaps == len(zeroes_1e6.positions) - 1
    assert h.counts[2] == 1
    assert all(g % 4 == 0 for g in h.counts if g != 2)


def test_exp_fit_exact():
    h = GapHistogram({4: math.exp(8), 8: math.exp(7), 12: math.exp(6)}, 3, 12)
    fit = exp_decay_fit(h)
    assert fit.rate == pytest.approx(0.25, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.amplitude == pytest.approx(math.exp(9), rel=1e-12)


def test_exp_fit_needs_three_gaps():
    with pytest.raises(InsufficientDataError):
        exp_decay_fit(GapHistogram({2: 1, 4: 5}, 6, 4))


def test_exp_fit_cutoff_excludes_large_gaps():
    h = GapHistogram({4: 100, 8: 50, 12: 25, 2000: 1}, 176, 2000)
    assert exp_decay_fit(h, 1000).fit_range == (4, 12)


def test_exp_fit_decays_at_1e6(zeroes_1e6):
    assert exp_decay_fit(gap_histogram(zeroes_1e6)).rate > 0


def test_jumping_champions():
    assert jumping_champions(GapHistogram({2: 1}, 1, 2), 3) == [(2, 1)]
    h = GapHistogram({4: 5, 8: 5, 12: 2}, 12, 12)
    assert jumping_champions(h, 2) == [(4, 5), (8, 5)]


def test_champion_four_on_every_prefix(zeroes_1e6):
    pos = zeroes_1e6.positions
    for k in range(3, len(pos) + 1):
        h = gap_histogram(pos[:k])
        if 4 in h.counts:
            # on the prefixes ending at 7 and 35 gap 4 ties with the lone gap 2, which wins the tie
            top_gap, top_count = jumping_champions(h, 1)[0]
            assert h.counts[4] == top_count
            assert top_gap == 4 or k <= 4


def test_average_gap():
    g = average_gap(CrossingRecord(0, [1, 3, 7]), 10)
    assert g.gamma == 3.0
    assert g.xi == pytest.approx(10 / 3)
    with pytest.raises(InsufficientDataError):
        average_gap([1], 10)


def test_average_gap_reference_flag():
    g = average_gap([1, 3, 7], 10, reference=3.02)
    assert g.matches == ["gamma"]


def test_gap_percentages():
    rep = gap_percentage_report(GapHistogram({4: 3, 8: 1}, 4, 8), gaps=(4,))
    assert rep.per_gap[4] == 75.0
    assert rep.at_most[100] == 100.0


def test_gap_share_series():
    series = gap_share_series([1, 3, 7, 11, 19])
    assert series[-1] == (5, {4: 50.0, 8: 25.0, 12: 0.0})


def test_benford_expected_vector():
    assert BENFORD[1] == pytest.approx(0.30103, abs=1e-5)
    assert BENFORD[9] == pytest.approx(0.04576, abs=1e-5)
    assert math.fsum(BENFORD.values()) == pytest.approx(1.0, abs=1e-12)


def test_benford_small():
    rep = benford_histogram([1, 3, 7])
    assert rep.observed[1] == rep.observed[3] == rep.observed[7] == pytest.approx(1 / 3)
    assert rep.observed[2] == 0
    with pytest.raises(InsufficientDataError):
        benford_histogram([])


def test_last_digit_small():
    rep = last_digit_histogram(CrossingRecord(0, [1, 3, 7]))
    assert rep.counts == {1: 1, 3: 1, 5: 0, 7: 1, 9: 0}


def test_last_digit_rejects_even_zero():
    with pytest.raises(InvariantViolation):
        last_digit_histogram(CrossingRecord(0, [1, 3, 8]))


def test_last_digit_even_level_without_odd_positions():
    with pytest.raises(InsufficientDataError):
        last_digit_histogram(CrossingRecord(1, [2, 4, 6]))


def test_last_digit_fit_on_reference_counts():
    positions = [10 * i + d for d, c in reference.LAST_DIGIT_COUNTS.items() for i in range(c)]
    rep = last_digit_histogram(CrossingRecord(0, positions))
    fit = reference.LAST_DIGIT_FIT
    assert rep.a == pytest.approx(fit["a"], abs=5e-6)
    assert rep.b == pytest.approx(fit["b"], abs=5e-6)
    assert rep.se_a == pytest.approx(fit["se_a"], abs=5e-6)
    assert rep.se_b == pytest.approx(fit["se_b"], abs=5e-6)


def test_last_digits_of_level0_are_odd(zeroes_1e6):
    rep = last_digit_histogram(zeroes_1e6)
    assert sum(rep.counts.values()) == len(zeroes_1e6.positions)


def test_balance_unit_triangles():
    up = balance([(1, 0), (2, 1), (3, 0)])
    assert (up.c_pos, up.c_neg, up.c_zero) == (1, 0, 2)
    assert up.a_pos == 1 and up.a_neg == 0
    down = balance([(1, 0), (2, -1), (3, 0)])
    assert (down.c_pos, down.c_neg) == (0, 1)
    assert down.a_neg == Fraction(1)


def test_balance_rejects_non_unit_step():
    with pytest.raises(InvariantViolation):
        balance([(1, 1), (2, -1)])


@settings(max_examples=60, deadline=None)
@given(steps=st.lists(st.sampled_from([-1, 1]), min_size=2, max_size=60),
       cut=st.integers(1, 59))
def test_balance_merge_associative(steps, cut):
    ys = [0]
    for s in steps:
        ys.append(ys[-1] + s)
    pts = list(enumerate(ys, 1))
    cut = min(cut, len(pts) - 1)
    whole = balance(pts)
    merged = balance(pts[:cut]).merge(balance(pts[cut:]))
    assert merged.snapshot() == whole.snapshot()
    assert merged.points == len(pts)
    assert whole.a_pos >= 0 and whole.a_neg >= 0


def test_empty_accumulator_merge():
    acc = balance([(1, 0), (2, 1)])
    assert BalanceAccumulator().merge(acc).snapshot() == acc.snapshot()
    assert acc.merge(BalanceAccumulator()).snapshot() == acc.snapshot()


def test_slope_fit_exact_lines():
    assert slope_fit([(1, 1), (2, 2), (3, 3)]) == 1.0
    assert slope_fit([(1, -1), (2, -2)]) == -1.0
    line = [(x, 3 * x) for x in range(1, 100)]
    assert {slope_fit(line, d) for d in (1, 2, 7, 50)} == {3.0}
    with pytest.raises(InsufficientDataError):
        slope_fit([(0, 0)])


def test_slope_agrees_with_accumulator():
    pts = list(enumerate(naive_walk(5000), 1))
    assert balance(pts).slope == pytest.approx(slope_fit(pts), rel=1e-12)


def test_triangle_slope_bounded_away_from_zero():
    series = slope_series(triangle_ladder(6).points)
    assert min(abs(e) for _, e in series) > 0.1


def test_slope_series_selection():
    pts = [(1, 1), (2, 2), (3, 0)]
    assert slope_series(pts, at=[2]) == [(2, 1.0)]


def test_slope_models():
    acc = walk(100, segment_size=10).balance
    m = slope_models(100, acc, 25)
    assert m["inv_pi"] == 0.04
    assert m["inv_sqrt_pi"] == 0.2
    assert m["diff_over_n"] > 0
    assert slope_models(10**6, acc, 78498)["inv_pi"] == 1 / 78498


def test_primes_in_zeroes_small():
    res = primes_in_zeroes([1, 3, 7], trial_division_is_prime)
    assert res.primes == 2
    assert res.n_over_log_n == pytest.approx(3 / math.log(3))
    with pytest.raises(InsufficientDataError):
        primes_in_zeroes([1], trial_division_is_prime)


def test_primes_in_zeroes_oracles_agree(zeroes_1e6):
    a = primes_in_zeroes(zeroes_1e6, trial_division_is_prime)
    b = primes_in_zeroes(zeroes_1e6, BasePrimeOracle(10**6))
    assert a == b
    assert (a.zeroes, a.primes) == (151, 37)
    assert a.n_over_log_n == pytest.approx(30.096, abs=0.001)


def test_primes_line_layout():
    res = primes_in_zeroes(list(range(2415)), lambda n: n < 313)
    assert res.line() == "313 primes / 2415 zeroes; X/logX=310.034; diff=0.947%"


def test_zero_growth(zeroes_1e6):
    counts = zero_counts_at(zeroes_1e6, [100, 10**6])
    assert counts == [(100, 11), (10**6, 151)]
    rep = zero_growth_report([(10**6, 151, 78498), (100, 10)])
    assert rep.rows[0].cbrt_n == pytest.approx(100) and rep.rows[0].sqrt_n == 1000
    assert rep.rows[0].in_band
    assert rep.rows[1].zeroes == rep.rows[1].sqrt_n == 10 and rep.rows[1].in_band
    assert rep.outside_band == []
