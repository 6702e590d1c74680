from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointerlab.stats import (
    CriticalCounts,
    Flag,
    Tally,
    UndefinedEstimate,
    binomial_flag,
    binomial_tail_exact,
    merge_tallies,
    wilson_interval,
)


def test_merge_examples():
    assert merge_tallies(Tally(3, 10), Tally(2, 5)) == Tally(5, 15)
    assert merge_tallies(Tally(), Tally(4, 9)) == Tally(4, 9)


def test_merge_overflow():
    with pytest.raises(OverflowError):
        merge_tallies(Tally(0, 2**62), Tally(0, 2**62))


def test_tally_invariant():
    with pytest.raises(ValueError):
        Tally(3, 2)


tallies = st.integers(0, 10**9).flatmap(lambda n: st.builds(Tally, st.integers(0, n), st.just(n)))


@settings(max_examples=1000)
@given(tallies, tallies, tallies)
def test_merge_associative_and_commutative(a, b, c):
    assert merge_tallies(merge_tallies(a, b), c) == merge_tallies(a, merge_tallies(b, c))
    assert merge_tallies(a, b) == merge_tallies(b, a)


def test_wilson_half():
    ci = wilson_interval(Tally(500, 1000), 0.95)
    assert ci.point == 0.5
    assert ci.lo == pytest.approx(0.469, abs=5e-4)
    assert ci.hi == pytest.approx(0.531, abs=5e-4)


def test_wilson_all_successes():
    ci = wilson_interval(Tally(1000, 1000), 0.95)
    assert ci.hi == 1.0
    assert ci.lo > 0.99
    assert ci.lo == pytest.approx(0.9962, abs=1e-4)


def test_wilson_single_failure():
    ci = wilson_interval(Tally(0, 1), 0.95)
    assert ci.lo == 0.0 and ci.hi < 1


def test_wilson_empty():
    with pytest.raises(UndefinedEstimate):
        wilson_interval(Tally(), 0.95)


@given(tallies.filter(lambda t: t.trials > 0), st.floats(0.5, 0.999))
def test_wilson_brackets_point(t, level):
    ci = wilson_interval(t, level)
    assert 0 <= ci.lo <= ci.point <= ci.hi <= 1


def test_wilson_coverage():
    rng = np.random.default_rng(11)
    p, n = 11 / 18, 400
    hits = 0
    for _ in range(200):
        k = int(rng.binomial(n, p))
        ci = wilson_interval(Tally(k, n), 0.95)
        hits += ci.lo <= p <= ci.hi
    assert hits >= 186


def test_exact_tails():
    assert binomial_tail_exact(0, 10) == Fraction(1, 1024)
    assert binomial_tail_exact(5, 10) == Fraction(638, 1024)


def test_binomial_flag_examples():
    assert binomial_flag(Tally(0, 10), 0.5, 0.001, "below") is Flag.TRIGGERED
    assert binomial_flag(Tally(5, 10), 0.5, 0.001, "below") is Flag.NOT_TRIGGERED
    assert binomial_flag(Tally(10, 10), 0.5, 0.05, "below") is Flag.NOT_TRIGGERED
    assert binomial_flag(Tally(10, 10), 0.5, 0.05, "above") is Flag.TRIGGERED


def test_binomial_flag_errors():
    with pytest.raises(ValueError):
        binomial_flag(Tally(1, 2), 1.0, 0.01)
    with pytest.raises(ValueError):
        binomial_flag(Tally(1, 2), 0.0, 0.01)
    with pytest.raises(UndefinedEstimate):
        binomial_flag(Tally(), 0.5, 0.01)


@pytest.mark.parametrize("alpha", [0.001, 0.05])
def test_critical_counts_match_flag_small_n(alpha):
    table = CriticalCounts(alpha)
    for n in range(1, 300):
        ks = np.arange(0, n + 1)
        fast = table.rejects(np.full(n + 1, n), ks)
        slow = np.array([bool(binomial_flag(Tally(int(k), n), 0.5, alpha)) for k in ks])
        assert np.array_equal(fast, slow), n


def test_critical_counts_match_exact_rationals_at_boundary():
    alpha = 0.001
    table = CriticalCounts(alpha)
    for n in (10, 64, 65, 127, 500, 1000, 1001):
        crit = table.critical(n)
        assert binomial_tail_exact(crit, n) < Fraction(alpha) if crit >= 0 else True
        assert binomial_tail_exact(crit + 1, n) >= Fraction(alpha)
        assert table.rejects(np.array([n, n]), np.array([crit, crit + 1])).tolist() == [True, False]


def test_critical_counts_large_n_brackets():
    table = CriticalCounts(0.001)
    n = np.arange(100_000, 100_500)
    crit = np.array([table.critical(int(v)) for v in n[::37]])
    got = table.rejects(n[::37], crit)
    assert got.all()
    assert not table.rejects(n[::37], crit + 1).any()
