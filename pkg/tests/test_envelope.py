import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from pointerlab.envelope import (
    BetDecision,
    DistributionError,
    EnvelopePair,
    ThresholdDistribution,
    decide,
    exact_success_probability,
    exponential,
    gaussian,
    parse_distribution,
    point_mass,
    simulate_bets,
    uniform,
)
from pointerlab.rng import derive_stream
from pointerlab.stats import Tally


def success_by_quadrature(s, l, pdf, lo, hi):
    """Integrate the per-threshold success chance against a density, breaking at s and l."""

    def win(r):
        # opened s: switch iff r > s; opened l: keep iff r <= l
        return 0.5 * (r > s) + 0.5 * (r <= l)

    points = sorted(p for p in (s, l) if lo < p < hi)
    edges = [lo, *points, hi]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        total += integrate.quad(lambda r: win(r) * pdf(r), a, b)[0]
    return total


@pytest.mark.parametrize(
    "m, r, expected",
    [(10, 3, BetDecision.KEEP), (10, 30, BetDecision.SWITCH), (10, 10, BetDecision.KEEP)],
)
def test_decide(m, r, expected):
    assert decide(m, r) is expected


def test_exact_uniform_0_4():
    pair = EnvelopePair(1, 2)
    assert exact_success_probability(pair, uniform(0, 4)) == 0.625
    assert success_by_quadrature(1, 2, lambda r: 0.25, 0, 4) == pytest.approx(0.625, abs=1e-9)


def test_exact_degenerate_laws():
    pair = EnvelopePair(1, 2)
    assert exact_success_probability(pair, point_mass(5)) == 0.5
    assert exact_success_probability(pair, uniform(1, 2)) == 1.0


@pytest.mark.parametrize(
    "dist, pdf, lo, hi",
    [
        (exponential(0.7), lambda r: 0.7 * math.exp(-0.7 * r), 0, 60),
        (gaussian(1.5, 0.8), lambda r: stats.norm.pdf(r, 1.5, 0.8), -8, 11),
        (uniform(-1, 3), lambda r: 0.25, -1, 3),
    ],
)
def test_exact_matches_quadrature(dist, pdf, lo, hi):
    pair = EnvelopePair(1, 2)
    assert exact_success_probability(pair, dist) == pytest.approx(success_by_quadrature(1, 2, pdf, lo, hi), abs=1e-7)


def test_invalid_distribution_detected():
    broken = ThresholdDistribution("broken", lambda x: 1 - min(1, max(0, x / 4)), lambda g, n: g.random(n))
    with pytest.raises(DistributionError):
        exact_success_probability(EnvelopePair(1, 2), broken)


def test_pair_invariant():
    with pytest.raises(ValueError):
        EnvelopePair(2, 1)
    with pytest.raises(ValueError):
        EnvelopePair(0, 1)


def test_simulate_zero_trials():
    out = simulate_bets(EnvelopePair(1, 2), uniform(0, 4), 0, derive_stream(1))
    assert out["overall"] == Tally(0, 0)


def test_simulate_uniform_million():
    t = simulate_bets(EnvelopePair(1, 2), uniform(0, 4), 10**6, derive_stream(42))["overall"]
    assert abs(t.rate - 0.625) < 0.002


def test_simulate_point_mass_million():
    t = simulate_bets(EnvelopePair(1, 2), point_mass(5), 10**6, derive_stream(42))["overall"]
    assert abs(t.rate - 0.5) < 0.002


@pytest.mark.parametrize("spec", ["uniform:0,4", "exp:0.5", "normal:1.5,1", "point:1.5"])
def test_simulation_agrees_with_exact_within_four_sigma(spec):
    dist = parse_distribution(spec)
    pair = EnvelopePair(1, 2)
    exact = exact_success_probability(pair, dist)
    t = simulate_bets(pair, dist, 10**6, derive_stream(3))["overall"]
    band = 4 * math.sqrt(exact * (1 - exact) / t.trials) if 0 < exact < 1 else 0
    assert abs(t.rate - exact) <= band


@pytest.mark.parametrize("spec", ["uniform:0,4", "exp:0.5", "normal:1.5,1"])
def test_sampler_matches_cdf(spec):
    dist = parse_distribution(spec)
    x = dist.sample(derive_stream(8).generator, 20000)
    result = stats.kstest(x, np.vectorize(dist.cdf))
    assert result.pvalue > 1e-4


@pytest.mark.parametrize("spec", ["uniform:0,4", "exp:0.5", "normal:1.5,1", "point:2"])
def test_cdf_monotone_with_limits(spec):
    cdf = parse_distribution(spec).cdf
    grid = np.linspace(-50, 50, 2001)
    values = [cdf(x) for x in grid]
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[0] == pytest.approx(0, abs=1e-9) and values[-1] == pytest.approx(1, abs=1e-9)


@given(
    st.floats(0.1, 10), st.floats(0.01, 10), st.floats(-20, 20), st.floats(0.05, 10),
)
def test_exact_at_least_half(s, gap, mu, sd):
    pair = EnvelopePair(s, s + gap)
    value = exact_success_probability(pair, gaussian(mu, sd))
    assert 0.5 <= value <= 1


@given(st.floats(0.5, 1.9), st.floats(0.01, 3))
def test_more_mass_inside_never_hurts(width, extra):
    # shrinking a uniform law around (1, 2) moves mass into the interval
    pair = EnvelopePair(1, 2)
    wide = exact_success_probability(pair, uniform(1.5 - width - extra, 1.5 + width + extra))
    narrow = exact_success_probability(pair, uniform(1.5 - width, 1.5 + width))
    assert narrow >= wide


@pytest.mark.parametrize("bad", ["cauchy:1", "uniform:1", "uniform:a,b", "exp:-1", "normal:0,0", "uniform:3,1"])
def test_parse_errors(bad):
    with pytest.raises(DistributionError):
        parse_distribution(bad)
