"""Blackwell's bet on two envelopes.

Open one envelope at random, draw a threshold ``r`` from any law, keep the
opened amount ``m`` when ``r <= m`` and switch otherwise.  With amounts
``S < L`` the rule ends with ``L`` with probability
``1/2 + (F(L) - F(S)) / 2``, where F is the threshold CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .rng import RngStream
from .stats import Tally


class DistributionError(ValueError):
    pass


class BetDecision(Enum):
    KEEP = "keep"
    SWITCH = "switch"


@dataclass(frozen=True)
class EnvelopePair:
    s: float
    l: float

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"the smaller amount must be positive, got {self.s}")
        if not self.s < self.l:
            raise ValueError(f"need s < l, got s={self.s}, l={self.l}")


@dataclass(frozen=True)
class ThresholdDistribution:
    """A threshold law given by its CDF and a vectorised sampler.

    ``sample(generator, size)`` returns a float array; ``spec`` is the string
    the law was parsed from and is what reports echo back.
    """

    spec: str
    cdf: Callable[[float], float]
    sample: Callable[[np.random.Generator, int], np.ndarray]


def uniform(a: float, b: float) -> ThresholdDistribution:
    if not a < b:
        raise DistributionError(f"uniform needs a < b, got {a}, {b}")

    def cdf(x):
        return min(1.0, max(0.0, (x - a) / (b - a)))

    return ThresholdDistribution(f"uniform:{a:g},{b:g}", cdf, lambda g, n: g.uniform(a, b, n))


def exponential(rate: float) -> ThresholdDistribution:
    if not rate > 0:
        raise DistributionError(f"exponential rate must be positive, got {rate}")

    def cdf(x):
        return 0.0 if x < 0 else -math.expm1(-rate * x)

    return ThresholdDistribution(f"exp:{rate:g}", cdf, lambda g, n: g.exponential(1 / rate, n))


def gaussian(mean: float, sd: float) -> ThresholdDistribution:
    if not sd > 0:
        raise DistributionError(f"normal sd must be positive, got {sd}")

    def cdf(x):
        return 0.5 * math.erfc(-(x - mean) / (sd * math.sqrt(2)))

    return ThresholdDistribution(f"normal:{mean:g},{sd:g}", cdf, lambda g, n: g.normal(mean, sd, n))


def point_mass(x0: float) -> ThresholdDistribution:
    def cdf(x):
        return 1.0 if x >= x0 else 0.0

    return ThresholdDistribution(f"point:{x0:g}", cdf, lambda g, n: np.full(n, float(x0)))


_CONSTRUCTORS = {
    "uniform": (uniform, 2),
    "exp": (exponential, 1),
    "normal": (gaussian, 2),
    "point": (point_mass, 1),
}


def parse_distribution(text: str) -> ThresholdDistribution:
    """Parse ``uniform:a,b``, ``exp:rate``, ``normal:mu,sigma`` or ``point:x``."""
    name, _, args = text.partition(":")
    if name not in _CONSTRUCTORS:
        raise DistributionError(f"unknown distribution {name!r}; expected one of {sorted(_CONSTRUCTORS)}")
    make, arity = _CONSTRUCTORS[name]
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise DistributionError(f"non-numeric parameter in {text!r}") from None
    if len(values) != arity:
        raise DistributionError(f"{name} takes {arity} parameter(s), got {len(values)} in {text!r}")
    return make(*values)


def decide(m: float, r: float) -> BetDecision:
    return BetDecision.KEEP if r <= m else BetDecision.SWITCH


def exact_success_probability(pair: EnvelopePair, dist: ThresholdDistribution) -> float:
    lo, hi = dist.cdf(pair.s), dist.cdf(pair.l)
    if hi < lo:
        raise DistributionError(f"CDF of {dist.spec} decreases between {pair.s} and {pair.l}")
    return 0.5 + (hi - lo) / 2


def simulate_bets(
    pair: EnvelopePair, dist: ThresholdDistribution, trials: int, stream: RngStream
) -> dict[str, Tally]:
    """Play ``trials`` bets; returns the overall tally and one per opened envelope.

    Per trial the stream yields the envelope pick first, then the threshold;
    both are drawn in bulk, picks before thresholds.
    """
    if trials < 0:
        raise ValueError(f"trials must be non-negative, got {trials}")
    g = stream.generator
    opened_small = g.random(trials) < 0.5
    r = dist.sample(g, trials)
    m = np.where(opened_small, pair.s, pair.l)
    keep = r <= m
    # small opened: success means switching; large opened: success means keeping
    won = np.where(opened_small, ~keep, keep)
    n_small = int(opened_small.sum())
    won_small = int(won[opened_small].sum())
    won_total = int(won.sum())
    return {
        "overall": Tally(won_total, trials),
        "small_opened": Tally(won_small, n_small),
        "large_opened": Tally(won_total - won_small, trials - n_small),
    }
