"""Tallies, Wilson intervals and exact one-sided binomial tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import bdtr
from scipy.stats import binom, norm

COUNT_MAX = 2**63 - 1


class UndefinedEstimate(ValueError):
    """Raised when an estimate is requested from an empty tally."""


@dataclass(frozen=True)
class Tally:
    successes: int = 0
    trials: int = 0

    def __post_init__(self):
        if self.trials < 0 or self.successes < 0:
            raise ValueError(f"negative counts in {self}")
        if self.successes > self.trials:
            raise ValueError(f"successes exceed trials in {self}")

    def __add__(self, other: "Tally") -> "Tally":
        return merge_tallies(self, other)

    @property
    def rate(self) -> float | None:
        return self.successes / self.trials if self.trials else None


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lo: float
    hi: float
    level: float


def merge_tallies(a: Tally, b: Tally) -> Tally:
    trials = a.trials + b.trials
    if trials > COUNT_MAX:
        raise OverflowError("tally trial count exceeds the 64-bit counter range")
    return Tally(a.successes + b.successes, trials)


def wilson_interval(t: Tally, level: float = 0.95) -> IntervalEstimate:
    if t.trials == 0:
        raise UndefinedEstimate("Wilson interval of an empty tally")
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    z = float(norm.ppf(0.5 + level / 2))
    n = t.trials
    p = t.successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # clamp the float noise at the endpoints so lo <= point <= hi holds exactly
    return IntervalEstimate(p, max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p)), level)


class Flag(Enum):
    TRIGGERED = "triggered"
    NOT_TRIGGERED = "not_triggered"

    def __bool__(self) -> bool:
        return self is Flag.TRIGGERED


def binomial_p_value(t: Tally, p0: float, side: str = "below") -> float:
    if not 0 < p0 < 1:
        raise ValueError(f"null rate must lie in (0, 1), got {p0}")
    if side == "below":
        return float(binom.cdf(t.successes, t.trials, p0))
    if side == "above":
        return float(binom.sf(t.successes - 1, t.trials, p0))
    raise ValueError(f"side must be 'below' or 'above', got {side!r}")


def binomial_flag(t: Tally, p0: float, alpha: float, side: str = "below") -> Flag:
    """Exact one-sided binomial test of ``rate == p0``; triggered iff p-value < alpha."""
    if t.trials < 1:
        raise UndefinedEstimate("binomial test on an empty tally")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return Flag.TRIGGERED if binomial_p_value(t, p0, side) < alpha else Flag.NOT_TRIGGERED


def binomial_tail_exact(successes: int, trials: int, p0: Fraction = Fraction(1, 2)) -> Fraction:
    """P(X <= successes) for X ~ Binomial(trials, p0), in exact rationals."""
    p0 = Fraction(p0)
    q0 = 1 - p0
    return sum(
        (math.comb(trials, k) * p0**k * q0 ** (trials - k) for k in range(successes + 1)),
        Fraction(0),
    )


class CriticalCounts:
    """Decides ``P(X <= k) < alpha`` for X ~ Binomial(n, 1/2) over many (n, k) at once.

    The largest rejecting count ``crit(n)`` is nondecreasing in n, so exact
    values on every ``STRIDE``-th n bracket it everywhere; only pairs falling
    inside a bracket need their own tail evaluation.
    """

    STRIDE = 64

    def __init__(self, alpha: float):
        self.alpha = alpha
        self.sparse = np.full(1, -1, dtype=np.int64)  # crit at n = 0, STRIDE, 2*STRIDE, ...

    def _extend(self, n_max: int) -> None:
        needed = n_max // self.STRIDE + 2
        if needed <= len(self.sparse):
            return
        size = max(needed, len(self.sparse) + len(self.sparse) // 4)
        n = np.arange(len(self.sparse), size) * self.STRIDE
        # ppf is the smallest k with cdf(k) >= alpha; everything below rejects
        extra = binom.ppf(self.alpha, n, 0.5).astype(np.int64) - 1
        self.sparse = np.concatenate([self.sparse, extra])

    def critical(self, n: int) -> int:
        return int(binom.ppf(self.alpha, n, 0.5)) - 1 if n > 0 else -1

    def rejects(self, n: np.ndarray, k: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        k = np.asarray(k, dtype=np.int64)
        if not n.size:
            return np.zeros(0, dtype=bool)
        self._extend(int(n.max()))
        lower = self.sparse[n // self.STRIDE]
        upper = self.sparse[-(-n // self.STRIDE)]
        out = k <= lower
        unsure = (k > lower) & (k <= upper)
        if unsure.any():
            out[unsure] = bdtr(k[unsure], n[unsure], 0.5) < self.alpha
        return out


@lru_cache(maxsize=8)
def critical_counts(alpha: float) -> CriticalCounts:
    return CriticalCounts(alpha)
