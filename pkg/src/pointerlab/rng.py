"""Seeded, splittable random streams.

Stream ``(seed, index)`` is a PCG64 generator keyed by
``numpy.random.SeedSequence(entropy=seed, spawn_key=(index,))``.  This is the
same key ``SeedSequence(seed).spawn(k)[index]`` would produce, so any replica
can be rebuilt on its own without replaying the others.

Bulk draws consume the generator exactly like the equivalent run of scalar
draws: ``uniform_positions(s, n)`` returns the same values as ``n`` calls to
``uniform_position(s)``, and a coin is heads iff a uniform draw is below 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Direction

SEED_MAX = 2**64 - 1


@dataclass
class RngStream:
    seed: int
    index: int
    generator: np.random.Generator = field(repr=False)

    @property
    def lineage(self) -> tuple[int, int]:
        return self.seed, self.index


def derive_stream(seed: int, index: int = 0) -> RngStream:
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if index < 0:
        raise ValueError(f"stream index must be non-negative, got {index}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return RngStream(seed, index, np.random.Generator(np.random.PCG64(sequence)))


def flip_coin(stream: RngStream) -> Direction:
    return Direction.from_heads(stream.generator.random() < 0.5)


def uniform_position(stream: RngStream) -> float:
    return stream.generator.random()


def flip_coins(stream: RngStream, n: int) -> np.ndarray:
    """``n`` fair coins as a boolean array, True meaning heads (CW)."""
    return stream.generator.random(n) < 0.5


def uniform_positions(stream: RngStream, n: int) -> np.ndarray:
    return stream.generator.random(n)
