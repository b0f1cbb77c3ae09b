"""Seeded, stream-addressable random number generation.

Every random draw in the toolkit is made from a generator derived from a
``(seed, stream)`` pair so that Monte Carlo trials can be replayed one at a
time and executed in any order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

# well-known stream ids used inside a single trial
PLACEMENT = 0
POSITION_NOISE = 1
SHADOWING = 2
COVERAGE = 3
CONTROL_LINKS = 4


@dataclass(frozen=True)
class Rng:
    """A reproducible random stream.

    ``stream`` may be a single integer or a tuple of integers; the tuple form
    addresses nested streams (sweep point, trial, purpose).
    """

    seed: int
    stream: Union[int, tuple] = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def key(self) -> tuple:
        if isinstance(self.stream, tuple):
            return tuple(int(s) for s in self.stream)
        return (int(self.stream),)

    def child(self, *keys: int) -> "Rng":
        return Rng(self.seed, self.key + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))


RngLike = Union[Rng, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, Rng):
        return rng.generator()
    return np.random.default_rng(rng)
