"""Seeded random streams.

A stream is identified by ``(seed, stream)``; the same pair always yields the
same draw sequence. Independent replicates should use distinct stream ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass
class RngStream:
    seed: int
    stream: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream <= _MASK64):
            raise ValueError("seed and stream must be 64-bit unsigned integers")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngStream":
        """A fresh stream sharing this seed."""
        return RngStream(self.seed, stream)

    # thin wrappers so callers never reach for global state
    def random(self, size=None):
        return self.generator.random(size)

    def uniform_open(self) -> float:
        """A uniform draw in the open interval (0, 1)."""
        u = self.generator.random()
        while u == 0.0:
            u = self.generator.random()
        return u


def as_stream(rng: "RngStream | int | None", stream: int = 0) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(int(np.random.SeedSequence().entropy) & _MASK64, stream)
    return RngStream(int(rng), stream)
