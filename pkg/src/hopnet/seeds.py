"""Counter-based seeded random streams.

Every stochastic routine takes an explicit :class:`RngSeed`.  A seed is a
(key, stream) pair feeding a Philox counter-based generator, so replicas can
run in any order (or in parallel) and still produce bit-identical output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSeed:
    """A (seed, stream) pair; identical pairs reproduce identical draws."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (0 <= self.stream <= _MASK64):
            raise ValueError(f"stream must be a 64-bit unsigned integer, got {self.stream}")

    def replica(self, index: int) -> "RngSeed":
        """Seed for replica ``index``: same key, shifted stream."""
        return RngSeed(self.seed, (self.stream + index) & _MASK64)

    def child(self, tag: int) -> "RngSeed":
        """Derived seed for a sub-task; distinct tags give independent streams.

        A multiplicative split keeps child streams of different parents from
        colliding for any realistic replica/tag counts.
        """
        return RngSeed(self.seed, (self.stream * 0x9E3779B97F4A7C15 + tag + 1) & _MASK64)

    def to_json(self) -> dict:
        return {"seed": self.seed, "stream": self.stream}

    @classmethod
    def from_json(cls, obj: dict) -> "RngSeed":
        return cls(int(obj["seed"]), int(obj.get("stream", 0)))


def generator(seed: RngSeed) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)."""
    return np.random.Generator(np.random.Philox(key=[seed.seed, seed.stream]))
