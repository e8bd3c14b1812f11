"""Sampling windows and the stripe decomposition used by the resistor network.

The stripe of side ``ell`` in dimension ``d`` is the set
``S = R x (-ell/2, ell/2)^(d-1)``, split into a left slab (first coordinate
<= -ell/2), an open central box, and a right slab (first coordinate >= ell/2).
Points with any transverse coordinate of modulus >= ell/2 fall outside the
stripe and never participate in crossings or conductivity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Region codes returned by StripeGeometry.classify.
LEFT, BOX, RIGHT, OUTSIDE = 0, 1, 2, 3


@dataclass(frozen=True)
class Box:
    """Axis-aligned box window [lo_k, hi_k) per coordinate."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same dimension")
        if any(not np.isfinite(a) or not np.isfinite(b) for a, b in zip(lo, hi)):
            raise ValueError("window bounds must be finite")
        if any(b < a for a, b in zip(lo, hi)):
            raise ValueError("window must have hi >= lo in every coordinate")

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def contains(self, positions: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of ``positions`` inside the box."""
        x = np.atleast_2d(np.asarray(positions, dtype=float))
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((x >= lo) & (x <= hi), axis=1)

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return lo + (hi - lo) * rng.random((n, self.dimension))

    def rescaled(self, factor: float) -> "Box":
        """Image of the box under x -> x * factor."""
        return Box(tuple(v * factor for v in self.lo), tuple(v * factor for v in self.hi))

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, obj: dict) -> "Box":
        return cls(tuple(obj["lo"]), tuple(obj["hi"]))

    @classmethod
    def centered(cls, radius: float, dimension: int) -> "Box":
        return cls((-radius,) * dimension, (radius,) * dimension)


@dataclass(frozen=True)
class StripeGeometry:
    """Stripe of side ``ell`` in dimension ``d`` with its three-way split."""

    d: int
    ell: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if not (self.ell > 0):
            raise ValueError("stripe side must be positive")

    def classify(self, positions: np.ndarray) -> np.ndarray:
        """Region code (LEFT/BOX/RIGHT/OUTSIDE) per point.

        The central box is open; the slabs are closed at x1 = +-ell/2; any
        transverse coordinate with |x_k| >= ell/2 puts the point outside.
        """
        x = np.atleast_2d(np.asarray(positions, dtype=float))
        if x.shape[1] != self.d:
            raise ValueError(f"positions have dimension {x.shape[1]}, geometry has d={self.d}")
        half = self.ell / 2.0
        out = np.full(x.shape[0], BOX, dtype=np.int8)
        if self.d > 1:
            outside = np.any(np.abs(x[:, 1:]) >= half, axis=1)
            out[outside] = OUTSIDE
        left = (x[:, 0] <= -half) & (out != OUTSIDE)
        right = (x[:, 0] >= half) & (out != OUTSIDE)
        out[left] = LEFT
        out[right] = RIGHT
        return out

    def in_stripe(self, positions: np.ndarray) -> np.ndarray:
        return self.classify(positions) != OUTSIDE

    def rescaled(self, factor: float) -> "StripeGeometry":
        return StripeGeometry(self.d, self.ell * factor)

    def window(self, padding: float) -> Box:
        """Sampling box: the stripe truncated at |x1| <= ell/2 + padding.

        ``padding`` should be at least the longest edge range used downstream
        so that no edge incident to the central box is lost to the window
        boundary.
        """
        if padding < 0:
            raise ValueError("padding must be nonnegative")
        half = self.ell / 2.0
        lo = (-half - padding,) + (-half,) * (self.d - 1)
        hi = (half + padding,) + (half,) * (self.d - 1)
        return Box(lo, hi)

    def to_json(self) -> dict:
        return {"d": self.d, "ell": self.ell}
