"""Marked point configurations and their transformations.

A configuration is a finite set of points in a box window, each carrying a
real energy mark.  Sampling covers the homogeneous Poisson case (with i.i.d.
marks) and a jittered-lattice testbed; the transformations are the energy
truncation, the low-temperature rescaling (x, E) -> (x/zeta, beta*E/zeta)
restricted to |E| <= zeta/beta, and the Palm augmentation that plants an
independently marked point at the origin.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyLaw
from .errors import ParameterError
from .geometry import Box
from .seeds import RngSeed, generator


@dataclass(frozen=True, eq=False)
class MarkedConfiguration:
    """Finite realisation of a marked point process inside a box window."""

    dimension: int
    window: Box
    positions: np.ndarray  # (n, d)
    energies: np.ndarray   # (n,)
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=float))
        en = np.ascontiguousarray(np.asarray(self.energies, dtype=float))
        if pos.ndim == 1:
            pos = pos.reshape(0, self.dimension) if pos.size == 0 else pos.reshape(1, -1)
        if pos.shape[0] != en.shape[0]:
            raise ParameterError("positions and energies must have matching length")
        if pos.size and pos.shape[1] != self.dimension:
            raise ParameterError("positions have wrong dimension")
        if self.window.dimension != self.dimension:
            raise ParameterError("window dimension mismatch")
        if self.validate and pos.size:
            if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(en)):
                raise ParameterError("positions and energies must be finite")
            if not np.all(self.window.contains(pos)):
                raise ParameterError("all positions must lie inside the window")
            if np.unique(pos, axis=0).shape[0] != pos.shape[0]:
                raise ParameterError("positions must be pairwise distinct")
        pos.setflags(write=False)
        en.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "energies", en)

    @property
    def n_points(self) -> int:
        return self.positions.shape[0]

    def subset(self, mask: np.ndarray) -> "MarkedConfiguration":
        """Sub-configuration keeping rows where ``mask`` holds, order unchanged."""
        return MarkedConfiguration(self.dimension, self.window,
                                   self.positions[mask], self.energies[mask],
                                   validate=False)

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "window": self.window.to_json(),
            "points": [{"x": list(map(float, x)), "e": float(e)}
                       for x, e in zip(self.positions, self.energies)],
        }

    def to_json_str(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj: dict) -> "MarkedConfiguration":
        pts = obj["points"]
        d = int(obj["dimension"])
        pos = np.asarray([p["x"] for p in pts], dtype=float).reshape(len(pts), d)
        en = np.asarray([p["e"] for p in pts], dtype=float)
        return cls(d, Box.from_json(obj["window"]), pos, en)


def sample_marked_ppp(rho: float, law: EnergyLaw, window: Box, seed: RngSeed) -> MarkedConfiguration:
    """Homogeneous Poisson sample of intensity ``rho`` with i.i.d. marks.

    The point count is Poisson(rho * volume), positions are uniform in the
    window and marks are drawn from ``law`` independently of everything else.
    ``rho = 0`` gives the empty configuration.
    """
    if not (rho >= 0) or not np.isfinite(rho):
        raise ParameterError(f"intensity must be nonnegative and finite, got {rho}")
    if window.volume <= 0:
        raise ParameterError("window must have positive volume")
    rng = generator(seed)
    n = int(rng.poisson(rho * window.volume)) if rho > 0 else 0
    pos = window.sample_uniform(rng, n)
    marks = law.sample(rng, n)
    return MarkedConfiguration(window.dimension, window, pos, marks, validate=False)


def energy_mask(conf: MarkedConfiguration, gamma: float) -> np.ndarray:
    """Boolean mask of the points with |E| <= gamma."""
    return np.abs(conf.energies) <= gamma


def truncate(conf: MarkedConfiguration, gamma: float) -> MarkedConfiguration:
    """Keep exactly the points with |E| <= gamma; order and coordinates unchanged."""
    return conf.subset(energy_mask(conf, gamma))


def mott_rescale(conf: MarkedConfiguration, zeta: float, beta: float) -> MarkedConfiguration:
    """Low-temperature rescaling.

    Keeps the points with |E| <= zeta/beta and maps (x, E) to
    (x/zeta, beta*E/zeta); the window shrinks by the same factor 1/zeta.
    """
    if not (zeta > 0 and beta > 0):
        raise ParameterError("zeta and beta must be positive")
    keep = energy_mask(conf, zeta / beta)
    pos = conf.positions[keep] / zeta
    marks = conf.energies[keep] * (beta / zeta)
    return MarkedConfiguration(conf.dimension, conf.window.rescaled(1.0 / zeta),
                               pos, marks, validate=False)


def mott_length(lam: float, rho: float, C0: float, alpha: float, d: int, beta: float) -> float:
    """Rescaling length ell(beta) = (lam/rho)^(1/(a+1+d)) * (C0*beta)^((a+1)/(a+1+d))."""
    if min(lam, rho, C0, beta) <= 0 or alpha < 0 or d < 1:
        raise ParameterError("parameters must be positive (alpha >= 0, d >= 1)")
    expo = 1.0 / (alpha + 1.0 + d)
    return float((lam / rho) ** expo * (C0 * beta) ** ((alpha + 1.0) * expo))


def palm_augment(conf: MarkedConfiguration, law: EnergyLaw, seed: RngSeed) -> MarkedConfiguration:
    """Add one point at the origin with an independent mark; origin gets index 0."""
    origin = np.zeros((1, conf.dimension))
    if not bool(conf.window.contains(origin)[0]):
        raise ParameterError("origin lies outside the configuration window")
    mark = law.sample(generator(seed), 1)
    pos = np.vstack([origin, conf.positions]) if conf.n_points else origin
    marks = np.concatenate([mark, conf.energies])
    return MarkedConfiguration(conf.dimension, conf.window, pos, marks, validate=False)


def sample_perturbed_lattice(spacing: float, jitter: float, law: EnergyLaw,
                             window: Box, seed: RngSeed) -> MarkedConfiguration:
    """Jittered lattice: one point per cell, displaced by +-jitter*spacing.

    Cells are anchored at the window's lower corner; only cells entirely
    inside the window are populated, so the count is the product of
    floor(side/spacing) over the axes.  jitter in [0, 1/2] keeps every point
    inside its own cell.  A non-Poisson testbed for the rescaling limit.
    """
    if not (spacing > 0):
        raise ParameterError("spacing must be positive")
    if not (0 <= jitter <= 0.5):
        raise ParameterError("jitter must lie in [0, 1/2]")
    d = window.dimension
    lo = np.asarray(window.lo)
    hi = np.asarray(window.hi)
    counts = np.floor((hi - lo) / spacing + 1e-12).astype(int)
    if np.any(counts <= 0):
        return MarkedConfiguration(d, window, np.empty((0, d)), np.empty(0), validate=False)
    grids = np.meshgrid(*[lo[k] + spacing * (np.arange(counts[k]) + 0.5) for k in range(d)],
                        indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=1)
    rng = generator(seed)
    disp = jitter * spacing * (2.0 * rng.random(centers.shape) - 1.0)
    marks = law.sample(rng, centers.shape[0])
    return MarkedConfiguration(d, window, centers + disp, marks, validate=False)
