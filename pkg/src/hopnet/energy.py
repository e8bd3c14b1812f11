"""Energy-mark distributions.

Three families are supported:

* ``positive_power`` -- density (alpha+1) C0^(-alpha-1) E^alpha on [0, C0];
* ``signed_power``   -- density (alpha+1) / (2 C0^(alpha+1)) |E|^alpha on [-C0, C0];
* ``general_table``  -- piecewise-linear density on a user grid, sampled by
  inverse CDF.

The operations mirror the transformations the theory applies to marks:
``nu_mass`` (mass of [-gamma, gamma]), ``conditioned_law`` (restriction to
[-gamma, gamma], renormalised) and ``star_law`` (the conditioned law of
E/gamma, supported in [-1, 1]).  For the power families these are closed
under both operations: conditioning at gamma <= C0 yields the same family
with C0 replaced by gamma, and the star law is the family with C0 = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

POSITIVE_POWER = "positive_power"
SIGNED_POWER = "signed_power"
GENERAL_TABLE = "general_table"


@dataclass(frozen=True, eq=False)
class EnergyLaw:
    """Mark distribution with its class parameters.

    ``epsilon`` is the agreement radius: the law coincides with the pure
    power law of parameters (C0, alpha) on [-epsilon, epsilon].  For the
    exact power families epsilon equals C0.
    """

    kind: str
    C0: float = 1.0
    alpha: float = 0.0
    epsilon: float = None  # type: ignore[assignment]
    knots: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    density: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    _cdf_knots: np.ndarray = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.kind not in (POSITIVE_POWER, SIGNED_POWER, GENERAL_TABLE):
            raise ParameterError(f"unknown law kind {self.kind!r}")
        if self.kind in (POSITIVE_POWER, SIGNED_POWER):
            if not (self.C0 > 0):
                raise ParameterError("C0 must be positive")
            if self.alpha < 0:
                raise ParameterError("alpha must be >= 0")
            if self.epsilon is None:
                object.__setattr__(self, "epsilon", float(self.C0))
            if not (self.epsilon > 0):
                raise ParameterError("epsilon must be positive")
        else:
            knots = np.asarray(self.knots, dtype=float)
            dens = np.asarray(self.density, dtype=float)
            if knots.ndim != 1 or knots.size < 2 or dens.shape != knots.shape:
                raise ParameterError("table law needs matching 1-d knots and density arrays")
            if np.any(np.diff(knots) <= 0):
                raise ParameterError("table knots must be strictly increasing")
            if np.any(dens < 0):
                raise ParameterError("table density must be nonnegative")
            total = np.trapezoid(dens, knots)
            if total <= 0:
                raise ParameterError("table density must have positive mass")
            dens = dens / total
            # CDF at the knots; each cell is a quadratic piece.
            cell = 0.5 * (dens[:-1] + dens[1:]) * np.diff(knots)
            cdf = np.concatenate([[0.0], np.cumsum(cell)])
            cdf[-1] = 1.0
            object.__setattr__(self, "knots", knots)
            object.__setattr__(self, "density", dens)
            object.__setattr__(self, "_cdf_knots", cdf)
            if self.epsilon is None:
                object.__setattr__(self, "epsilon", float(max(abs(knots[0]), abs(knots[-1]))))

    # -- basic descriptors -------------------------------------------------

    @property
    def support_radius(self) -> float:
        if self.kind in (POSITIVE_POWER, SIGNED_POWER):
            return float(self.C0)
        return float(max(abs(self.knots[0]), abs(self.knots[-1])))

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == POSITIVE_POWER:
            u = np.clip(x / self.C0, 0.0, 1.0)
            return u ** (self.alpha + 1.0)
        if self.kind == SIGNED_POWER:
            u = np.clip(np.abs(x) / self.C0, 0.0, 1.0) ** (self.alpha + 1.0)
            return np.where(x >= 0, 0.5 * (1.0 + u), 0.5 * (1.0 - u))
        t, f, F = self.knots, self.density, self._cdf_knots
        xc = np.clip(x, t[0], t[-1])
        i = np.clip(np.searchsorted(t, xc, side="right") - 1, 0, t.size - 2)
        h = xc - t[i]
        slope = (f[i + 1] - f[i]) / (t[i + 1] - t[i])
        val = F[i] + f[i] * h + 0.5 * slope * h * h
        return np.clip(val, 0.0, 1.0)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == POSITIVE_POWER:
            inside = (x >= 0) & (x <= self.C0)
            with np.errstate(invalid="ignore"):
                v = (self.alpha + 1.0) * self.C0 ** (-self.alpha - 1.0) * np.abs(x) ** self.alpha
            return np.where(inside, v, 0.0)
        if self.kind == SIGNED_POWER:
            inside = np.abs(x) <= self.C0
            with np.errstate(invalid="ignore"):
                v = 0.5 * (self.alpha + 1.0) * self.C0 ** (-self.alpha - 1.0) * np.abs(x) ** self.alpha
            return np.where(inside, v, 0.0)
        t, f = self.knots, self.density
        out = np.interp(x, t, f, left=0.0, right=0.0)
        out[(x < t[0]) | (x > t[-1])] = 0.0
        return out

    def mass_within(self, gamma: float) -> float:
        """nu([-gamma, gamma]) in [0, 1]."""
        if not (gamma > 0):
            raise ParameterError("gamma must be positive")
        if self.kind in (POSITIVE_POWER, SIGNED_POWER):
            return float(min(1.0, (gamma / self.C0) ** (self.alpha + 1.0)))
        return float(self.cdf(gamma) - self.cdf(-gamma))

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        if self.kind == POSITIVE_POWER:
            return self.C0 * u ** (1.0 / (self.alpha + 1.0))
        if self.kind == SIGNED_POWER:
            mag = self.C0 * u ** (1.0 / (self.alpha + 1.0))
            sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            return sign * mag
        return self._sample_table(u)

    def _sample_table(self, u: np.ndarray) -> np.ndarray:
        t, f, F = self.knots, self.density, self._cdf_knots
        i = np.clip(np.searchsorted(F, u, side="right") - 1, 0, t.size - 2)
        rem = u - F[i]
        width = t[i + 1] - t[i]
        slope = (f[i + 1] - f[i]) / width
        # Solve 0.5*slope*h^2 + f_i*h = rem on the cell; fall back to the
        # linear branch when the density is flat there.
        disc = np.maximum(f[i] ** 2 + 2.0 * slope * rem, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            h_quad = (np.sqrt(disc) - f[i]) / slope
            h_lin = rem / f[i]
        h = np.where(np.abs(slope) > 1e-300, h_quad, h_lin)
        h = np.clip(np.nan_to_num(h, nan=0.0), 0.0, width)
        return t[i] + h

    # -- conditioning and rescaling ----------------------------------------

    def conditioned(self, gamma: float) -> "EnergyLaw":
        """The law restricted to [-gamma, gamma], renormalised."""
        mass = self.mass_within(gamma)
        if mass <= 0:
            raise DomainError(f"law has zero mass in [-{gamma}, {gamma}]")
        if self.kind in (POSITIVE_POWER, SIGNED_POWER):
            if gamma >= self.support_radius:
                return self
            return EnergyLaw(self.kind, C0=float(gamma), alpha=self.alpha,
                             epsilon=float(min(self.epsilon, gamma)))
        return self._restricted_table(gamma, scale=1.0)

    def star(self, gamma: float) -> "EnergyLaw":
        """The conditioned law of E/gamma; support inside [-1, 1]."""
        mass = self.mass_within(gamma)
        if mass <= 0:
            raise DomainError(f"law has zero mass in [-{gamma}, {gamma}]")
        if self.kind in (POSITIVE_POWER, SIGNED_POWER):
            c = min(1.0, self.C0 / gamma)
            return EnergyLaw(self.kind, C0=float(c), alpha=self.alpha, epsilon=float(c))
        return self._restricted_table(gamma, scale=1.0 / gamma)

    def _restricted_table(self, gamma: float, scale: float) -> "EnergyLaw":
        t, f = self.knots, self.density
        lo, hi = max(-gamma, float(t[0])), min(gamma, float(t[-1]))
        inner = (t > lo) & (t < hi)
        new_t = np.concatenate([[lo], t[inner], [hi]])
        new_f = np.interp(new_t, t, f)
        return EnergyLaw(GENERAL_TABLE, knots=new_t * scale, density=new_f)

    # -- serialisation -------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind in (POSITIVE_POWER, SIGNED_POWER):
            return {"kind": self.kind, "C0": self.C0, "alpha": self.alpha,
                    "epsilon": self.epsilon}
        return {"kind": self.kind, "knots": self.knots.tolist(),
                "density": self.density.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "EnergyLaw":
        kind = obj["kind"]
        if kind in (POSITIVE_POWER, SIGNED_POWER):
            return cls(kind, C0=float(obj["C0"]), alpha=float(obj["alpha"]),
                       epsilon=obj.get("epsilon"))
        return cls(kind, knots=np.asarray(obj["knots"]), density=np.asarray(obj["density"]))


def positive_power_law(C0: float = 1.0, alpha: float = 0.0, epsilon: float = None) -> EnergyLaw:
    """Power-law marks on [0, C0]."""
    return EnergyLaw(POSITIVE_POWER, C0=C0, alpha=alpha, epsilon=epsilon)


def signed_power_law(C0: float = 1.0, alpha: float = 0.0, epsilon: float = None) -> EnergyLaw:
    """Symmetric power-law marks on [-C0, C0]."""
    return EnergyLaw(SIGNED_POWER, C0=C0, alpha=alpha, epsilon=epsilon)


def table_law(knots, density) -> EnergyLaw:
    """Piecewise-linear density on a user grid (normalised internally)."""
    return EnergyLaw(GENERAL_TABLE, knots=np.asarray(knots, dtype=float),
                     density=np.asarray(density, dtype=float))


def nu_mass(law: EnergyLaw, gamma: float) -> float:
    """Mass the law puts on [-gamma, gamma]."""
    return law.mass_within(gamma)


def conditioned_law(law: EnergyLaw, gamma: float) -> EnergyLaw:
    return law.conditioned(gamma)


def star_law(law: EnergyLaw, gamma: float) -> EnergyLaw:
    return law.star(gamma)
