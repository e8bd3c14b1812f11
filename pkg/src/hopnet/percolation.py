"""Cluster analysis, left-right crossing events and critical-point estimation.

The finite-volume proxy for percolation is the left-right crossing of the
central box: a path whose first vertex lies in the left slab, last vertex in
the right slab, and all interior vertices inside the box (so a bare
left-right edge does not count).  Critical thresholds and intensities are
located by bisection on the Monte-Carlo crossing frequency at level 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .energy import EnergyLaw, positive_power_law, signed_power_law
from .errors import ParameterError, SearchError
from .geometry import BOX, LEFT, RIGHT, Box, StripeGeometry
from .graph import WeightedGraph, build_threshold_graph
from .point_process import MarkedConfiguration, palm_augment, sample_marked_ppp
from .seeds import RngSeed, generator
from .util import parallel_map, write_csv


class UnionFind:
    """Array-based union-find with path compression, for small instances."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class ClusterLabels:
    """Canonical component labels: each label is the smallest vertex index
    in its component."""

    labels: np.ndarray
    sizes: np.ndarray  # component sizes, descending

    @property
    def n_clusters(self) -> int:
        return self.sizes.size


def _adjacency(n: int, edges: np.ndarray) -> sparse.csr_matrix:
    if edges.size == 0:
        return sparse.csr_matrix((n, n))
    data = np.ones(edges.shape[0])
    mat = sparse.coo_matrix((data, (edges[:, 0], edges[:, 1])), shape=(n, n))
    return (mat + mat.T).tocsr()


def clusters(graph: WeightedGraph) -> ClusterLabels:
    """Connected components with deterministic min-index labels."""
    n = graph.n_vertices
    if n == 0:
        return ClusterLabels(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    _, raw = connected_components(_adjacency(n, graph.edges), directed=False)
    mins = np.full(raw.max() + 1, n, dtype=np.int64)
    np.minimum.at(mins, raw, np.arange(n, dtype=np.int64))
    labels = mins[raw]
    sizes = np.sort(np.bincount(raw))[::-1].astype(np.int64)
    return ClusterLabels(labels, sizes)


def has_lr_crossing(graph: WeightedGraph, geometry: StripeGeometry) -> bool:
    """Left-right crossing of the central box with interior inside the box.

    Equivalent to: some component of the box-induced subgraph touches both a
    left-slab vertex and a right-slab vertex through single edges.
    """
    n = graph.n_vertices
    if n == 0 or graph.n_edges == 0:
        return False
    region = geometry.classify(graph.positions)
    e = graph.edges
    r0, r1 = region[e[:, 0]], region[e[:, 1]]
    box_edges = e[(r0 == BOX) & (r1 == BOX)]
    _, raw = connected_components(_adjacency(n, box_edges), directed=False)

    touch_left = np.zeros(raw.max() + 1, dtype=bool)
    touch_right = np.zeros(raw.max() + 1, dtype=bool)
    lb = (r0 == LEFT) & (r1 == BOX)
    bl = (r0 == BOX) & (r1 == LEFT)
    rb = (r0 == RIGHT) & (r1 == BOX)
    br = (r0 == BOX) & (r1 == RIGHT)
    touch_left[raw[e[lb, 1]]] = True
    touch_left[raw[e[bl, 0]]] = True
    touch_right[raw[e[rb, 1]]] = True
    touch_right[raw[e[br, 0]]] = True
    # only components that actually contain a box vertex qualify
    box_mask = region == BOX
    qualified = np.zeros(raw.max() + 1, dtype=bool)
    qualified[raw[box_mask]] = True
    return bool(np.any(touch_left & touch_right & qualified))


# ---------------------------------------------------------------------------
# Monte-Carlo crossing probability


@dataclass(frozen=True)
class ThresholdModel:
    """Poisson configuration + conductance-threshold graph, ready to sample."""

    rho: float
    law: EnergyLaw
    zeta: float
    beta: float
    dimension: int = 2

    def sample_graph(self, L: float, seed: RngSeed, padding: float = None):
        geom = StripeGeometry(self.dimension, L)
        pad = self.zeta if padding is None else padding
        conf = sample_marked_ppp(self.rho, self.law, geom.window(pad), seed)
        return build_threshold_graph(conf, self.zeta, self.beta), geom


def _threshold_crossing_replica(args) -> bool:
    model, L, seed = args
    graph, geom = model.sample_graph(L, seed)
    return has_lr_crossing(graph, geom)


def crossing_probability(model: ThresholdModel, L: float, replicas: int,
                         seed: RngSeed, threads: int = 1):
    """Monte-Carlo crossing frequency and its binomial standard error."""
    if replicas < 1:
        raise ParameterError("need at least one replica")
    hits = parallel_map(_threshold_crossing_replica,
                        [(model, L, seed.replica(i)) for i in range(replicas)],
                        threads=threads)
    p = float(np.mean(hits))
    stderr = math.sqrt(max(p * (1.0 - p), 1.0 / replicas) / replicas)
    return p, stderr


# ---------------------------------------------------------------------------
# bisection estimators


@dataclass
class ThresholdEstimate:
    """Bisection output: the located 1/2-crossing point and its probe history."""

    value: float
    half_width: float
    replicas_per_probe: int
    box_side: float
    seed: RngSeed
    probe_history: list = field(default_factory=list)  # (probe value, frequency, n)
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "estimate": self.value,
            "half_width": self.half_width,
            "probes": [{"value": v, "freq": f, "n": n} for v, f, n in self.probe_history],
            "seed": self.seed.to_json(),
            "params": dict(self.params, replicas_per_probe=self.replicas_per_probe,
                           box_side=self.box_side),
        }

    def write_probe_csv(self, path) -> None:
        write_csv(path, ["value", "freq", "n"],
                  [(float(v), float(f), int(n)) for v, f, n in self.probe_history])


def _bisect_on_frequency(freq_fn, lo: float, hi: float, tol: float,
                         history: list, max_expand: int = 12):
    """Bisect ``freq_fn`` (non-decreasing in its argument) to the level 1/2.

    Frequencies exactly equal to 1/2 are treated as subcritical, so the
    search deterministically continues on the upper half.
    """
    f_lo = freq_fn(lo)
    expansions = 0
    while f_lo > 0.5:
        lo /= 2.0
        expansions += 1
        if expansions > max_expand:
            raise SearchError(f"no subcritical bracket end found down to {lo}")
        f_lo = freq_fn(lo)
    f_hi = freq_fn(hi)
    expansions = 0
    while f_hi <= 0.5:
        hi *= 2.0
        expansions += 1
        if expansions > max_expand:
            raise SearchError(f"no supercritical bracket end found up to {hi}")
        f_hi = freq_fn(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if freq_fn(mid) > 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def estimate_zeta_c(beta: float, rho: float, law: EnergyLaw, L: float,
                    replicas: int, tol: float = 0.02, seed: RngSeed = RngSeed(0),
                    d: int = 2, bracket=(0.5, 4.0), threads: int = 1) -> ThresholdEstimate:
    """Bisection on the graph threshold zeta at crossing frequency 1/2.

    Within the bisection phase all probes reuse the same per-replica point
    configurations (only the threshold changes), so the recorded frequencies
    are exactly non-decreasing in zeta.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    geom = StripeGeometry(d, L)
    history: list = []

    def make_freq(pad: float):
        window = geom.window(pad)

        def freq(zeta: float) -> float:
            def one(args):
                i, = args
                conf = sample_marked_ppp(rho, law, window, seed.replica(i))
                g = build_threshold_graph(conf, zeta, beta)
                return has_lr_crossing(g, geom)
            hits = parallel_map(one, [(i,) for i in range(replicas)], threads=threads)
            p = float(np.mean(hits))
            history.append((zeta, p, replicas))
            return p
        return freq

    # bracket with padding matched to the current probe, then bisect with a
    # fixed window so probes stay coupled
    lo, hi = bracket
    f = make_freq(hi)
    expansions = 0
    while f(hi) <= 0.5:
        hi *= 2.0
        expansions += 1
        if expansions > 12:
            raise SearchError(f"no supercritical zeta found up to {hi}")
        f = make_freq(hi)
    f = make_freq(hi)
    while f(lo) > 0.5:
        lo /= 2.0
        expansions += 1
        if expansions > 24:
            raise SearchError(f"no subcritical zeta found down to {lo}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.5:
            hi = mid
        else:
            lo = mid
    return ThresholdEstimate(0.5 * (lo + hi), 0.5 * (hi - lo), replicas, L, seed,
                             history, {"kind": "zeta_c", "beta": beta, "rho": rho,
                                       "d": d, "law": law.to_json(), "tol": tol})


def _coupled_intensity_replica(args) -> bool:
    make_graph, law, window, geom, lam, lam_base, seed = args
    rng = generator(seed)
    n = int(rng.poisson(lam_base * window.volume))
    pos = window.sample_uniform(rng, n)
    marks = law.sample(rng, n)
    keep_u = rng.random(n)
    keep = keep_u <= lam / lam_base
    conf = MarkedConfiguration(window.dimension, window, pos[keep], marks[keep],
                               validate=False)
    return has_lr_crossing(make_graph(conf), geom)


def estimate_critical_intensity(make_graph, law: EnergyLaw, L: float, replicas: int,
                                tol: float = 0.05, seed: RngSeed = RngSeed(0),
                                d: int = 2, padding: float = 1.0,
                                bracket=(1.0, 32.0), threads: int = 1,
                                params: dict = None) -> ThresholdEstimate:
    """Bisection on the Poisson intensity for an arbitrary graph rule.

    Probes are coupled by thinning: every replica draws its points once at
    the bracket's upper intensity and keeps each point at intensity ``lam``
    with probability lam/lam_base, so crossing frequencies are exactly
    non-decreasing in the intensity.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    geom = StripeGeometry(d, L)
    window = geom.window(padding)
    history: list = []

    def make_freq(lam_base: float):
        def freq(lam: float) -> float:
            jobs = [(make_graph, law, window, geom, lam, lam_base, seed.replica(i))
                    for i in range(replicas)]
            hits = parallel_map(_coupled_intensity_replica, jobs, threads=threads)
            p = float(np.mean(hits))
            history.append((lam, p, replicas))
            return p
        return freq

    lo, hi = bracket
    f = make_freq(hi)
    expansions = 0
    while f(hi) <= 0.5:
        hi *= 2.0
        expansions += 1
        if expansions > 10:
            raise SearchError(f"no percolating intensity found up to {hi}")
        f = make_freq(hi)
    f = make_freq(hi)
    while f(lo) > 0.5:
        lo /= 2.0
        expansions += 1
        if expansions > 20:
            raise SearchError(f"no subcritical intensity found down to {lo}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.5:
            hi = mid
        else:
            lo = mid
    return ThresholdEstimate(0.5 * (lo + hi), 0.5 * (hi - lo), replicas, L, seed,
                             history, params or {})


def _unit_threshold_graph(conf: MarkedConfiguration) -> WeightedGraph:
    return build_threshold_graph(conf, 1.0, 1.0)


def estimate_lambda_c(alpha: float, sign_mode: str, L: float, replicas: int,
                      tol: float = 0.05, seed: RngSeed = RngSeed(0), d: int = 2,
                      bracket=(1.0, 32.0), threads: int = 1) -> ThresholdEstimate:
    """Critical intensity of the unit threshold graph under power-law marks.

    ``sign_mode`` selects marks on [0, 1] (``positive``) or [-1, 1]
    (``signed``), both with density proportional to |E|^alpha.
    """
    if sign_mode == "positive":
        law = positive_power_law(1.0, alpha)
    elif sign_mode == "signed":
        law = signed_power_law(1.0, alpha)
    else:
        raise ParameterError(f"sign_mode must be 'positive' or 'signed', got {sign_mode!r}")
    return estimate_critical_intensity(
        _unit_threshold_graph, law, L, replicas, tol=tol, seed=seed, d=d,
        padding=1.0, bracket=bracket, threads=threads,
        params={"kind": "lambda_c", "alpha": alpha, "sign_mode": sign_mode,
                "d": d, "tol": tol})


# ---------------------------------------------------------------------------
# scaling predictions


@dataclass(frozen=True)
class ZetaPrediction:
    """Critical threshold implied by a critical intensity, with the matching
    critical conductance and the decay coefficient of its logarithm."""

    zeta: float
    conductance: float
    valid: bool
    chi: float


def predicted_zeta_c(lambda_star: float, rho: float, C0: float, alpha: float,
                     d: int, beta: float, epsilon: float = None) -> ZetaPrediction:
    """zeta_c = (lambda*/rho)^(1/(a+1+d)) * (beta*C0)^((a+1)/(a+1+d)).

    ``valid`` records whether the value stays below min(C0, epsilon)*beta,
    the regime where the identity is exact; ``chi`` is
    -(lambda* C0^(a+1) / rho)^(1/(a+1+d)).
    """
    if min(lambda_star, rho, C0, beta) <= 0 or alpha < 0 or d < 1:
        raise ParameterError("parameters must be positive (alpha >= 0, d >= 1)")
    eps = C0 if epsilon is None else epsilon
    expo = 1.0 / (alpha + 1.0 + d)
    zeta = (lambda_star / rho) ** expo * (beta * C0) ** ((alpha + 1.0) * expo)
    chi = -((lambda_star * C0 ** (alpha + 1.0) / rho) ** expo)
    return ZetaPrediction(float(zeta), math.exp(-zeta), bool(zeta <= min(C0, eps) * beta),
                          float(chi))


# ---------------------------------------------------------------------------
# cluster of the origin под the Palm distribution


def origin_component_diameter(graph: WeightedGraph, window: Box, margin: float):
    """Sup-norm diameter of vertex 0's component, plus a window-contact flag.

    The flag marks components whose bounding box comes within ``margin`` of
    the window boundary, i.e. clusters that might have been clipped.
    """
    n = graph.n_vertices
    if n == 0:
        raise ParameterError("graph has no vertices")
    _, raw = connected_components(_adjacency(n, graph.edges), directed=False)
    comp = raw == raw[0]
    pts = graph.positions[comp]
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    diam = float(np.max(hi - lo))
    wlo = np.asarray(window.lo)
    whi = np.asarray(window.hi)
    truncated = bool(np.any(lo - wlo < margin) or np.any(whi - hi < margin))
    return diam, truncated


@dataclass(frozen=True)
class PalmDiameterResult:
    diameters: np.ndarray
    truncated_fraction: float
    window_radius: float
    params: dict

    def survival(self, thresholds) -> np.ndarray:
        t = np.asarray(thresholds, dtype=float)
        return np.array([(self.diameters > v).mean() for v in t])


def _palm_diameter_replica(args):
    lam, law, zeta, beta, window, seed = args
    conf = sample_marked_ppp(lam, law, window, seed)
    conf0 = palm_augment(conf, law, seed.child(1))
    graph = build_threshold_graph(conf0, zeta, beta)
    return origin_component_diameter(graph, window, margin=zeta)


def palm_cluster_diameter(lam: float, law: EnergyLaw, zeta: float, beta: float,
                          window_radius: float, replicas: int, seed: RngSeed,
                          d: int = 2, threads: int = 1) -> PalmDiameterResult:
    """Empirical distribution of the origin-cluster sup-norm diameter.

    Each replica plants an independently marked point at the origin of a
    fresh Poisson sample and measures its component in the threshold graph.
    An isolated origin has diameter 0.  Replicas whose cluster approaches
    the window boundary are counted in ``truncated_fraction``; the run is
    only trustworthy when that fraction is small.
    """
    if replicas < 1:
        raise ParameterError("need at least one replica")
    window = Box.centered(window_radius, d)
    jobs = [(lam, law, zeta, beta, window, seed.replica(i)) for i in range(replicas)]
    results = parallel_map(_palm_diameter_replica, jobs, threads=threads)
    diameters = np.array([r[0] for r in results])
    truncated = float(np.mean([r[1] for r in results]))
    return PalmDiameterResult(diameters, truncated, window_radius,
                              {"lam": lam, "zeta": zeta, "beta": beta, "d": d,
                               "law": law.to_json(), "replicas": replicas})
