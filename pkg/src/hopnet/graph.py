"""Geometric weighted graphs: conductance threshold graphs, Boolean models
and the finite-volume hopping resistor network.

Edge rules
----------
* threshold graph (parameters zeta, beta): edge iff
  |x-y| + beta*(|Ex|+|Ey|+|Ex-Ey|) <= zeta; weights are the conductances
  exp(-|x-y| - beta*(...)), each >= exp(-zeta);
* Boolean graph of radius r: edge iff 0 < |x-y| <= 2r, unit weights;
* stripe network (side ell): all pairs {x, y} inside the stripe with at
  least one endpoint in the central box and conductance >= c_min.

Candidate pairs come from uniform cell lists with cell side equal to the
interaction range, so construction is expected linear time for homogeneous
inputs; a brute-force quadratic path is kept for cross-checking.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError
from .geometry import BOX, OUTSIDE, StripeGeometry
from .point_process import MarkedConfiguration, mott_rescale, truncate

log = logging.getLogger(__name__)


def energy_term(Ex, Ey):
    """|Ex| + |Ey| + |Ex - Ey|: twice the larger modulus for same-sign marks,
    twice the gap for opposite signs."""
    Ex = np.asarray(Ex, dtype=float)
    Ey = np.asarray(Ey, dtype=float)
    out = np.abs(Ex) + np.abs(Ey) + np.abs(Ex - Ey)
    return out if out.ndim else float(out)


def conductance(x, y, Ex: float, Ey: float, beta: float, distance_factor: float = 1.0) -> float:
    """exp(-|x-y| - beta * energy_term); self-pairs are rejected.

    ``distance_factor`` rescales the distance term for alternative
    localisation lengths; the default is 1.
    """
    if not (beta > 0):
        raise ParameterError("beta must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dist = float(np.linalg.norm(x - y))
    if dist == 0.0:
        raise DomainError("conductance is undefined for coinciding points (no self-edges)")
    return math.exp(-distance_factor * dist - beta * energy_term(Ex, Ey))


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Immutable weighted graph on marked points.

    Edges are stored canonically: i < j, lexicographically sorted, unique.
    """

    positions: np.ndarray
    energies: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=float))
        en = np.ascontiguousarray(np.asarray(self.energies, dtype=float))
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if edges.shape[0] != w.shape[0]:
            raise ParameterError("edges and weights must have matching length")
        if edges.size:
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            if np.any(lo == hi):
                raise ParameterError("self-edges are not allowed")
            if lo.min() < 0 or hi.max() >= pos.shape[0]:
                raise ParameterError("edge endpoint out of range")
            order = np.lexsort((hi, lo))
            edges = np.column_stack([lo, hi])[order]
            w = w[order]
            if np.any((np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)):
                raise ParameterError("duplicate edges are not allowed")
            if np.any(w <= 0):
                raise ParameterError("edge weights must be positive")
        for arr in (pos, en, edges, w):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "energies", en)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", w)

    @property
    def n_vertices(self) -> int:
        return self.positions.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1] if self.positions.ndim == 2 else 1

    def with_weights(self, weights) -> "WeightedGraph":
        return WeightedGraph(self.positions, self.energies, self.edges, weights, dict(self.meta))

    def with_unit_weights(self) -> "WeightedGraph":
        return self.with_weights(np.ones(self.n_edges))

    def drop_edges(self, mask) -> "WeightedGraph":
        keep = ~np.asarray(mask, dtype=bool)
        return WeightedGraph(self.positions, self.energies,
                             self.edges[keep], self.weights[keep], dict(self.meta))


def same_edge_set(a: WeightedGraph, b: WeightedGraph) -> bool:
    """True iff the two graphs have identical canonical edge index sets."""
    return a.edges.shape == b.edges.shape and bool(np.array_equal(a.edges, b.edges))


# ---------------------------------------------------------------------------
# candidate pair generation


def _segment_local_index(counts: np.ndarray) -> np.ndarray:
    # concatenation of arange(c) for c in counts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return np.arange(total, dtype=np.int64) - np.repeat(starts, counts)


def _half_offsets(d: int) -> np.ndarray:
    # offsets in {-1,0,1}^d whose first nonzero component is positive
    grids = np.meshgrid(*([np.array([-1, 0, 1])] * d), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    keep = []
    for o in offs:
        nz = o[o != 0]
        if nz.size and nz[0] > 0:
            keep.append(o)
    return np.asarray(keep, dtype=np.int64)


def candidate_pairs(positions: np.ndarray, rmax: float, method: str = "cells") -> np.ndarray:
    """Index pairs (i < j) containing every pair at distance <= rmax.

    ``cells`` buckets points into a uniform grid of side rmax and pairs
    adjacent buckets; ``brute`` returns all pairs.  Callers apply the exact
    edge predicate afterwards.
    """
    n = positions.shape[0]
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    if method == "brute":
        i, j = np.triu_indices(n, k=1)
        return np.column_stack([i, j]).astype(np.int64)
    if method != "cells":
        raise ParameterError(f"unknown pair-search method {method!r}")
    if not (rmax > 0):
        raise ParameterError("interaction range must be positive")

    d = positions.shape[1]
    cells = np.floor(positions / rmax).astype(np.int64)
    cells -= cells.min(axis=0)
    dims = cells.max(axis=0) + 2
    key = cells[:, 0].copy()
    for k in range(1, d):
        key = key * dims[k] + cells[:, k]
    order = np.argsort(key, kind="stable")
    skey = key[order]
    ukey, starts = np.unique(skey, return_index=True)
    ends = np.append(starts[1:], n)
    ucell = cells[order[starts]]

    pieces = []
    for off in np.vstack([np.zeros((1, d), dtype=np.int64), _half_offsets(d)]):
        is_zero = not off.any()
        if is_zero:
            a_idx = np.arange(ukey.size)
            b_idx = a_idx
        else:
            target = ucell + off
            valid = np.all((target >= 0) & (target < dims), axis=1)
            tkey = target[:, 0].copy()
            for k in range(1, d):
                tkey = tkey * dims[k] + target[:, k]
            pos_in_u = np.searchsorted(ukey, tkey)
            pos_in_u = np.clip(pos_in_u, 0, ukey.size - 1)
            found = valid & (ukey[pos_in_u] == tkey)
            a_idx = np.flatnonzero(found)
            b_idx = pos_in_u[found]
        if a_idx.size == 0:
            continue
        sa = ends[a_idx] - starts[a_idx]
        sb = ends[b_idx] - starts[b_idx]
        counts = sa * sb
        total = counts.sum()
        if total == 0:
            continue
        local = _segment_local_index(counts)
        rep = np.repeat(np.arange(a_idx.size), counts)
        sb_rep = sb[rep]
        ii = starts[a_idx][rep] + local // sb_rep
        jj = starts[b_idx][rep] + local % sb_rep
        I = order[ii]
        J = order[jj]
        if is_zero:
            keep = I < J
            I, J = I[keep], J[keep]
        else:
            swap = I > J
            I2 = np.where(swap, J, I)
            J2 = np.where(swap, I, J)
            I, J = I2, J2
        pieces.append(np.column_stack([I, J]))
    if not pieces:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pieces, axis=0)


# ---------------------------------------------------------------------------
# graph constructors


def _pair_exponent(positions, energies, pairs, beta, distance_factor=1.0):
    diff = positions[pairs[:, 0]] - positions[pairs[:, 1]]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    w = energy_term(energies[pairs[:, 0]], energies[pairs[:, 1]])
    return distance_factor * dist + beta * w


def build_threshold_graph(conf: MarkedConfiguration, zeta: float, beta: float,
                          method: str = "cells", distance_factor: float = 1.0) -> WeightedGraph:
    """Graph keeping exactly the pairs with conductance >= exp(-zeta).

    All points of the configuration are vertices; points with
    2*beta*|E| > zeta cannot carry an edge and stay isolated.
    """
    if not (zeta > 0 and beta > 0):
        raise ParameterError("zeta and beta must be positive")
    n = conf.n_points
    active = np.flatnonzero(2.0 * beta * np.abs(conf.energies) <= zeta)
    if active.size >= 2:
        pos_a = conf.positions[active]
        pairs_a = candidate_pairs(pos_a, zeta, method=method)
        expo = _pair_exponent(pos_a, conf.energies[active], pairs_a, beta, distance_factor)
        keep = expo <= zeta
        pairs = active[pairs_a[keep]]
        weights = np.exp(-expo[keep])
    else:
        pairs = np.empty((0, 2), dtype=np.int64)
        weights = np.empty(0)
    meta = {"kind": "threshold", "zeta": zeta, "beta": beta,
            "distance_factor": distance_factor, "n_vertices": n}
    return WeightedGraph(conf.positions, conf.energies, pairs, weights, meta)


def build_boolean_graph(points, r: float, method: str = "cells") -> WeightedGraph:
    """Boolean model: edges between points at distance in (0, 2r], unit weights."""
    if not (r > 0):
        raise ParameterError("radius must be positive")
    pos = np.asarray(points, dtype=float)
    if pos.ndim == 1:
        pos = pos.reshape(-1, 1)
    pairs = candidate_pairs(pos, 2.0 * r, method=method)
    if pairs.size:
        diff = pos[pairs[:, 0]] - pos[pairs[:, 1]]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        keep = (dist > 0) & (dist <= 2.0 * r)
        pairs = pairs[keep]
    weights = np.ones(pairs.shape[0])
    meta = {"kind": "boolean", "radius": r, "n_vertices": pos.shape[0]}
    return WeightedGraph(pos, np.zeros(pos.shape[0]), pairs, weights, meta)


def _stripe_pairs(positions, in_box, c_min, beta, method):
    """Candidate pairs with at least one endpoint in the central box."""
    n = positions.shape[0]
    if c_min > 0:
        zeta_cut = -math.log(c_min)
        pairs = candidate_pairs(positions, zeta_cut, method=method)
        if pairs.size:
            pairs = pairs[in_box[pairs[:, 0]] | in_box[pairs[:, 1]]]
        return pairs
    # c_min = 0: complete structure on qualifying pairs
    box_idx = np.flatnonzero(in_box)
    other = np.flatnonzero(~in_box)
    pieces = []
    if box_idx.size >= 2:
        a, b = np.triu_indices(box_idx.size, k=1)
        pieces.append(np.column_stack([box_idx[a], box_idx[b]]))
    if box_idx.size and other.size:
        a = np.repeat(box_idx, other.size)
        b = np.tile(other, box_idx.size)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        pieces.append(np.column_stack([lo, hi]))
    if not pieces:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pieces, axis=0)


def _dropped_sum_tail(n_points: int, density: float, d: int, zeta_cut: float) -> float:
    # upper estimate of the summed conductance of all pairs beyond range
    # zeta_cut: each pair at distance r has conductance <= exp(-r)
    surf = d * math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
    tail = special.gammaincc(d, zeta_cut) * math.gamma(d)
    return 0.5 * n_points * density * surf * tail


def build_ma_network(conf: MarkedConfiguration, beta: float, geometry: StripeGeometry,
                     c_min: float = None, zeta_cut: float = None,
                     method: str = "cells", rel_drop_tol: float = 1e-6,
                     distance_factor: float = 1.0) -> WeightedGraph:
    """Finite-volume hopping network on the stripe.

    Nodes are the configuration points inside the stripe; edges join every
    pair with at least one endpoint in the central box whose conductance is
    at least ``c_min``.  When neither ``c_min`` nor ``zeta_cut`` is given,
    the cutoff is raised until the (estimated) summed weight of the dropped
    filaments is below ``rel_drop_tol`` times the smallest retained degree
    weight, so the truncated conductivity is a tight lower bound.
    """
    if not (beta > 0):
        raise ParameterError("beta must be positive")
    if geometry.d != conf.dimension:
        raise ParameterError("geometry dimension mismatch")
    region = geometry.classify(conf.positions)
    for code, name in ((0, "left slab"), (1, "central box"), (2, "right slab")):
        if not np.any(region == code):
            raise ParameterError(f"configuration has no point in the {name} of the stripe")

    keep = region != OUTSIDE
    idx = np.flatnonzero(keep)
    pos = conf.positions[idx]
    en = conf.energies[idx]
    in_box = region[idx] == BOX

    if c_min is None and zeta_cut is not None:
        c_min = math.exp(-zeta_cut)
    adaptive = c_min is None
    if adaptive:
        # start from the scale where a unit-density tail is already tiny
        zeta_cut = max(8.0, 2.0 * beta * float(np.median(np.abs(en))) + 8.0)
        c_min = math.exp(-zeta_cut)
    if c_min < 0:
        raise ParameterError("c_min must be nonnegative")

    density = conf.n_points / conf.window.volume if conf.window.volume > 0 else 0.0
    for _ in range(6):
        pairs = _stripe_pairs(pos, in_box, c_min, beta, method)
        expo = _pair_exponent(pos, en, pairs, beta, distance_factor)
        if c_min > 0:
            retained = expo <= -math.log(c_min)
        else:
            retained = np.ones(expo.size, dtype=bool)
        weights = np.exp(-expo[retained])
        pairs_kept = pairs[retained]
        if not adaptive:
            break
        zc = -math.log(c_min)
        dropped = float(np.exp(-expo[~retained]).sum()) + _dropped_sum_tail(
            pos.shape[0], density, geometry.d, zc)
        degrees = np.zeros(pos.shape[0])
        np.add.at(degrees, pairs_kept[:, 0], weights)
        np.add.at(degrees, pairs_kept[:, 1], weights)
        positive = degrees[degrees > 0]
        min_degree = float(positive.min()) if positive.size else 1.0
        if dropped <= rel_drop_tol * min_degree:
            log.info("ma network cutoff accepted: zeta_cut=%.2f dropped<=%.3e min_degree=%.3e",
                     zc, dropped, min_degree)
            break
        zc += math.log(max(dropped / max(rel_drop_tol * min_degree, 1e-300), 2.0)) + 0.5
        c_min = math.exp(-zc)
    meta = {"kind": "ma", "beta": beta, "ell": geometry.ell, "c_min": c_min,
            "zeta_cut": (-math.log(c_min) if c_min > 0 else math.inf),
            "distance_factor": distance_factor,
            "parent_indices": idx, "truncated_sigma_is_lower_bound": c_min > 0}
    return WeightedGraph(pos, en, pairs_kept, weights, meta)


def rescale_isomorphism_check(conf: MarkedConfiguration, zeta: float, beta: float,
                              method: str = "cells") -> bool:
    """Exact edge-set equality of the two routes to the rescaled graph.

    Route one truncates marks at zeta/beta and thresholds at (zeta, beta);
    route two rescales the configuration and thresholds at (1, 1).  Both
    keep the same points in the same order, so vertices match by index.
    """
    g1 = build_threshold_graph(truncate(conf, zeta / beta), zeta, beta, method=method)
    g2 = build_threshold_graph(mott_rescale(conf, zeta, beta), 1.0, 1.0, method=method)
    return same_edge_set(g1, g2)


def write_graph_csv(graph: WeightedGraph, edges_path, vertices_path) -> None:
    """Edge list (i, j, weight) and vertex table (index, coordinates, energy)."""
    d = graph.dimension
    with open(edges_path, "w") as fh:
        fh.write("i,j,weight\n")
        for (i, j), w in zip(graph.edges, graph.weights):
            fh.write(f"{i},{j},{w!r}\n")
    with open(vertices_path, "w") as fh:
        fh.write("index," + ",".join(f"x{k+1}" for k in range(d)) + ",e\n")
        for i in range(graph.n_vertices):
            coords = ",".join(repr(float(v)) for v in graph.positions[i])
            fh.write(f"{i},{coords},{float(graph.energies[i])!r}\n")
