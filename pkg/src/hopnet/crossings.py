"""Maximal vertex-disjoint left-right crossings and the conductivity lower
bound they certify.

The count is computed exactly as an integral maximum flow on the standard
vertex-split network: every stripe vertex becomes an in/out pair joined by a
capacity-one arc, a super-source feeds the left slab and the right slab
drains into a super-sink.  Arc directions follow the crossing definition
(left -> box -> right, free movement inside the box), so bare left-right
edges can never carry flow and every unit of flow passes through the box.
A fully exhaustive search over vertex-disjoint path families serves as the
independent oracle on small instances.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import maximum_flow

from .errors import SizeError
from .geometry import BOX, LEFT, RIGHT, StripeGeometry
from .graph import WeightedGraph
from .percolation import ThresholdModel
from .seeds import RngSeed
from .util import parallel_map

log = logging.getLogger(__name__)


def _flow_network(graph: WeightedGraph, geometry: StripeGeometry):
    """Vertex-split unit-capacity network; returns (matrix, source, sink, region)."""
    n = graph.n_vertices
    region = geometry.classify(graph.positions)
    source, sink = 2 * n, 2 * n + 1
    rows, cols = [], []

    stripe = np.flatnonzero(region != 3)
    rows.extend(2 * stripe); cols.extend(2 * stripe + 1)          # in -> out, cap 1
    left = np.flatnonzero(region == LEFT)
    rows.extend([source] * left.size); cols.extend(2 * left)      # source -> left in
    right = np.flatnonzero(region == RIGHT)
    rows.extend(2 * right + 1); cols.extend([sink] * right.size)  # right out -> sink

    e = graph.edges
    if e.size:
        r0, r1 = region[e[:, 0]], region[e[:, 1]]
        for a, b in ((0, 1), (1, 0)):
            u, v = e[:, a], e[:, b]
            ru, rv = (r0, r1) if a == 0 else (r1, r0)
            ok = ((ru == LEFT) & (rv == BOX)) | ((ru == BOX) & (rv == BOX)) \
                | ((ru == BOX) & (rv == RIGHT))
            rows.extend(2 * u[ok] + 1); cols.extend(2 * v[ok])    # u out -> v in
    data = np.ones(len(rows), dtype=np.int32)
    mat = sparse.csr_matrix((data, (rows, cols)), shape=(2 * n + 2, 2 * n + 2),
                            dtype=np.int32)
    return mat, source, sink, region


def max_vertex_disjoint_crossings(graph: WeightedGraph, geometry: StripeGeometry) -> int:
    """Exact maximal number of vertex-disjoint left-right crossings."""
    if graph.n_vertices == 0 or graph.n_edges == 0:
        return 0
    mat, source, sink, region = _flow_network(graph, geometry)
    if not np.any(region == LEFT) or not np.any(region == RIGHT) or not np.any(region == BOX):
        return 0
    return int(maximum_flow(mat, source, sink).flow_value)


def min_cut_vertices(graph: WeightedGraph, geometry: StripeGeometry) -> np.ndarray:
    """A minimum vertex cut certifying the crossing count.

    Returns vertex indices whose removal destroys every crossing; its size
    equals max_vertex_disjoint_crossings (Menger).  Extracted from the
    max-flow residual: vertices whose in-copy is reachable from the source
    while the out-copy is not.
    """
    if graph.n_vertices == 0 or graph.n_edges == 0:
        return np.empty(0, dtype=np.int64)
    mat, source, sink, region = _flow_network(graph, geometry)
    if not np.any(region == LEFT) or not np.any(region == RIGHT):
        return np.empty(0, dtype=np.int64)
    result = maximum_flow(mat, source, sink)
    flow = result.flow
    residual = (mat - flow) > 0  # includes reverse arcs: -flow of the mirror entry
    n_nodes = mat.shape[0]
    seen = np.zeros(n_nodes, dtype=bool)
    seen[source] = True
    frontier = [source]
    indptr, indices = residual.indptr, residual.indices
    while frontier:
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    nxt.append(v)
        frontier = nxt
    n = graph.n_vertices
    verts = np.arange(n)
    cut = seen[2 * verts] & ~seen[2 * verts + 1]
    return np.flatnonzero(cut)


def brute_force_crossings(graph: WeightedGraph, geometry: StripeGeometry) -> int:
    """Exhaustive maximum over vertex-disjoint crossing families (n <= 14)."""
    n = graph.n_vertices
    if n > 14:
        raise SizeError(f"brute force limited to 14 vertices, got {n}")
    if n == 0 or graph.n_edges == 0:
        return 0
    region = geometry.classify(graph.positions)
    adj = [[] for _ in range(n)]
    for i, j in graph.edges:
        adj[i].append(int(j))
        adj[j].append(int(i))

    paths = set()

    def extend(current: int, mask: int, start: int):
        for nxt in adj[current]:
            bit = 1 << nxt
            if mask & bit:
                continue
            if region[nxt] == RIGHT:
                # a valid crossing ends from inside the box, never by a bare
                # left-right edge
                if region[current] == BOX:
                    paths.add(mask | bit)
            elif region[nxt] == BOX:
                extend(nxt, mask | bit, start)

    for v in range(n):
        if region[v] == LEFT:
            extend(v, 1 << v, v)

    # keep only inclusion-minimal vertex sets; supersets never help packing
    masks = sorted(paths, key=lambda m: bin(m).count("1"))
    minimal = []
    for m in masks:
        if not any((m & k) == k for k in minimal):
            minimal.append(m)

    best = 0

    def pack(index: int, used: int, count: int):
        nonlocal best
        best = max(best, count)
        if count + (len(minimal) - index) <= best:
            return
        for k in range(index, len(minimal)):
            if minimal[k] & used:
                continue
            pack(k + 1, used | minimal[k], count + 1)

    pack(0, 0, 0)
    return best


def crossing_lower_bound(N: int, n_box: int):
    """Unit-conductance lower bounds N^2/(2N+n_box) and N^2/(3 n_box).

    Both are 0 when there is no crossing; any crossing contains at least one
    box vertex, so the denominators are positive whenever N > 0.
    """
    if n_box < 0:
        raise ValueError("n_box must be nonnegative")
    if N <= 0:
        return 0.0, 0.0
    strong = N * N / (2.0 * N + n_box)
    weak = N * N / (3.0 * n_box) if n_box > 0 else float("inf")
    return strong, weak


@dataclass(frozen=True)
class CrossingDensityRow:
    L: float
    mean: float
    stderr: float
    replicas: int


def _density_replica(args):
    model, L, seed = args
    graph, geom = model.sample_graph(L, seed)
    return max_vertex_disjoint_crossings(graph, geom)


def crossing_density_scan(model: ThresholdModel, L_list, replicas: int,
                          seed: RngSeed, threads: int = 1):
    """Monte-Carlo mean of N_L / L^(d-1) for each box side in ``L_list``.

    Meaningful in the supercritical phase, where the ratio stabilises at a
    positive constant; a warning is logged when no crossings were found.
    """
    rows = []
    for k, L in enumerate(L_list):
        jobs = [(model, float(L), seed.child(k).replica(i)) for i in range(replicas)]
        counts = np.array(parallel_map(_density_replica, jobs, threads=threads), dtype=float)
        scale = float(L) ** (model.dimension - 1)
        vals = counts / scale
        mean = float(vals.mean())
        stderr = float(vals.std(ddof=1) / np.sqrt(replicas)) if replicas > 1 else 0.0
        if mean == 0.0:
            log.warning("no crossings at L=%s; parameters look subcritical", L)
        rows.append(CrossingDensityRow(float(L), mean, stderr, replicas))
    return rows
