"""Ollivier-Ricci curvature of graph edges.

For an edge ``xy`` the curvature is ``1 - W(m_x, m_y) / d(x, y)`` where
``m_x`` is the neighbourhood measure of :func:`~ricci_community.graph.neighbor_measure`,
``W`` is the Wasserstein distance under the shortest-path metric and
``d(x, y)`` is the shortest-path distance (which can be shorter than the
edge weight once the flow has reshaped the metric).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numba
import numpy as np

from .config import FlowConfig
from .errors import DomainError, TransportError
from .graph import Graph, distance_rows, _neighbor_weights
from .transport import _sinkhorn_kernel, _transport_simplex

_EXACT, _SINKHORN = 0, 1


class CurvatureMap:
    """Curvature per edge, stored in the edge order of the source graph."""

    __slots__ = ("sources", "targets", "values")

    def __init__(self, sources, targets, values):
        self.sources = np.asarray(sources)
        self.targets = np.asarray(targets)
        self.values = np.asarray(values, dtype=np.float64)

    def __len__(self):
        return int(self.values.size)

    def __getitem__(self, edge):
        u, v = edge
        if u > v:
            u, v = v, u
        hit = np.flatnonzero((self.sources == u) & (self.targets == v))
        if hit.size == 0:
            raise KeyError(edge)
        return float(self.values[hit[0]])

    def items(self):
        return [((u, v), k) for u, v, k in zip(self.sources.tolist(), self.targets.tolist(), self.values.tolist())]

    def as_dict(self) -> dict:
        return dict(self.items())


def _support(g: Graph, x: int, row: np.ndarray, cfg: FlowConfig):
    """Support nodes and masses of ``m_x`` with zero-mass points removed."""
    nbrs = np.asarray(g.neighbors(x), dtype=np.int64)
    if nbrs.size == 0:
        raise DomainError(f"node {x} is isolated")
    nodes = np.concatenate([[x], nbrs])
    masses = np.empty(nodes.size)
    masses[0] = cfg.alpha
    masses[1:] = (1.0 - cfg.alpha) * _neighbor_weights(row[nbrs], cfg.p, cfg.base)
    keep = masses > 0.0
    return nodes[keep], masses[keep]


def _method_code(cfg: FlowConfig) -> int:
    return _EXACT if cfg.ot_method == "exact" else _SINKHORN


def _raise_for(status: int, u: int, v: int, cfg: FlowConfig):
    if status == 1:
        raise TransportError(f"exact transport did not converge on edge ({u}, {v})")
    raise TransportError(
        f"Sinkhorn underflow on edge ({u}, {v}) at reg={cfg.sinkhorn_reg}; use a larger regularisation"
    )


def edge_curvature(g: Graph, u: int, v: int, cfg: Optional[FlowConfig] = None) -> float:
    """Curvature of the single edge ``(u, v)``.

    Distances are obtained by Dijkstra from every support node of ``m_u``,
    which covers ``d(u, ·)``, ``d(v, ·)`` and the whole cost matrix.
    """
    cfg = cfg or FlowConfig()
    g._check_node(u)
    g._check_node(v)
    if v not in g.neighbors(u):
        raise DomainError(f"({u}, {v}) is not an edge")
    src = np.concatenate([[u], np.asarray(g.neighbors(u), dtype=np.int64)])
    rows = distance_rows(g, src)
    row_of = {int(x): i for i, x in enumerate(src)}
    nodes_u, mass_u = _support(g, u, rows[row_of[u]], cfg)
    nodes_v, mass_v = _support(g, v, rows[row_of[v]], cfg)
    cost = np.ascontiguousarray(rows[[row_of[int(x)] for x in nodes_u]][:, nodes_v])
    w, status = _solve(mass_u, mass_v, cost, _method_code(cfg), cfg)
    if status:
        _raise_for(status, u, v, cfg)
    return 1.0 - w / rows[row_of[u], v]


def _solve(a, b, c, method, cfg):
    if method == _EXACT:
        size = a.size + b.size
        w, _, status = _transport_simplex(a, b, c, 50 * size * size + 1000)
    else:
        w, _, _, status = _sinkhorn_kernel(a, b, c, float(cfg.sinkhorn_reg), int(cfg.sinkhorn_max_iter),
                                            float(cfg.sinkhorn_tol))
    return w, status


@numba.njit(cache=True, nogil=True)
def _batch_wasserstein(dist, ptr, nodes, mass, eu, ev, method, reg, max_iter, tol, out, status):
    for e in range(eu.size):
        x = eu[e]
        y = ev[e]
        sx = ptr[x]
        sy = ptr[y]
        m = ptr[x + 1] - sx
        n = ptr[y + 1] - sy
        a = mass[sx:sx + m].copy()
        b = mass[sy:sy + n].copy()
        c = np.empty((m, n))
        for i in range(m):
            for j in range(n):
                c[i, j] = dist[nodes[sx + i], nodes[sy + j]]
        if method == 0:
            size = m + n
            w, _, st = _transport_simplex(a, b, c, 50 * size * size + 1000)
        else:
            w, _, _, st = _sinkhorn_kernel(a, b, c, reg, max_iter, tol)
        out[e] = w
        status[e] = st


def edge_wasserstein(g: Graph, cfg: FlowConfig, dist: Optional[np.ndarray] = None):
    """Wasserstein distance and shortest-path length for every edge.

    Returns ``(W, d)`` as arrays in edge order.  ``dist`` may pass a
    precomputed all-pairs distance matrix of ``g``.
    """
    if dist is None:
        dist = distance_rows(g)
    n = g.node_count
    ptr = np.zeros(n + 1, dtype=np.int64)
    node_chunks, mass_chunks = [], []
    deg = g.degrees()
    for x in range(n):
        if deg[x] == 0:
            nodes, masses = np.empty(0, np.int64), np.empty(0)
        else:
            nodes, masses = _support(g, x, dist[x], cfg)
        node_chunks.append(nodes)
        mass_chunks.append(masses)
        ptr[x + 1] = ptr[x] + nodes.size
    nodes = np.concatenate(node_chunks) if node_chunks else np.empty(0, np.int64)
    masses = np.concatenate(mass_chunks) if mass_chunks else np.empty(0)
    eu = np.ascontiguousarray(g.sources)
    ev = np.ascontiguousarray(g.targets)
    out = np.empty(eu.size)
    status = np.zeros(eu.size, dtype=np.int64)
    method = _method_code(cfg)
    args = (float(cfg.sinkhorn_reg), int(cfg.sinkhorn_max_iter), float(cfg.sinkhorn_tol))

    def run(lo, hi):
        _batch_wasserstein(dist, ptr, nodes, masses, eu[lo:hi], ev[lo:hi], method, *args,
                           out[lo:hi], status[lo:hi])

    workers = max(1, int(cfg.workers))
    if workers == 1 or eu.size < 2 * workers:
        run(0, eu.size)
    else:
        bounds = np.linspace(0, eu.size, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda k: run(bounds[k], bounds[k + 1]), range(workers)))
    bad = np.flatnonzero(status)
    if bad.size:
        k = int(bad[0])
        _raise_for(int(status[k]), int(eu[k]), int(ev[k]), cfg)
    return out, dist[eu, ev]


def all_curvatures(g: Graph, cfg: Optional[FlowConfig] = None, dist: Optional[np.ndarray] = None) -> CurvatureMap:
    """Curvature of every edge of ``g``, in edge order."""
    cfg = cfg or FlowConfig()
    w, d = edge_wasserstein(g, cfg, dist)
    return CurvatureMap(g.sources, g.targets, 1.0 - w / d)
