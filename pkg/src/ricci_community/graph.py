"""Weighted undirected graphs, shortest-path metrics and neighbourhood measures.

A :class:`Graph` is immutable.  The Ricci flow never edits one in place; every
step builds a new graph that shares the node labelling of its parent.  Edges
keep a stable index (their position in :attr:`Graph.edges`) which later
modules use for deterministic ordering and tie-breaking.
"""

from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, TextIO, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.sparse.csgraph import dijkstra

from .errors import DomainError, ParseError, UnreachableError

TextSource = Union[str, TextIO, Iterable[str]]


class Graph:
    """Undirected simple graph with strictly positive edge weights.

    Parameters
    ----------
    node_count : int
        Number of nodes; ids are ``0 .. node_count - 1``.
    edges : sequence of (u, v, w)
        Edge list.  Orientation is irrelevant; self-loops, duplicates and
        non-positive weights are rejected.
    labels : sequence of str, optional
        External token for every node id.  Defaults to ``str(id)``.
    """

    __slots__ = ("node_count", "_u", "_v", "_w", "labels", "_ids", "_csr", "_adj")

    def __init__(self, node_count: int, edges: Sequence[tuple] = (), labels: Optional[Sequence[str]] = None):
        node_count = int(node_count)
        if node_count < 0:
            raise DomainError("node_count must be nonnegative")
        us, vs, ws = [], [], []
        seen = set()
        for k, edge in enumerate(edges):
            if len(edge) == 2:
                u, v = edge
                w = 1.0
            else:
                u, v, w = edge
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise DomainError(f"edge {k} ({u}, {v}) references a node outside [0, {node_count})")
            if u == v:
                raise DomainError(f"self-loop at node {u}")
            if not (w > 0.0 and math.isfinite(w)):
                raise DomainError(f"edge ({u}, {v}) has non-positive or non-finite weight {w}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise DomainError(f"duplicate edge ({key[0]}, {key[1]})")
            seen.add(key)
            us.append(key[0])
            vs.append(key[1])
            ws.append(w)
        if labels is None:
            labels = [str(i) for i in range(node_count)]
        elif len(labels) != node_count:
            raise DomainError("labels must name every node exactly once")
        self._setup(node_count, np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64),
                    np.array(ws, dtype=np.float64), tuple(str(s) for s in labels))

    def _setup(self, node_count, u, v, w, labels, ids=None):
        self.node_count = node_count
        self._u, self._v, self._w = u, v, w
        for arr in (u, v, w):
            arr.setflags(write=False)
        self.labels = labels
        self._ids = ids
        self._csr = None
        self._adj = None

    @classmethod
    def _trusted(cls, node_count, u, v, w, labels, ids=None) -> "Graph":
        g = cls.__new__(cls)
        g._setup(node_count, u, v, w, labels, ids)
        return g

    # -- basic accessors ---------------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self._u.shape[0])

    @property
    def edges(self) -> list:
        """Edges as ``(u, v, w)`` tuples with ``u < v``, in edge-index order."""
        return list(zip(self._u.tolist(), self._v.tolist(), self._w.tolist()))

    @property
    def sources(self) -> np.ndarray:
        return self._u

    @property
    def targets(self) -> np.ndarray:
        return self._v

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def adjacency(self) -> list:
        """Per-node list of ``(neighbor, weight)`` pairs, neighbours in id order."""
        if self._adj is None:
            m = self.csr()
            ptr, idx, data = m.indptr, m.indices.tolist(), m.data.tolist()
            self._adj = [list(zip(idx[ptr[i]:ptr[i + 1]], data[ptr[i]:ptr[i + 1]]))
                         for i in range(self.node_count)]
        return self._adj

    def neighbors(self, x: int) -> list:
        self._check_node(x)
        return [y for y, _ in self.adjacency[x]]

    def degree(self, x: int) -> int:
        self._check_node(x)
        return len(self.adjacency[x])

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self._u, self._v]), minlength=self.node_count)

    def id_of(self, label: str) -> int:
        if self._ids is None:
            self._ids = {s: i for i, s in enumerate(self.labels)}
        try:
            return self._ids[str(label)]
        except KeyError:
            raise DomainError(f"unknown node label {label!r}") from None

    def csr(self) -> csr_matrix:
        """Symmetric sparse weight matrix (cached)."""
        if self._csr is None:
            n = self.node_count
            rows = np.concatenate([self._u, self._v])
            cols = np.concatenate([self._v, self._u])
            data = np.concatenate([self._w, self._w])
            m = csr_matrix((data, (rows, cols)), shape=(n, n))
            m.sort_indices()
            self._csr = m
        return self._csr

    def _check_node(self, x):
        if not (isinstance(x, (int, np.integer)) and 0 <= x < self.node_count):
            raise DomainError(f"invalid node id {x!r}")

    # -- derived graphs ----------------------------------------------------

    def with_weights(self, weights) -> "Graph":
        """Same topology and labels, new weights (one per edge, in edge order)."""
        w = np.array(weights, dtype=np.float64)
        if w.shape != self._w.shape:
            raise DomainError(f"expected {self.edge_count} weights, got {w.shape}")
        if not np.all(w > 0.0) or not np.all(np.isfinite(w)):
            raise DomainError("edge weights must be positive and finite")
        return Graph._trusted(self.node_count, self._u, self._v, w, self.labels, self._ids)

    def keep_edges(self, mask) -> "Graph":
        """Subgraph on all nodes with the edges selected by a boolean mask."""
        mask = np.asarray(mask, dtype=bool)
        return Graph._trusted(self.node_count, self._u[mask].copy(), self._v[mask].copy(),
                              self._w[mask].copy(), self.labels, self._ids)

    def edge_index(self) -> dict:
        """Map ``(u, v)`` with ``u < v`` to the edge index."""
        return {(u, v): k for k, (u, v) in enumerate(zip(self._u.tolist(), self._v.tolist()))}

    def __repr__(self):
        return f"Graph(node_count={self.node_count}, edge_count={self.edge_count})"


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite probability distribution over node ids."""

    nodes: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64)
        masses = np.asarray(self.masses, dtype=np.float64)
        if nodes.shape != masses.shape or nodes.ndim != 1:
            raise DomainError("nodes and masses must be 1-d arrays of equal length")
        if np.any(masses < 0.0):
            raise DomainError("masses must be nonnegative")
        if abs(masses.sum() - 1.0) > 1e-12:
            raise DomainError(f"masses sum to {masses.sum()!r}, not 1")
        if len(set(nodes.tolist())) != nodes.size:
            raise DomainError("support nodes must be distinct")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "masses", masses)

    def as_dict(self) -> dict:
        return dict(zip(self.nodes.tolist(), self.masses.tolist()))

    def __len__(self):
        return int(self.nodes.size)


class Partition:
    """Assignment of one community id to every node id ``0 .. n-1``.

    Community ids are canonicalised to ``0, 1, ...`` in order of first
    appearance, so two partitions that differ only by a relabelling compare
    equal.
    """

    __slots__ = ("labels",)

    def __init__(self, labels):
        if isinstance(labels, np.ndarray) and labels.dtype.kind in "iu":
            _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
            rank = np.empty(first.size, dtype=np.int64)
            rank[np.argsort(first, kind="stable")] = np.arange(first.size)
            canon = rank[inv.ravel()]
        else:
            raw = list(labels)
            remap = {}
            canon = np.empty(len(raw), dtype=np.int64)
            for i, c in enumerate(raw):
                canon[i] = remap.setdefault(c, len(remap))
        canon.setflags(write=False)
        self.labels = canon

    @classmethod
    def from_mapping(cls, mapping: Mapping, graph: Graph) -> "Partition":
        """Build a partition of ``graph`` from ``{node label: community}``."""
        labels = [None] * graph.node_count
        for token, community in mapping.items():
            labels[graph.id_of(token)] = community
        missing = [graph.labels[i] for i, c in enumerate(labels) if c is None]
        if missing:
            raise DomainError(f"{len(missing)} node(s) without a community label, e.g. {missing[0]!r}")
        return cls(labels)

    def __len__(self):
        return int(self.labels.size)

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition(n={len(self)}, communities={self.num_communities})"

    @property
    def num_communities(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def communities(self) -> list:
        """Node-id sets, one per community, ordered by community id."""
        groups = [set() for _ in range(self.num_communities)]
        for node, c in enumerate(self.labels.tolist()):
            groups[c].add(node)
        return groups

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_communities)

    def refines(self, other: "Partition") -> bool:
        """True when every block of ``self`` lies inside one block of ``other``."""
        if len(self) != len(other):
            raise DomainError("partitions cover different node sets")
        rep = {}
        for mine, theirs in zip(self.labels.tolist(), other.labels.tolist()):
            if rep.setdefault(mine, theirs) != theirs:
                return False
        return True


# ---------------------------------------------------------------------------
# text formats


def _lines(text: TextSource):
    if isinstance(text, str):
        text = io.StringIO(text)
    for lineno, line in enumerate(text, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped.split()


def load_edge_list(text: TextSource) -> Graph:
    """Parse an edge list: ``u v`` or ``u v w`` per line, ``#`` comments.

    Node tokens are arbitrary and are mapped to dense ids in order of first
    appearance; ``graph.labels[i]`` recovers the token of id ``i``.
    """
    ids: dict = {}
    edges = []
    seen = set()
    for lineno, fields in _lines(text):
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 'u v' or 'u v w', got {len(fields)} fields", lineno)
        a, b = fields[0], fields[1]
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"weight {fields[2]!r} is not a number", lineno) from None
            if not (w > 0.0 and math.isfinite(w)):
                raise DomainError(f"line {lineno}: weight must be positive, got {fields[2]}")
        else:
            w = 1.0
        if a == b:
            raise DomainError(f"line {lineno}: self-loop at node {a!r}")
        u = ids.setdefault(a, len(ids))
        v = ids.setdefault(b, len(ids))
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DomainError(f"line {lineno}: duplicate edge {a} {b}")
        seen.add(key)
        edges.append((u, v, w))
    labels = [None] * len(ids)
    for token, i in ids.items():
        labels[i] = token
    return Graph(len(ids), edges, labels)


def write_edge_list(graph: Graph, out: TextIO, weights: bool = True) -> None:
    """Write ``graph`` in the format read by :func:`load_edge_list`."""
    lab = graph.labels
    for u, v, w in graph.edges:
        if weights:
            out.write(f"{lab[u]} {lab[v]} {w!r}\n")
        else:
            out.write(f"{lab[u]} {lab[v]}\n")


def read_labels(text: TextSource) -> dict:
    """Parse a ``node community`` file into ``{node token: community token}``.

    A node listed under several communities is assigned the overlap itself as
    a new community, named by joining the sorted community tokens with ``+``.
    """
    member: dict = {}
    for lineno, fields in _lines(text):
        if len(fields) != 2:
            raise ParseError(f"expected 'node community', got {len(fields)} fields", lineno)
        member.setdefault(fields[0], set()).add(fields[1])
    return {node: "+".join(sorted(cs)) for node, cs in member.items()}


def write_partition(graph: Graph, partition: Partition, out: TextIO) -> None:
    for node, c in enumerate(partition.labels.tolist()):
        out.write(f"{graph.labels[node]} {c}\n")


# ---------------------------------------------------------------------------
# distances


def shortest_distance(g: Graph, x: int, y: int) -> Optional[float]:
    """Length of the lightest path between ``x`` and ``y``; ``None`` if disconnected."""
    g._check_node(x)
    g._check_node(y)
    if x == y:
        return 0.0
    adj = g.adjacency
    best = {x: 0.0}
    heap = [(0.0, x)]
    done = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        if node == y:
            return d
        done.add(node)
        for nbr, w in adj[node]:
            nd = d + w
            if nd < best.get(nbr, math.inf):
                best[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    return None


def distance_rows(g: Graph, sources=None) -> np.ndarray:
    """Shortest-path distances from ``sources`` (default: every node) to all nodes.

    Unreachable entries are ``inf``.  This is the internal batched form; code
    that builds cost matrices must go through :func:`local_distances` or check
    finiteness itself.
    """
    if g.edge_count == 0:
        n = g.node_count
        idx = np.arange(n) if sources is None else np.asarray(sources, dtype=np.int64)
        out = np.full((idx.size, n), np.inf)
        out[np.arange(idx.size), idx] = 0.0
        return out
    if sources is None:
        return dijkstra(g.csr(), directed=False)
    return dijkstra(g.csr(), directed=False, indices=np.asarray(sources, dtype=np.int64))


def local_distances(g: Graph, sources: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Matrix of shortest distances, ``out[i, j] = d(sources[i], targets[j])``."""
    sources = [int(s) for s in sources]
    targets = [int(t) for t in targets]
    for x in sources + targets:
        g._check_node(x)
    rows = distance_rows(g, sources)[:, targets]
    bad = np.argwhere(~np.isfinite(rows))
    if bad.size:
        i, j = bad[0]
        raise UnreachableError(sources[i], targets[j])
    return rows


def neighbor_measure(
    g: Graph,
    x: int,
    alpha: float = 0.5,
    p: float = 2.0,
    base: float = math.e,
    distances: Optional[np.ndarray] = None,
) -> DiscreteMeasure:
    """Probability measure that keeps ``alpha`` at ``x`` and spreads the rest
    over its neighbours with weight ``base ** -(d(x, y) ** p)``.

    ``distances`` may supply the row of shortest-path distances from ``x``;
    otherwise it is computed.
    """
    g._check_node(x)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if p < 0.0:
        raise DomainError(f"p must be nonnegative, got {p}")
    if not base > 1.0:
        raise DomainError(f"base must exceed 1, got {base}")
    nbrs = np.array(g.neighbors(x), dtype=np.int64)
    if nbrs.size == 0:
        raise DomainError(f"node {x} is isolated")
    if distances is None:
        distances = distance_rows(g, [x])[0]
    masses = np.empty(nbrs.size + 1)
    masses[0] = alpha
    masses[1:] = (1.0 - alpha) * _neighbor_weights(distances[nbrs], p, base)
    return DiscreteMeasure(np.concatenate([[x], nbrs]), masses)


def _neighbor_weights(d: np.ndarray, p: float, base: float) -> np.ndarray:
    # Shifting the exponent by its minimum cancels in the normalisation and
    # keeps the largest term at 1, so the sum cannot underflow to zero.
    expo = np.power(d, p) * math.log(base)
    raw = np.exp(-(expo - expo.min()))
    return raw / raw.sum()


def connected_components(g: Graph) -> Partition:
    """Partition of the nodes into connected components."""
    if g.node_count == 0:
        return Partition([])
    _, labels = _cc(g.csr(), directed=False)
    return Partition(labels)
