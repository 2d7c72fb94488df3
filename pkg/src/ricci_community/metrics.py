"""Partition quality: Adjusted Rand Index and Newman modularity.

Both are computed with exact integer arithmetic and converted to ``float``
only at the very end, so values such as ``1/3`` or ``0.5`` come out exact and
pair counts in the millions do not lose precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import DomainError
from .graph import Graph, Partition


@dataclass(frozen=True)
class ContingencyTable:
    """Overlap counts ``counts[i, j] = |C_i ∩ D_j|`` of two partitions."""

    counts: np.ndarray

    @property
    def rows(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def cols(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency(p1: Partition, p2: Partition) -> ContingencyTable:
    if len(p1) != len(p2):
        raise DomainError(f"partitions cover different node sets ({len(p1)} vs {len(p2)} nodes)")
    table = np.zeros((p1.num_communities, p2.num_communities), dtype=np.int64)
    np.add.at(table, (p1.labels, p2.labels), 1)
    return ContingencyTable(table)


def _pairs(counts) -> int:
    return sum(comb(int(c), 2) for c in np.asarray(counts).ravel() if c > 1)


def ari_fraction(p1: Partition, p2: Partition) -> Fraction:
    """Exact ARI as a :class:`fractions.Fraction`.

    When the denominator vanishes (both partitions are all singletons, or
    both are a single block) the index is undefined; we return 1 for
    identical partitions and 0 otherwise.
    """
    t = contingency(p1, p2)
    n = t.total
    index = _pairs(t.counts)
    a = _pairs(t.rows)
    b = _pairs(t.cols)
    total = comb(n, 2)
    expected = Fraction(a * b, total) if total else Fraction(0)
    maximum = Fraction(a + b, 2)
    if maximum == expected:
        return Fraction(1) if p1 == p2 else Fraction(0)
    return (index - expected) / (maximum - expected)


def ari(p1: Partition, p2: Partition) -> float:
    """Adjusted Rand Index between two partitions of the same nodes."""
    return float(ari_fraction(p1, p2))


def _check_cover(g: Graph, p: Partition):
    if len(p) != g.node_count:
        raise DomainError(f"partition labels {len(p)} node(s) but the graph has {g.node_count}")
    if g.edge_count == 0:
        raise DomainError("modularity is undefined for a graph without edges")


def modularity_fraction(g: Graph, p: Partition) -> Fraction:
    """Exact modularity of ``p`` on the unweighted topology of ``g``."""
    _check_cover(g, p)
    return _modularity_counts(g.sources, g.targets, g.degrees(), p.labels, p.num_communities)


def _modularity_counts(us, vs, deg, labels, k) -> Fraction:
    m = int(us.size)
    cu = labels[us]
    intra = int(np.count_nonzero(cu == labels[vs]))
    dsum = np.bincount(labels, weights=None if deg is None else deg, minlength=k).astype(np.int64)
    sq = sum(int(x) * int(x) for x in dsum.tolist())
    # Q = sum_c L_c / m - (D_c / 2m)^2
    return Fraction(4 * m * intra - sq, 4 * m * m)


def modularity(g: Graph, p: Partition) -> float:
    """Newman modularity ``Q = sum_i (e_ii - a_i^2)``, every edge counted once.

    Edge weights are ignored; only the topology of ``g`` enters.
    """
    return float(modularity_fraction(g, p))


def modularity_matrix(g: Graph, p: Partition) -> np.ndarray:
    """The community-level matrix ``e`` with ``e[i, j]`` the fraction of edge ends.

    ``e`` is symmetric, sums to 1 and has row sums ``a_i``.
    """
    _check_cover(g, p)
    k = p.num_communities
    e = np.zeros((k, k))
    cu, cv = p.labels[g.sources], p.labels[g.targets]
    np.add.at(e, (cu, cv), 1.0)
    np.add.at(e, (cv, cu), 1.0)
    return e / (2.0 * g.edge_count)
