"""Communities from a flowed graph: threshold cuts and cutoff selection.

After the flow, edges between communities are long and edges inside them are
short.  Deleting every edge longer than a cutoff and taking connected
components yields a partition; sweeping the cutoff over all edge weights
gives a nested family of partitions, scored by modularity on the original
unweighted graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, TextIO

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .errors import DomainError
from .graph import Graph, Partition
from .metrics import _modularity_counts, ari

PLATEAU_TOL = 0.02


@dataclass(frozen=True)
class CutoffPoint:
    cutoff: float
    community_count: int
    modularity: float
    ari: Optional[float] = None


@dataclass
class CutoffCurve:
    """Points ordered by strictly decreasing cutoff."""

    points: List[CutoffPoint]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def cutoffs(self) -> list:
        return [pt.cutoff for pt in self.points]

    def at(self, cutoff: float) -> CutoffPoint:
        for pt in self.points:
            if pt.cutoff == cutoff:
                return pt
        raise KeyError(cutoff)


def _components(n: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    mat = csr_matrix((np.ones(u.size), (u, v)), shape=(n, n))
    return _cc(mat, directed=False)[1]


def cut_by_threshold(g: Graph, w_cut: float) -> Partition:
    """Connected components after deleting every edge heavier than ``w_cut``."""
    keep = g.weights <= w_cut
    return Partition(_components(g.node_count, g.sources[keep], g.targets[keep]))


def scan_cutoffs(g: Graph, truth: Optional[Partition] = None, original: Optional[Graph] = None) -> CutoffCurve:
    """Evaluate :func:`cut_by_threshold` at every distinct edge weight.

    The first point cuts nothing (cutoff = largest weight), each following
    point lowers the cutoff to the next distinct weight, and the last point
    (cutoff 0) removes every edge.  Modularity is measured on ``original``
    (the graph before the flow, defaulting to ``g``) with all edges counted
    once; :func:`~ricci_community.metrics.ari` against ``truth`` is added when given.
    """
    original = g if original is None else original
    if original.node_count != g.node_count:
        raise DomainError("flowed and original graphs have different node counts")
    if truth is not None and len(truth) != g.node_count:
        raise DomainError("truth labels a different number of nodes")
    if original.edge_count == 0:
        raise DomainError("original graph has no edges")
    levels = np.unique(g.weights)[::-1].tolist() + [0.0]
    ou, ov, deg = original.sources, original.targets, original.degrees()
    points = []
    for cutoff in levels:
        labels = cut_by_threshold(g, cutoff).labels
        k = int(labels.max()) + 1
        q = float(_modularity_counts(ou, ov, deg, labels, k))
        score = ari(Partition(labels), truth) if truth is not None else None
        points.append(CutoffPoint(float(cutoff), k, q, score))
    return CutoffCurve(points)


def select_cutoff(curve: CutoffCurve, plateau_tol: float = PLATEAU_TOL) -> float:
    """Largest cutoff whose modularity is within ``plateau_tol`` of the best."""
    if not len(curve):
        raise DomainError("empty cutoff curve")
    if plateau_tol < 0:
        raise DomainError("plateau_tol must be nonnegative")
    best = max(pt.modularity for pt in curve)
    for pt in curve:
        if pt.modularity >= best - plateau_tol:
            return pt.cutoff
    raise AssertionError("unreachable")  # the maximum itself always qualifies


def write_curve(curve: CutoffCurve, out: TextIO) -> None:
    """Rows ``cutoff community_count modularity [ari]``, one per point."""
    with_ari = any(pt.ari is not None for pt in curve)
    out.write("# cutoff community_count modularity" + (" ari" if with_ari else "") + "\n")
    for pt in curve:
        row = f"{pt.cutoff!r} {pt.community_count} {pt.modularity!r}"
        if with_ari:
            row += f" {pt.ari!r}"
        out.write(row + "\n")
