"""Discrete Ricci flow with normalisation and surgery.

Every iteration rewrites all edge weights at once from a frozen snapshot::

    w_new(x, y) = d(x, y) - epsilon * kappa(x, y) * d(x, y)

so that with ``epsilon = 1`` the new weight is exactly the Wasserstein
distance between the two endpoint measures.  Optional normalisation rescales
the weights of every connected component to average 1 before the curvature is
computed, and optional surgery periodically deletes the heaviest edges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, TextIO, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components as _cc

from .config import FlowConfig
from .curvature import CurvatureMap, edge_wasserstein
from .errors import DomainError, ParseError
from .graph import Graph, distance_rows

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
FULLY_DISCONNECTED = "fully_disconnected"


@dataclass
class IterationRecord:
    """State of one flow iteration.

    ``weights`` and ``curvatures`` describe the graph the curvature was
    computed on (after normalisation); ``new_weights`` are the updated weights
    before surgery.  ``edge_ids`` index the edges of the input graph.
    """

    index: int
    edge_ids: np.ndarray
    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    curvatures: np.ndarray
    new_weights: np.ndarray
    clamped: int = 0
    removed: List[Tuple[int, int, float]] = field(default_factory=list)


@dataclass
class FlowTrace:
    iterations: List[IterationRecord]
    terminal_reason: str
    final: Graph
    config: FlowConfig

    def __len__(self):
        return len(self.iterations)

    def curvature_std(self, k: int) -> float:
        """Spread of curvature across edges at iteration ``k`` (1-based)."""
        return float(np.std(self.iterations[k - 1].curvatures))


# ---------------------------------------------------------------------------
# single operations


def _rescale(w: np.ndarray, target: float, floor: float) -> np.ndarray:
    """Scale ``w`` so it sums to ``target`` while every entry stays >= floor."""
    order = np.argsort(w, kind="stable")
    sw = w[order]
    rest = sw.sum()
    for k in range(sw.size):
        scale = (target - k * floor) / rest
        if scale * sw[k] >= floor:
            out = np.empty_like(w)
            out[order[:k]] = floor
            out[order[k:]] = sw[k:] * scale
            return out
        rest -= sw[k]
    return np.full_like(w, floor)


def normalize_weights(g: Graph, per_component: bool = False, floor: float = 0.0) -> Graph:
    """Rescale weights so they sum to the number of edges.

    With ``per_component`` each connected component is rescaled on its own,
    so every component keeps an average weight of 1.
    """
    if g.edge_count == 0:
        raise DomainError("cannot normalise a graph without edges")
    w = g.weights
    if not per_component:
        if floor > 0.0:
            return g.with_weights(_rescale(w, float(g.edge_count), floor))
        return g.with_weights(w * (g.edge_count / w.sum()))
    _, comp = _cc(g.csr(), directed=False)
    ecomp = comp[g.sources]
    out = np.empty_like(w)
    for c in np.unique(ecomp):
        sel = ecomp == c
        if floor > 0.0:
            out[sel] = _rescale(w[sel], float(sel.sum()), floor)
        else:
            out[sel] = w[sel] * (sel.sum() / w[sel].sum())
    return g.with_weights(out)


def _update(g: Graph, cfg: FlowConfig):
    dist = distance_rows(g)
    wass, d = edge_wasserstein(g, cfg, dist)
    kappa = 1.0 - wass / d
    raw = d - cfg.epsilon * kappa * d
    clamped = int(np.count_nonzero(raw < cfg.weight_floor))
    new = np.maximum(raw, cfg.weight_floor)
    return g.with_weights(new), CurvatureMap(g.sources, g.targets, kappa), clamped


def flow_step(g: Graph, cfg: Optional[FlowConfig] = None) -> Tuple[Graph, CurvatureMap]:
    """One simultaneous update of all edge weights (no normalisation, no surgery)."""
    cfg = cfg or FlowConfig()
    if g.edge_count == 0:
        raise DomainError("graph has no edges")
    new, curv, _ = _update(g, cfg)
    return new, curv


def _surgery_count(quantile: float, m: int) -> int:
    # The small slack keeps e.g. 3/21 * 21 from rounding up to 4.
    return min(m, math.ceil(quantile * m - 1e-9))


def _surgery_mask(g: Graph, quantile: float) -> np.ndarray:
    k = _surgery_count(quantile, g.edge_count)
    order = np.argsort(-g.weights, kind="stable")
    keep = np.ones(g.edge_count, dtype=bool)
    keep[order[:k]] = False
    return keep


def surgery(g: Graph, quantile: float) -> Tuple[Graph, list]:
    """Delete the ``ceil(quantile * |E|)`` heaviest edges.

    Ties go to the lower edge index.  Returns the pruned graph and the removed
    edges as ``(u, v, w)`` tuples in edge order.
    """
    if not 0.0 < quantile < 1.0:
        raise DomainError(f"quantile must lie in (0, 1), got {quantile}")
    keep = _surgery_mask(g, quantile)
    removed = [e for e, k in zip(g.edges, keep) if not k]
    return g.keep_edges(keep), removed


# ---------------------------------------------------------------------------
# the flow loop


def run_flow(g: Graph, cfg: Optional[FlowConfig] = None) -> FlowTrace:
    """Iterate the Ricci flow until the curvature settles.

    Stops when the largest change of curvature between consecutive
    iterations, over edges present in both, drops below ``cfg.delta``; when
    ``cfg.max_iterations`` is reached; or when surgery has removed every edge.
    """
    cfg = cfg or FlowConfig()
    if g.edge_count == 0:
        raise DomainError("graph has no edges")
    ids = np.arange(g.edge_count)
    records: List[IterationRecord] = []
    prev = None
    reason = MAX_ITERATIONS
    for it in range(1, int(cfg.max_iterations) + 1):
        if cfg.normalize:
            g = normalize_weights(g, per_component=True, floor=cfg.weight_floor)
        new, curv, clamped = _update(g, cfg)
        rec = IterationRecord(it, ids, g.sources, g.targets, g.weights, curv.values, new.weights, clamped)
        if clamped:
            log.debug("iteration %d: %d weight(s) clamped to %g", it, clamped, cfg.weight_floor)
        g = new
        if cfg.surgery_every and it % int(cfg.surgery_every) == 0:
            keep = _surgery_mask(g, cfg.surgery_quantile)
            rec.removed = [e for e, k in zip(g.edges, keep) if not k]
            g = g.keep_edges(keep)
            ids = ids[keep]
        records.append(rec)

        cur = dict(zip(rec.edge_ids.tolist(), rec.curvatures.tolist()))
        if prev is not None:
            common = cur.keys() & prev.keys()
            change = max((abs(cur[e] - prev[e]) for e in common), default=0.0)
            if change < cfg.delta:
                reason = CONVERGED
                break
        prev = cur
        if g.edge_count == 0:
            reason = FULLY_DISCONNECTED
            break
    return FlowTrace(records, reason, g, cfg)


# ---------------------------------------------------------------------------
# trace serialisation


def write_trace(trace: FlowTrace, graph_labels, out: TextIO) -> None:
    """Line-oriented dump of a trace.

    Each iteration is written as::

        iteration <i> edges <m> clamped <k>
        <u> <v> <weight> <curvature>      (m lines)
        removed <r>
        <u> <v> <weight>                  (r lines)

    followed by a final ``terminal <reason>`` line.
    """
    lab = graph_labels
    out.write("# ricci flow trace\n")
    for rec in trace.iterations:
        out.write(f"iteration {rec.index} edges {rec.sources.size} clamped {rec.clamped}\n")
        for u, v, w, k in zip(rec.sources.tolist(), rec.targets.tolist(), rec.weights.tolist(),
                              rec.curvatures.tolist()):
            out.write(f"{lab[u]} {lab[v]} {w!r} {k!r}\n")
        out.write(f"removed {len(rec.removed)}\n")
        for u, v, w in rec.removed:
            out.write(f"{lab[u]} {lab[v]} {w!r}\n")
    out.write(f"terminal {trace.terminal_reason}\n")


def read_trace(text) -> dict:
    """Parse :func:`write_trace` output into plain lists (for fixtures and plots)."""
    lines = [ln.strip() for ln in (text.splitlines() if isinstance(text, str) else text)]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    out = {"iterations": [], "terminal_reason": None}
    pos = 0
    try:
        while pos < len(lines):
            head = lines[pos].split()
            if head[0] == "terminal":
                out["terminal_reason"] = head[1]
                pos += 1
                continue
            if head[0] != "iteration":
                raise ParseError(f"unexpected record {head[0]!r}", pos + 1)
            m = int(head[3])
            edges = []
            for ln in lines[pos + 1:pos + 1 + m]:
                u, v, w, k = ln.split()
                edges.append((u, v, float(w), float(k)))
            pos += 1 + m
            r = int(lines[pos].split()[1])
            removed = []
            for ln in lines[pos + 1:pos + 1 + r]:
                u, v, w = ln.split()
                removed.append((u, v, float(w)))
            pos += 1 + r
            out["iterations"].append({"index": int(head[1]), "clamped": int(head[5]),
                                      "edges": edges, "removed": removed})
    except (IndexError, ValueError) as exc:
        raise ParseError(f"malformed trace: {exc}", pos + 1) from None
    return out
