"""Synthetic benchmark graphs and the closed-form flow on G(a, b).

``G(a, b)`` joins ``b + 1`` cliques of ``a + 1`` nodes; one node per clique
(its gateway) is also linked to every other gateway.  Under the flow with
``alpha = 0``, ``p = 0`` and ``epsilon = 1`` the graph stays edge-transitive
on three orbits (gateway-gateway, gateway-member, member-member), and the
orbit lengths evolve linearly: ``W_{n+1} = A W_n`` with ``W_0 = (1, 1, 1)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DomainError, RicciError
from .graph import Graph, Partition

ORBIT_GATEWAY, ORBIT_SPOKE, ORBIT_MEMBER = 0, 1, 2


@dataclass(frozen=True)
class GabParams:
    """``a + 1`` nodes per community, ``b + 1`` communities."""

    a: int
    b: int

    def __post_init__(self):
        if int(self.a) < 1 or int(self.b) < 1:
            raise DomainError(f"G(a, b) needs a, b >= 1, got ({self.a}, {self.b})")

    @property
    def in_regime(self) -> bool:
        return self.a > self.b >= 2


@dataclass(frozen=True)
class OrbitWeights:
    w1: float
    w2: float
    w3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3])


def _params(a, b=None) -> GabParams:
    if isinstance(a, GabParams):
        return a
    return GabParams(int(a), int(b))


# ---------------------------------------------------------------------------
# stochastic block model


def block_sizes(n: int, k: int) -> list:
    """Near-even split: the first ``n % k`` blocks get one extra node."""
    q, r = divmod(n, k)
    return [q + 1 if i < r else q for i in range(k)]


def gen_sbm(n: int, k: int, p_intra: float, p_inter: float, seed: int = 0) -> Tuple[Graph, Partition]:
    """Planted-partition graph with ``k`` contiguous blocks.

    Node pairs ``i < j`` are visited in row-major order and each consumes one
    uniform draw from ``numpy.random.Generator(PCG64(seed))``; the pair is an
    edge when the draw falls below its block probability.  The output is
    therefore fixed by ``(n, k, p_intra, p_inter, seed)`` on every platform.
    """
    n, k = int(n), int(k)
    if not n >= k >= 1:
        raise DomainError(f"need n >= k >= 1, got n={n}, k={k}")
    for name, prob in (("p_intra", p_intra), ("p_inter", p_inter)):
        if not 0.0 <= prob <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {prob}")
    if p_inter > p_intra:
        raise DomainError(f"p_inter ({p_inter}) exceeds p_intra ({p_intra})")
    labels = np.repeat(np.arange(k), block_sizes(n, k))
    iu, ju = np.triu_indices(n, 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    draw = rng.random(iu.size)
    prob = np.where(labels[iu] == labels[ju], p_intra, p_inter)
    hit = draw < prob
    u, v = iu[hit].astype(np.int64), ju[hit].astype(np.int64)
    g = Graph._trusted(n, u, v, np.ones(u.size), tuple(str(i) for i in range(n)))
    return g, Partition(labels)


# ---------------------------------------------------------------------------
# G(a, b)


def gen_gab(a, b=None) -> Tuple[Graph, Partition]:
    """The graph G(a, b) with unit weights and its community labels.

    Community ``c`` holds nodes ``c (a + 1) .. c (a + 1) + a``; its first
    node is the gateway.
    """
    prm = _params(a, b)
    size = prm.a + 1
    edges = []
    for c in range(prm.b + 1):
        base = c * size
        for i in range(size):
            for j in range(i + 1, size):
                edges.append((base + i, base + j))
    for c in range(prm.b + 1):
        for d in range(c + 1, prm.b + 1):
            edges.append((c * size, d * size))
    n = (prm.b + 1) * size
    labels = np.repeat(np.arange(prm.b + 1), size)
    return Graph(n, edges), Partition(labels)


def gab_orbits(g: Graph, a, b=None) -> np.ndarray:
    """Orbit code of every edge of ``gen_gab(a, b)``.

    Code 0 is gateway-gateway, 1 gateway-member, 2 member-member.
    """
    prm = _params(a, b)
    gate = (np.arange(g.node_count) % (prm.a + 1)) == 0
    ends = gate[g.sources].astype(int) + gate[g.targets].astype(int)
    return 2 - ends


def orbit_weights(g: Graph, a, b=None) -> OrbitWeights:
    """Mean weight per orbit (the three values coincide across an orbit under the flow)."""
    code = gab_orbits(g, a, b)
    w = g.weights
    return OrbitWeights(*(float(w[code == k].mean()) for k in range(3)))


def gab_step_matrix(a, b=None) -> np.ndarray:
    """Linear map taking orbit lengths ``(d1, d2, d3)`` to ``(D1, D2, D3)``."""
    prm = _params(a, b)
    if prm.a < 2 or prm.b < 2:
        raise DomainError("the step matrix needs a, b >= 2")
    a, b = float(prm.a), float(prm.b)
    s = a + b
    return np.array([
        [(a - 1) / s, 2 * a / s, 0.0],
        [b / s, (a * b - a - b) / (a * s), 1 / s],
        [0.0, 0.0, 1 / a],
    ])


def gab_weights_at(a, b=None, n: int = 0) -> OrbitWeights:
    """Orbit lengths after ``n`` flow steps, ``A^n (1, 1, 1)``, by repeated multiplication."""
    if isinstance(a, GabParams):
        prm, n = a, (n if b is None else b)
    else:
        prm = _params(a, b)
    if int(n) < 0:
        raise DomainError("n must be nonnegative")
    A = gab_step_matrix(prm)
    w = np.ones(3)
    for _ in range(int(n)):
        w = A @ w
    return OrbitWeights(*w.tolist())


def gab_eigen(a, b=None) -> Tuple[float, float, float]:
    """Eigenvalues ``lambda1 > lambda2 = 1/a > 0 > lambda3`` of the step matrix.

    The third orbit decouples with eigenvalue ``1/a``; the other two are the
    roots of the characteristic polynomial of the upper 2x2 block.
    """
    prm = _params(a, b)
    if not prm.in_regime:
        warnings.warn(f"G({prm.a}, {prm.b}) is outside the regime a > b >= 2", stacklevel=2)
    A = gab_step_matrix(prm)
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = tr * tr - 4.0 * det
    if disc < 0:
        raise RicciError(f"complex eigenvalues for G({prm.a}, {prm.b})")
    root = math.sqrt(disc)
    lam1, lam3 = float((tr + root) / 2.0), float((tr - root) / 2.0)
    lam2 = 1.0 / prm.a
    if prm.in_regime and not (lam1 > lam2 > 0.0 > lam3):
        raise RicciError(f"eigenvalue ordering violated for G({prm.a}, {prm.b}): {lam1}, {lam2}, {lam3}")
    return lam1, lam2, lam3
