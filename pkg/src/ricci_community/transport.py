"""Wasserstein distances between small discrete measures.

Two solvers share one calling convention (source masses, target masses, cost
matrix):

* :func:`wasserstein_exact` solves the balanced transportation problem with a
  primal transportation simplex (stepping-stone / MODI pivots on a spanning
  tree basis).  The supports met in curvature computations are tiny, so the
  dense O(mn) pricing per pivot is cheaper than any general LP machinery.
* :func:`wasserstein_sinkhorn` runs entropically regularised Sinkhorn
  scaling, with the scalings periodically absorbed into log-domain dual
  potentials so that small regularisation does not underflow.

The numeric kernels are compiled with numba and release the GIL, so callers
may fan out over threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError, TransportError

MARGINAL_TOL = 1e-9

SINKHORN_REG = 0.1
SINKHORN_MAX_ITER = 1000
SINKHORN_TOL = 1e-6

# Consecutive degenerate pivots before switching to Bland's rule.
_DEGENERATE_LIMIT = 50


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling and its cost."""

    flows: np.ndarray
    cost: float


# ---------------------------------------------------------------------------
# validation


def _masses(measure) -> np.ndarray:
    masses = getattr(measure, "masses", measure)
    return np.ascontiguousarray(masses, dtype=np.float64)


def _prepare(mu, nu, cost):
    a = _masses(mu)
    b = _masses(nu)
    c = np.ascontiguousarray(cost, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise DomainError("masses must be one-dimensional")
    if c.shape != (a.size, b.size):
        raise DomainError(f"cost matrix has shape {c.shape}, expected {(a.size, b.size)}")
    if a.size == 0 or b.size == 0:
        raise DomainError("measures must have nonempty support")
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("masses must be nonnegative")
    if abs(a.sum() - b.sum()) > MARGINAL_TOL:
        raise DomainError(f"total masses differ: {a.sum()!r} vs {b.sum()!r}")
    if not np.all(np.isfinite(c)):
        raise DomainError("cost matrix has non-finite entries")
    if np.any(c < 0):
        raise DomainError("cost matrix has negative entries")
    return a, b, c


# ---------------------------------------------------------------------------
# exact solver


@numba.njit(cache=True, nogil=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@numba.njit(cache=True, nogil=True)
def _initial_basis(a, b, c, x, basis):
    """Matrix-minimum start completed to a spanning tree of m + n - 1 cells."""
    m, n = c.shape
    ra = a.copy()
    rb = b.copy()
    order = np.argsort(c.ravel(), kind="mergesort")
    parent = np.arange(m + n)
    count = 0
    for k in range(order.size):
        i = order[k] // n
        j = order[k] % n
        if ra[i] > 0.0 and rb[j] > 0.0:
            q = min(ra[i], rb[j])
            x[i, j] = q
            basis[i, j] = True
            count += 1
            ra[i] -= q
            rb[j] -= q
            if ra[i] <= rb[j]:
                ra[i] = 0.0
            else:
                rb[j] = 0.0
            ri = _find(parent, i)
            rj = _find(parent, m + j)
            parent[ri] = rj
    # Degenerate cells (zero flow) join the remaining tree components.
    for k in range(order.size):
        if count == m + n - 1:
            break
        i = order[k] // n
        j = order[k] % n
        if basis[i, j]:
            continue
        ri = _find(parent, i)
        rj = _find(parent, m + j)
        if ri != rj:
            parent[ri] = rj
            basis[i, j] = True
            count += 1
    return count


@numba.njit(cache=True, nogil=True)
def _potentials(c, basis, u, v, stack, seen):
    m, n = c.shape
    seen[:] = False
    u[0] = 0.0
    seen[0] = True
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if node < m:
            for j in range(n):
                if basis[node, j] and not seen[m + j]:
                    v[j] = c[node, j] - u[node]
                    seen[m + j] = True
                    stack[top] = m + j
                    top += 1
        else:
            j = node - m
            for i in range(m):
                if basis[i, j] and not seen[i]:
                    u[i] = c[i, j] - v[j]
                    seen[i] = True
                    stack[top] = i
                    top += 1


@numba.njit(cache=True, nogil=True)
def _tree_path(basis, r, col, parent, queue):
    """Nodes on the tree path from column node ``m + col`` to row node ``r``.

    Returns the path length; ``queue`` is reused to hold the path, starting at
    ``r`` and ending at ``m + col``.
    """
    m, n = basis.shape
    parent[:] = -1
    start = m + col
    parent[start] = start
    head = 0
    tail = 1
    queue[0] = start
    while head < tail:
        node = queue[head]
        head += 1
        if node == r:
            break
        if node < m:
            for j in range(n):
                if basis[node, j] and parent[m + j] < 0:
                    parent[m + j] = node
                    queue[tail] = m + j
                    tail += 1
        else:
            j = node - m
            for i in range(m):
                if basis[i, j] and parent[i] < 0:
                    parent[i] = node
                    queue[tail] = i
                    tail += 1
    length = 0
    node = r
    while True:
        queue[length] = node
        length += 1
        if node == start:
            break
        node = parent[node]
    return length


@numba.njit(cache=True, nogil=True)
def _transport_simplex(a, b, c, max_pivots):
    """Return (cost, plan, status); status 0 on success, 1 if the pivot cap hit."""
    m, n = c.shape
    x = np.zeros((m, n))
    basis = np.zeros((m, n), dtype=np.bool_)
    _initial_basis(a, b, c, x, basis)
    if m == 1 or n == 1:
        total = 0.0
        for i in range(m):
            for j in range(n):
                total += x[i, j] * c[i, j]
        return total, x, 0

    scale = 0.0
    for i in range(m):
        for j in range(n):
            if c[i, j] > scale:
                scale = c[i, j]
    tol = 1e-13 * scale
    u = np.empty(m)
    v = np.empty(n)
    stack = np.empty(m + n, dtype=np.int64)
    seen = np.zeros(m + n, dtype=np.bool_)
    parent = np.empty(m + n, dtype=np.int64)
    path = np.empty(m + n, dtype=np.int64)
    degenerate = 0
    status = 1
    for _ in range(max_pivots):
        _potentials(c, basis, u, v, stack, seen)
        bland = degenerate >= _DEGENERATE_LIMIT
        best = -tol
        r = -1
        s = -1
        for i in range(m):
            for j in range(n):
                if not basis[i, j]:
                    red = c[i, j] - u[i] - v[j]
                    if red < best:
                        best = red
                        r = i
                        s = j
                        if bland:
                            break
            if bland and r >= 0:
                break
        if r < 0:
            status = 0
            break
        length = _tree_path(basis, r, s, parent, path)
        # Path edges alternate -, +, -, ...; the entering cell is +.
        theta = np.inf
        li = -1
        lj = -1
        for k in range(0, length - 1, 2):
            p_node = path[k]
            q_node = path[k + 1]
            if p_node < m:
                i, j = p_node, q_node - m
            else:
                i, j = q_node, p_node - m
            if x[i, j] < theta or (bland and x[i, j] == theta and i * n + j < li * n + lj):
                theta = x[i, j]
                li = i
                lj = j
        for k in range(length - 1):
            p_node = path[k]
            q_node = path[k + 1]
            if p_node < m:
                i, j = p_node, q_node - m
            else:
                i, j = q_node, p_node - m
            if k % 2 == 0:
                x[i, j] -= theta
            else:
                x[i, j] += theta
        x[r, s] += theta
        basis[li, lj] = False
        x[li, lj] = 0.0
        basis[r, s] = True
        if theta == 0.0:
            degenerate += 1
        else:
            degenerate = 0
    total = 0.0
    for i in range(m):
        for j in range(n):
            if x[i, j] < 0.0:
                x[i, j] = 0.0
            total += x[i, j] * c[i, j]
    return total, x, status


def _drop_empty(a, b, c):
    rows = a > 0.0
    cols = b > 0.0
    if rows.all() and cols.all():
        return a, b, c, None, None
    return a[rows], b[cols], np.ascontiguousarray(c[np.ix_(rows, cols)]), rows, cols


def _exact_cost(a, b, c):
    """Cost and plan of the reduced (zero-mass-free) problem; validated input."""
    ra, rb, rc, rows, cols = _drop_empty(a, b, c)
    size = ra.size + rb.size
    cost, plan, status = _transport_simplex(ra, rb, rc, 50 * size * size + 1000)
    if status != 0:
        raise TransportError("transportation simplex did not terminate within the pivot limit")
    return cost, plan, rows, cols


def wasserstein_exact(mu, nu, cost) -> TransportPlan:
    """Minimum-cost coupling of two measures with equal total mass.

    Parameters
    ----------
    mu, nu : DiscreteMeasure or array_like
        Source and target masses (only ``.masses`` is used for measures).
    cost : (m, n) array_like
        Nonnegative finite transport costs between the two supports.

    Returns
    -------
    TransportPlan
        An optimal plan over the full supports (zero-mass points get empty
        rows/columns) and its cost.  The cost is unique; the plan need not be.
    """
    a, b, c = _prepare(mu, nu, cost)
    value, plan, rows, cols = _exact_cost(a, b, c)
    if rows is not None:
        full = np.zeros(c.shape)
        full[np.ix_(rows, cols)] = plan
        plan = full
    return TransportPlan(plan, float(value))


# ---------------------------------------------------------------------------
# Sinkhorn


@numba.njit(cache=True, nogil=True, fastmath=True)
def _sinkhorn_kernel(a, b, c, reg, max_iter, tol):
    """Return (cost, plan, iterations, status); status 0 ok, 2 underflow."""
    m, n = c.shape
    f = np.empty(m)
    g = np.zeros(n)
    for i in range(m):
        lo = np.inf
        for j in range(n):
            if c[i, j] < lo:
                lo = c[i, j]
        f[i] = lo
    k = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            k[i, j] = np.exp((f[i] + g[j] - c[i, j]) / reg)
    u = np.ones(m)
    v = np.ones(n)
    kv = np.empty(m)
    ktu = np.empty(n)
    it = 0
    while it < max_iter:
        it += 1
        for i in range(m):
            s = 0.0
            for j in range(n):
                s += k[i, j] * v[j]
            kv[i] = s
        if it > 1:
            err = 0.0
            for i in range(m):
                err += abs(u[i] * kv[i] - a[i])
            if err < tol:
                break
        for i in range(m):
            if not kv[i] > 0.0:
                return np.nan, k, it, 2
            u[i] = a[i] / kv[i]
        ktu[:] = 0.0
        for i in range(m):
            ui = u[i]
            for j in range(n):
                ktu[j] += k[i, j] * ui
        for j in range(n):
            if not ktu[j] > 0.0:
                return np.nan, k, it, 2
            v[j] = b[j] / ktu[j]
        big = False
        for i in range(m):
            if u[i] > 1e50 or u[i] < 1e-50:
                big = True
        for j in range(n):
            if v[j] > 1e50 or v[j] < 1e-50:
                big = True
        if big:
            # Absorb the scalings into the log-domain potentials.
            for i in range(m):
                f[i] += reg * np.log(u[i])
                u[i] = 1.0
            for j in range(n):
                g[j] += reg * np.log(v[j])
                v[j] = 1.0
            for i in range(m):
                for j in range(n):
                    k[i, j] = np.exp((f[i] + g[j] - c[i, j]) / reg)
    total = 0.0
    for i in range(m):
        for j in range(n):
            k[i, j] = u[i] * k[i, j] * v[j]
            total += k[i, j] * c[i, j]
    if not np.isfinite(total):
        return np.nan, k, it, 2
    return total, k, it, 0


def _sinkhorn_cost(a, b, c, reg, max_iter, tol):
    ra, rb, rc, _, _ = _drop_empty(a, b, c)
    cost, plan, _, status = _sinkhorn_kernel(ra, rb, rc, float(reg), int(max_iter), float(tol))
    if status != 0:
        raise TransportError(
            f"Sinkhorn scaling underflowed at reg={reg}; use a larger regularisation"
        )
    return cost


def wasserstein_sinkhorn(
    mu,
    nu,
    cost,
    reg: float = SINKHORN_REG,
    max_iter: int = SINKHORN_MAX_ITER,
    tol: float = SINKHORN_TOL,
) -> float:
    """Transport cost of the entropically regularised optimal plan.

    Iterates alternating row/column scalings until the L1 violation of the
    source marginal drops below ``tol`` or ``max_iter`` is reached, and
    returns ``sum(plan * cost)``.
    """
    if not reg > 0.0:
        raise DomainError(f"reg must be positive, got {reg}")
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    a, b, c = _prepare(mu, nu, cost)
    return float(_sinkhorn_cost(a, b, c, reg, max_iter, tol))
