"""Slow, independent reference computations used by tests and benchmarks.

Nothing here relies on the union-find machinery: ranks come from exact
integer elimination, components from breadth-first search, and persistent
Laplacians from an explicit null-space basis.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "exact_rank",
    "bfs_components",
    "dense_up_laplacian",
    "dense_down_laplacian",
    "dense_persistent_laplacian",
    "dense_nullity",
]


def _reduce_column(col, pivots, columns):
    """Clear col (a dict row -> int) against the stored pivot columns.

    Returns the reduced column, empty if it became zero.
    """
    while col:
        low = max(col)
        j = pivots.get(low)
        if j is None:
            return col
        piv = columns[j]
        a, b = col[low], piv[low]
        # fraction-free step col <- b*col - a*piv, then divide out the content
        new = {r: b * v for r, v in col.items()}
        for r, v in piv.items():
            nv = new.get(r, 0) - a * v
            if nv:
                new[r] = nv
            else:
                new.pop(r, None)
        g = 0
        for v in new.values():
            g = math.gcd(g, v)
        col = {r: v // g for r, v in new.items()} if g > 1 else new
    return col


def exact_rank(a):
    """Rank over Q by fraction-free column elimination on integer entries.

    Accepts a dense integer array, a scipy sparse matrix or a
    NonBranchingMatrix.  Columns are kept as sparse dicts, so the cost is
    driven by fill-in.
    """
    if hasattr(a, "to_scipy"):
        a = a.to_scipy()
    a = sp.csc_matrix(a)
    a.sum_duplicates()
    a.eliminate_zeros()
    if a.nnz and not np.array_equal(a.data, np.round(a.data)):
        raise ValueError("exact_rank needs integer entries")
    pivots, columns = {}, []
    for j in range(a.shape[1]):
        lo, hi = a.indptr[j], a.indptr[j + 1]
        col = {int(r): int(v) for r, v in zip(a.indices[lo:hi], a.data[lo:hi])}
        col = _reduce_column(col, pivots, columns)
        if col:
            pivots[max(col)] = len(columns)
            columns.append(col)
    return len(columns)


def bfs_components(m):
    """Connected components of the column graph of a non-branching matrix."""
    adj = [[] for _ in range(m.n_cols)]
    for r in range(m.n_rows):
        cols, _ = m.row(r)
        if len(cols) == 2:
            a, b = int(cols[0]), int(cols[1])
            adj[a].append(b)
            adj[b].append(a)
    seen = [False] * m.n_cols
    out = []
    for s in range(m.n_cols):
        if seen[s]:
            continue
        seen[s] = True
        comp, queue = [], deque([s])
        while queue:
            x = queue.popleft()
            comp.append(x)
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    queue.append(y)
        out.append(sorted(comp))
    return out


def _null_space(a):
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    return sla.null_space(a)


def dense_up_laplacian(pair, q):
    """Up persistent Laplacian from an orthonormal basis Z of ker D.

    Uses B_LK = B(I_K, :) Z and W_LK = (Z^T W^{-1} Z)^{-1}, valid for any
    basis of the subspace of (q+1)-chains whose boundary lies in K.
    """
    big = pair.big
    IK, ILK = pair.I_K(q), pair.I_LK(q)
    nK = len(IK)
    if q + 1 > big.dim:
        return np.zeros((nK, nK))
    b = big.boundary_matrix(q + 1).toarray().astype(float)
    w1 = big.weights(q + 1)
    wK = big.weights(q)[IK]
    z = _null_space(b[ILK, :])
    if z.shape[1] == 0:
        return np.zeros((nK, nK))
    blk = b[IK, :] @ z
    wlk = np.linalg.inv(z.T @ (z / w1[:, None]))
    return blk @ wlk @ blk.T / wK[None, :]


def dense_down_laplacian(c, q):
    """W_q B_q^T W_{q-1}^{-1} B_q, the adjoint form under <s, s> = 1 / w(s)."""
    if q < 1 or c.n(q - 1) == 0:
        return np.zeros((c.n(q), c.n(q)))
    b = c.boundary_matrix(q).toarray().astype(float)
    return c.weights(q)[:, None] * (b.T / c.weights(q - 1)[None, :]) @ b


def dense_persistent_laplacian(pair, q):
    return dense_up_laplacian(pair, q) + dense_down_laplacian(pair.small, q)


def dense_nullity(pair, q, rtol=1e-9):
    """dim ker of the persistent Laplacian, via its symmetrized dense form."""
    d = dense_persistent_laplacian(pair, q)
    n = d.shape[0]
    if n == 0:
        return 0
    w = pair.big.weights(q)[pair.I_K(q)]
    sym = (d * np.sqrt(w)[None, :]) / np.sqrt(w)[:, None]
    sym = (sym + sym.T) / 2
    ev = np.linalg.eigvalsh(sym)
    scale = max(1.0, float(np.abs(ev).max()))
    return int((np.abs(ev) <= rtol * scale).sum())
