"""Up and down persistent Laplacians of non-branching pairs, and filtrations.

For a pair K <= L with L q-non-branching, let D be the rows of B_{q+1}^L
that belong to q-cells outside K.  A weak column reduction of D gives a
basis of ker D made of zero columns of D and one signed indicator vector per
regulable component.  Pushing that basis through B_{q+1}^L(I_K, :) gives

    Delta_up = B_LK W_LK B_LK^T (W_q^K)^{-1}

with W_LK diagonal, so only sparse factors ever need to be stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .complexes import extract_D
from .errors import DimensionOutOfRange
from .nbmatrix import ComponentKind, NonBranchingMatrix, ParityDSU, weak_reduce

__all__ = [
    "UpLaplacianBundle",
    "up_bundle",
    "DownLaplacian",
    "down_laplacian",
    "persistent_betti",
    "FiltrationEngine",
    "filtration_run",
]


@dataclass(frozen=True, eq=False)
class UpLaplacianBundle:
    """Sparse factors of the q-th up persistent Laplacian of a pair.

    Columns of ``B_LK`` are ordered by representative: a zero column c of D
    is represented by c, a regulable component by its largest column.
    ``sources[j]`` lists the (q+1)-cells of L behind column j.
    """

    q: int
    B_LK: sp.csc_matrix
    w_LK: np.ndarray
    s: np.ndarray
    w_K: np.ndarray
    M: sp.csc_matrix
    sources: tuple
    from_component: np.ndarray
    rows: np.ndarray
    kind: str
    unweighted: bool
    B_L: NonBranchingMatrix | None = None
    delta: np.ndarray | None = None

    @property
    def shape(self):
        return self.B_LK.shape

    @property
    def W_LK(self):
        return sp.diags(self.w_LK)

    @property
    def S(self):
        """Diagonal of S for component columns (1 / w for zero columns of D)."""
        return self.s

    @property
    def representatives(self):
        return np.array([int(src[-1]) for src in self.sources], dtype=np.int64)

    def delta_dense(self):
        """Delta_up = B_LK W_LK B_LK^T (W_q^K)^{-1}, assembled densely."""
        if self.delta is not None:
            return self.delta
        b = self.B_LK.toarray().astype(float)
        return (b * self.w_LK[None, :]) @ b.T / self.w_K[None, :]

    def symmetrized(self):
        """(W_q^K)^{-1/2} Delta (W_q^K)^{1/2} = M M^T, dense."""
        m = self.M.toarray()
        return m @ m.T

    def same_as(self, other):
        """Exact equality of the factor data."""
        a, b = self.B_LK, other.B_LK
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
            and np.array_equal(self.w_LK, other.w_LK)
            and np.array_equal(self.s, other.s)
            and np.array_equal(self.rows, other.rows)
            and len(self.sources) == len(other.sources)
            and all(np.array_equal(x, y) for x, y in zip(self.sources, other.sources))
        )


def _check_q(pair, q):
    if q < 0:
        raise DimensionOutOfRange(f"q must be >= 0, got {q}")


def _B_L(pair, q):
    big = pair.big
    if q + 1 > big.dim:
        return NonBranchingMatrix.empty(big.n(q), 0)
    return big.boundary_nb(q + 1)


def _factor(B_LK, w_K, w_LK):
    m = sp.diags(1.0 / np.sqrt(w_K)) @ B_LK.astype(np.float64) @ sp.diags(np.sqrt(w_LK))
    m = sp.csc_matrix(m)
    m.sort_indices()
    return m


def _assemble(q, pair, B_L, B_LK, w_LK, s, sources, from_component, materialize):
    big = pair.big
    rows = pair.I_K(q)
    w_K = big.weights(q)[rows]
    B_LK = sp.csc_matrix(B_LK, dtype=np.int64)
    B_LK.eliminate_zeros()
    B_LK.sort_indices()
    w1 = big.weights(q + 1)
    bundle = UpLaplacianBundle(
        q=q,
        B_LK=B_LK,
        w_LK=np.asarray(w_LK, dtype=np.float64),
        s=np.asarray(s, dtype=np.float64),
        w_K=w_K,
        M=_factor(B_LK, w_K, np.asarray(w_LK, dtype=np.float64)),
        sources=tuple(sources),
        from_component=np.asarray(from_component, dtype=bool),
        rows=rows,
        kind=big.kind,
        unweighted=bool((w1 == 1).all() and (w_K == 1).all()),
        B_L=B_L,
    )
    if materialize:
        object.__setattr__(bundle, "delta", bundle.delta_dense())
    return bundle


def up_bundle(pair, q, materialize_delta=False):
    """Factors (B_LK, W_LK, M) of the q-th up persistent Laplacian of ``pair``."""
    _check_q(pair, q)
    big = pair.big
    B_L = _B_L(pair, q)
    w1 = big.weights(q + 1)
    n1 = B_L.n_cols
    # one entry per column of B_LK: (representative, cells, signs or None)
    cols = []
    if pair.is_full(q):
        cols = [(j, np.array([j]), None) for j in range(n1)]
    else:
        red = weak_reduce(extract_D(pair, q))
        for c in red.partition:
            if c.kind is ComponentKind.ZERO:
                cols.append((int(c.cols[0]), c.cols, None))
            elif c.kind is ComponentKind.REGULABLE:
                cols.append((c.representative, c.cols, c.signs))
        cols.sort(key=lambda t: t[0])
    p_rows, p_cols, p_vals = [], [], []
    w_LK, s, sources, comp = [], [], [], []
    for j, (_, cells, signs) in enumerate(cols):
        p_rows.append(cells)
        p_cols.append(np.full(len(cells), j))
        p_vals.append(np.ones(len(cells), np.int64) if signs is None else signs.astype(np.int64))
        if signs is None:
            w_LK.append(w1[cells[0]])
            s.append(1.0 / w1[cells[0]])
        else:
            sj = math.fsum((1.0 / w1[cells]).tolist())
            s.append(sj)
            w_LK.append(1.0 / sj)
        sources.append(cells)
        comp.append(signs is not None)
    if cols:
        P = sp.csc_matrix(
            (np.concatenate(p_vals), (np.concatenate(p_rows), np.concatenate(p_cols))),
            shape=(n1, len(cols)),
        )
    else:
        P = sp.csc_matrix((n1, 0), dtype=np.int64)
    B_K = B_L.to_scipy()[pair.I_K(q), :]
    return _assemble(q, pair, B_L, B_K @ P, w_LK, s, sources, comp, materialize_delta)


@dataclass(frozen=True, eq=False)
class DownLaplacian:
    """Down Laplacian W_q B_q^T W_{q-1}^{-1} B_q and its symmetrized factor.

    ``factor`` is W_q^{1/2} B_q^T W_{q-1}^{-1/2}; factor @ factor.T equals
    W_q^{-1/2} matrix W_q^{1/2}, the same similarity used for the up part.
    """

    q: int
    factor: sp.csr_matrix
    matrix: np.ndarray | None


def down_laplacian(c, q, materialize=True):
    if q < 1:
        raise DimensionOutOfRange(f"down Laplacian needs q >= 1, got {q}")
    b = sp.csr_matrix(c.boundary_matrix(q), dtype=np.float64)
    wq, wq1 = c.weights(q), c.weights(q - 1)
    f = sp.csr_matrix(sp.diags(np.sqrt(wq)) @ b.T @ sp.diags(1.0 / np.sqrt(wq1)))
    mat = None
    if materialize:
        bd = b.toarray()
        mat = wq[:, None] * ((bd.T / wq1[None, :]) @ bd)
    return DownLaplacian(q, f, mat)


def persistent_betti(pair, q):
    """Nullity of Delta_up^{K,L} + Delta_down^K, from the rank of [M | N]."""
    from .spectral import numerical_rank

    bundle = up_bundle(pair, q)
    n = pair.n_K(q)
    if n == 0:
        return 0
    parts = [bundle.M]
    if q >= 1:
        parts.append(down_laplacian(pair.small, q, materialize=False).factor)
    stacked = sp.hstack(parts).toarray()
    return n - numerical_rank(stacked)


class FiltrationEngine:
    """Up persistent Laplacian factors along K_0 <= K_1 <= ... <= K_m <= L.

    Step i adds the q-cell ``steps[i-1]`` of L to K.  The engine starts from
    the smallest D, the one of K_m, and walks back to K_0: every step moves
    one row from the K block into D, which costs one Union/Find plus an edit
    of at most two columns of B_LK.  Bundles are then emitted in step order.
    """

    def __init__(self, pair, q, steps):
        _check_q(pair, q)
        steps = [int(x) for x in steps]
        outside = set(pair.I_LK(q).tolist())
        if len(set(steps)) != len(steps) or not set(steps) <= outside:
            raise ValueError("steps must be distinct q-cells of L outside K")
        self.pair, self.q, self.steps = pair, q, steps
        self.B_L = _B_L(pair, q)
        b = self.B_L.to_scipy().tocsc()
        self.w = pair.big.weights(q + 1)
        n1 = self.B_L.n_cols
        final = pair.mask(q).copy()
        final[steps] = True
        self._final = final
        self._dsu = ParityDSU(n1)
        # per root: b vector over L-row indices (only rows currently in K)
        self._vec = []
        for j in range(n1):
            r, v = b.indices[b.indptr[j] : b.indptr[j + 1]], b.data[b.indptr[j] : b.indptr[j + 1]]
            keep = final[r]
            self._vec.append(dict(zip(r[keep].tolist(), v[keep].tolist())))
        self._members = [[j] for j in range(n1)]
        self._touched = [False] * n1
        self._bad = [False] * n1
        self._lo = list(range(n1))
        self._hi = list(range(n1))
        self._s = [None] * n1
        self._roots = set(range(n1))
        for r in np.flatnonzero(~final).tolist():
            self._add_row(r)

    def _add_row(self, r):
        cols, vals = self.B_L.row(r)
        cols, vals = cols.tolist(), vals.tolist()
        dsu = self._dsu
        if len(cols) == 1:
            root = dsu.find(cols[0])
            self._touched[root] = self._bad[root] = True
        elif len(cols) == 2:
            keep, gone, t, ok = dsu.link(cols[0], cols[1], -vals[0] * vals[1])
            self._touched[keep] = True
            if gone is None:
                if not ok:
                    self._bad[keep] = True
                return
            big, small = self._vec[keep], self._vec[gone]
            for row, v in small.items():
                nv = big.get(row, 0) + t * v
                if nv:
                    big[row] = nv
                else:
                    big.pop(row, None)
            self._vec[gone] = None
            self._members[keep].extend(self._members[gone])
            self._members[gone] = None
            self._bad[keep] = self._bad[keep] or self._bad[gone]
            self._lo[keep] = min(self._lo[keep], self._lo[gone])
            self._hi[keep] = max(self._hi[keep], self._hi[gone])
            self._s[keep] = None
            self._roots.discard(gone)

    def _move_to_D(self, r):
        """q-cell r leaves K: drop it from the K block, then add its row to D."""
        cols, _ = self.B_L.row(r)
        for c in {self._dsu.find(int(c)) for c in cols}:
            self._vec[c].pop(r, None)
        self._add_row(r)

    def _bundle(self, mask):
        pair = self.pair
        q = self.q
        pos = np.cumsum(mask) - 1
        cols = []
        for root in self._roots:
            if not self._touched[root]:
                cols.append((root, root, 1, False))
            elif not self._bad[root]:
                lo = self._lo[root]
                cols.append((self._hi[root], root, self._dsu.flag(lo), True))
        cols.sort()
        indptr, indices, data = [0], [], []
        w_LK, s, sources, comp = [], [], [], []
        for _, root, lead, is_comp in cols:
            vec = self._vec[root]
            rows = sorted(vec)
            indices.extend(pos[rows].tolist())
            data.extend(lead * vec[x] for x in rows)
            indptr.append(len(indices))
            if is_comp:
                if self._s[root] is None:
                    self._s[root] = math.fsum((1.0 / self.w[self._members[root]]).tolist())
                s.append(self._s[root])
                w_LK.append(1.0 / self._s[root])
                sources.append(np.array(sorted(self._members[root]), dtype=np.int64))
            else:
                s.append(1.0 / self.w[root])
                w_LK.append(self.w[root])
                sources.append(np.array([root], dtype=np.int64))
            comp.append(is_comp)
        n_rows = int(mask.sum())
        B_LK = sp.csc_matrix(
            (np.array(data, dtype=np.int64), np.array(indices, dtype=np.int64), np.array(indptr)),
            shape=(n_rows, len(cols)),
        )
        step_pair = _MaskedPair(pair, q, mask)
        return _assemble(q, step_pair, self.B_L, B_LK, w_LK, s, sources, comp, False)

    def run(self):
        """Bundles for K_0, ..., K_m in step order."""
        mask = self._final.copy()
        out = [self._bundle(mask)]
        for r in reversed(self.steps):
            self._move_to_D(r)
            mask[r] = False
            out.append(self._bundle(mask))
        out.reverse()
        return out


class _MaskedPair:
    """Just enough of a ComplexPair for bundle assembly at one filtration step."""

    def __init__(self, pair, q, mask):
        self.big = pair.big
        self._q = q
        self._mask = mask.copy()

    def I_K(self, q):
        return np.flatnonzero(self._mask)


def filtration_run(pair, q, steps, emit=None):
    """Run the filtration engine; call ``emit(step, bundle)`` in step order."""
    bundles = FiltrationEngine(pair, q, steps).run()
    if emit is not None:
        for i, b in enumerate(bundles):
            emit(i, b)
    return bundles
