"""Non-branching matrices and their weak column reduction.

A non-branching matrix has entries in {-1, 0, 1} and at most two nonzeros per
row.  Reading it as the transposed incidence matrix of a graph whose vertices
are the columns (rows with a single nonzero are loops), its null space is
decided entirely by the connected components of that graph.  Components are
found with a disjoint-set union, so the reduction costs O(k alpha(l) + l).

Everything in this module is exact integer arithmetic.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DuplicateEntry, NonBranchingViolation

__all__ = [
    "NonBranchingMatrix",
    "build_csr",
    "DSU",
    "ParityDSU",
    "dsu_components",
    "ComponentKind",
    "Component",
    "ComponentPartition",
    "classify_components",
    "reorient",
    "WeakReduction",
    "weak_reduce",
    "rank",
]


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NonBranchingMatrix:
    """CSR matrix with entries +-1 and at most two nonzeros per row."""

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n_rows", int(self.n_rows))
        object.__setattr__(self, "n_cols", int(self.n_cols))
        object.__setattr__(self, "row_ptr", _frozen(self.row_ptr, np.int64))
        object.__setattr__(self, "col_idx", _frozen(self.col_idx, np.int64))
        object.__setattr__(self, "val", _frozen(self.val, np.int8))
        self._validate()

    def _validate(self):
        k, l = self.n_rows, self.n_cols
        ptr, col, val = self.row_ptr, self.col_idx, self.val
        if k < 0 or l < 0:
            raise ValueError("negative shape")
        if ptr.shape != (k + 1,) or ptr[0] != 0 or ptr[-1] != len(col) or len(col) != len(val):
            raise ValueError("inconsistent CSR arrays")
        counts = np.diff(ptr)
        if (counts < 0).any():
            raise ValueError("row_ptr must be nondecreasing")
        if (counts > 2).any():
            r = int(np.flatnonzero(counts > 2)[0])
            raise NonBranchingViolation(f"row {r} has {counts[r]} nonzeros", row=r)
        bad = np.flatnonzero((val != 1) & (val != -1))
        if len(bad):
            r = int(np.searchsorted(ptr, bad[0], side="right") - 1)
            raise NonBranchingViolation(f"row {r} has an entry outside {{-1, 1}}", row=r)
        if len(col) and (col.min() < 0 or col.max() >= l):
            raise ValueError("column index out of range")
        two = np.flatnonzero(counts == 2)
        p = ptr[two]
        if (col[p] >= col[p + 1]).any():
            r = int(two[np.flatnonzero(col[p] >= col[p + 1])[0]])
            if col[ptr[r]] == col[ptr[r] + 1]:
                raise DuplicateEntry(f"row {r} repeats column {col[ptr[r]]}", row=r)
            raise ValueError(f"row {r}: column indices not increasing")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.col_idx)

    def row_nnz(self):
        return np.diff(self.row_ptr)

    def row(self, i):
        a, b = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[a:b], self.val[a:b]

    def column_counts(self):
        return np.bincount(self.col_idx, minlength=self.n_cols)

    def row_indices(self):
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.n_rows), self.row_nnz())

    def triplets(self):
        return list(zip(self.row_indices().tolist(), self.col_idx.tolist(), self.val.tolist()))

    def to_scipy(self, dtype=np.int64):
        return sp.csr_matrix(
            (self.val.astype(dtype), self.col_idx, self.row_ptr), shape=self.shape
        )

    def to_dense(self, dtype=np.int64):
        out = np.zeros(self.shape, dtype=dtype)
        out[self.row_indices(), self.col_idx] = self.val
        return out

    def take_rows(self, rows):
        """Submatrix on the given rows, in the given order."""
        rows = np.asarray(rows, dtype=np.int64)
        counts = np.diff(self.row_ptr)[rows]
        ptr = np.concatenate([[0], np.cumsum(counts)])
        if len(rows):
            idx = np.concatenate(
                [np.arange(self.row_ptr[r], self.row_ptr[r + 1]) for r in rows]
            ).astype(np.int64)
        else:
            idx = np.zeros(0, dtype=np.int64)
        return NonBranchingMatrix(len(rows), self.n_cols, ptr, self.col_idx[idx], self.val[idx])

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        r, c = np.nonzero(a)
        return build_csr(list(zip(r.tolist(), c.tolist(), a[r, c].tolist())), shape=a.shape)

    @classmethod
    def from_scipy(cls, m):
        m = sp.coo_matrix(m)
        m.eliminate_zeros()
        return build_csr(
            list(zip(m.row.tolist(), m.col.tolist(), m.data.tolist())), shape=m.shape
        )

    @classmethod
    def empty(cls, n_rows, n_cols):
        return cls(n_rows, n_cols, np.zeros(n_rows + 1, np.int64), [], [])

    def __eq__(self, other):
        if not isinstance(other, NonBranchingMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.val, other.val)
        )

    __hash__ = None

    def __repr__(self):
        return f"NonBranchingMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def build_csr(triplets, shape=None):
    """Build a NonBranchingMatrix from (row, col, value) triplets."""
    t = np.asarray(list(triplets), dtype=np.float64).reshape(-1, 3)
    rows = t[:, 0].astype(np.int64)
    cols = t[:, 1].astype(np.int64)
    vals = t[:, 2]
    if shape is None:
        shape = (int(rows.max()) + 1 if len(rows) else 0, int(cols.max()) + 1 if len(cols) else 0)
    k, l = int(shape[0]), int(shape[1])
    if len(rows) and (rows.min() < 0 or rows.max() >= k or cols.min() < 0 or cols.max() >= l):
        raise ValueError("triplet index outside the matrix shape")
    bad = np.flatnonzero((vals != 1) & (vals != -1))
    if len(bad):
        r = int(rows[bad[0]])
        raise NonBranchingViolation(f"row {r} has value {vals[bad[0]]:g} outside {{-1, 1}}", row=r)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    dup = np.flatnonzero((rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1]))
    if len(dup):
        i = dup[0]
        raise DuplicateEntry(f"duplicate entry at ({rows[i]}, {cols[i]})", row=int(rows[i]))
    counts = np.bincount(rows, minlength=k)
    if (counts > 2).any():
        r = int(np.flatnonzero(counts > 2)[0])
        raise NonBranchingViolation(f"row {r} has {counts[r]} nonzeros", row=r)
    ptr = np.concatenate([[0], np.cumsum(counts)])
    return NonBranchingMatrix(k, l, ptr, cols, vals.astype(np.int8))


class DSU:
    """Disjoint-set union with union by rank and path compression."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def __len__(self):
        return len(self.parent)

    def find(self, x):
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y):
        """Merge the sets of x and y; return the surviving root."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return rx
        rank = self.rank
        if rank[rx] < rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if rank[rx] == rank[ry]:
            rank[rx] += 1
        return rx

    def roots(self):
        """Fully compress and return the root of every element."""
        find = self.find
        return np.array([find(x) for x in range(len(self.parent))], dtype=np.int64)


def _edges(m):
    """Column pairs, sign products and row ids of the 2-nonzero rows."""
    two = np.flatnonzero(m.row_nnz() == 2)
    p = m.row_ptr[two]
    return m.col_idx[p], m.col_idx[p + 1], m.val[p] * m.val[p + 1], two


def dsu_components(m):
    dsu = DSU(m.n_cols)
    a, b, _, _ = _edges(m)
    union = dsu.union
    for x, y in zip(a.tolist(), b.tolist()):
        union(x, y)
    return dsu


class ParityDSU:
    """Union-find that also tracks a +-1 flag of each element relative to its root.

    ``link(u, v, want)`` imposes flag[u] * flag[v] == want.  Union is by set
    size so that callers merging per-set payloads can always fold the
    smaller payload into the larger one.
    """

    def __init__(self, n):
        self.parent = list(range(n))
        self.par = [1] * n
        self.size = [1] * n

    def find(self, x):
        parent, par = self.parent, self.par
        path = []
        while parent[x] != x:
            path.append(x)
            x = parent[x]
        acc = 1
        for node in reversed(path):
            acc *= par[node]
            par[node] = acc
            parent[node] = x
        return x

    def flag(self, x):
        """Flag of x relative to its root."""
        return 1 if self.find(x) == x else self.par[x]

    def link(self, u, v, want):
        """Returns (root, absorbed_root_or_None, relative_flag, consistent)."""
        ru, rv = self.find(u), self.find(v)
        pu = self.par[u] if u != ru else 1
        pv = self.par[v] if v != rv else 1
        if ru == rv:
            return ru, None, 1, pu * pv == want
        if self.size[ru] < self.size[rv]:
            ru, rv = rv, ru
        t = want * pu * pv
        self.parent[rv] = ru
        self.par[rv] = t
        self.size[ru] += self.size[rv]
        return ru, rv, t, True


def _orient(n, a, b, prod):
    """Single pass of a parity union-find over the edges (a[i], b[i]).

    An edge with sign product prod[i] asks for flags with
    flag[a] * flag[b] = -prod[i], so that the row becomes one +1 and one -1.
    Returns the flag of each element relative to its root, the roots, and
    the positions of the edges that contradict earlier ones.
    """
    pd = ParityDSU(n)
    conflicts = []
    for i, (u, v, p) in enumerate(zip(a.tolist(), b.tolist(), prod.tolist())):
        if not pd.link(u, v, -p)[3]:
            conflicts.append(i)
    flags = np.array([pd.flag(x) for x in range(n)], dtype=np.int8)
    return flags, np.array(pd.parent, dtype=np.int64), conflicts


def reorient(m_sub):
    """Find column flags that make every 2-nonzero row carry one +1 and one -1.

    Returns ``(isorientable, signs)``.  Signs are normalized so that the
    smallest column of each connected piece keeps +1.  Rows with a single
    nonzero are ignored.
    """
    a, b, prod, _ = _edges(m_sub)
    flags, roots, conflicts = _orient(m_sub.n_cols, a, b, prod)
    if m_sub.n_cols:
        _, first = np.unique(roots, return_index=True)
        lead = np.empty(m_sub.n_cols, dtype=np.int8)
        lead[roots[first]] = flags[first]
        flags = flags * lead[roots]
    return not conflicts, flags.astype(np.int8)


class ComponentKind(str, enum.Enum):
    ZERO = "zero-column"
    REGULABLE = "regulable"
    IRREGULAR = "irregular"
    ROW_SINGULAR = "row-singular"


@dataclass(frozen=True, eq=False)
class Component:
    kind: ComponentKind
    cols: np.ndarray
    rows: np.ndarray
    signs: np.ndarray | None = None

    @property
    def representative(self):
        """Index of the kernel column (largest column) for regulable components."""
        return int(self.cols[-1]) if self.kind is ComponentKind.REGULABLE else None

    def __len__(self):
        return len(self.cols)


@dataclass(frozen=True, eq=False)
class ComponentPartition:
    components: tuple
    label: np.ndarray

    def of_kind(self, kind):
        return [c for c in self.components if c.kind is kind]

    @property
    def regulable(self):
        return self.of_kind(ComponentKind.REGULABLE)

    def count(self, kind):
        return sum(1 for c in self.components if c.kind is kind)

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)


def _group(keys, n_groups):
    """Indices 0..len(keys)-1 grouped by key, each group ascending."""
    order = np.argsort(keys, kind="stable")
    bounds = np.cumsum(np.bincount(keys, minlength=n_groups))[:-1]
    return np.split(order, bounds)


def classify_components(m, dsu):
    l = m.n_cols
    roots = dsu.roots()
    if l == 0:
        return ComponentPartition((), roots)
    # number components by their smallest column
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    rank_of = np.empty(len(first), dtype=np.int64)
    rank_of[np.argsort(first, kind="stable")] = np.arange(len(first))
    label = rank_of[inverse.ravel()]
    n_comp = len(first)

    counts = np.diff(m.row_ptr)
    live = np.flatnonzero(counts > 0)
    row_label = label[m.col_idx[m.row_ptr[live]]]
    singular = np.zeros(n_comp, dtype=bool)
    loops = m.row_ptr[:-1][counts == 1]
    singular[label[m.col_idx[loops]]] = True

    a, b, prod, _ = _edges(m)
    flags, _, conflicts = _orient(l, a, b, prod)
    irregular = np.zeros(n_comp, dtype=bool)
    irregular[label[a[conflicts]]] = True
    col_count = m.column_counts()

    col_groups = _group(label, n_comp)
    row_groups = _group(row_label, n_comp)
    comps = []
    for i, (cols, rws) in enumerate(zip(col_groups, row_groups)):
        cols = _frozen(cols, np.int64)
        rows = _frozen(live[rws], np.int64)
        if col_count[cols[0]] == 0:
            kind, signs = ComponentKind.ZERO, None
        elif singular[i]:
            kind, signs = ComponentKind.ROW_SINGULAR, None
        elif irregular[i]:
            kind, signs = ComponentKind.IRREGULAR, None
        else:
            s = flags[cols]
            kind, signs = ComponentKind.REGULABLE, _frozen(s * s[0], np.int8)
        comps.append(Component(kind, cols, rows, signs))
    return ComponentPartition(tuple(comps), _frozen(label, np.int64))


@dataclass(frozen=True, eq=False)
class WeakReduction:
    """R = D E V with V upper triangular and the nonzero columns of R independent.

    ``V`` holds 0/1 entries (identity plus one all-ones kernel column per
    regulable component); signs live in ``E``.  ``kernel_basis`` returns the
    columns of E V spanning ker D.
    """

    R: NonBranchingMatrix
    E: np.ndarray
    V: sp.csc_matrix
    kernel_cols: np.ndarray
    partition: ComponentPartition

    @property
    def nullity(self):
        return len(self.kernel_cols)

    @property
    def rank(self):
        return self.R.n_cols - self.nullity

    def kernel_basis(self):
        """Sparse l x nullity matrix whose columns form an orthogonal basis of ker D."""
        ev = sp.diags(self.E.astype(np.int64)) @ self.V
        return sp.csc_matrix(ev[:, self.kernel_cols])


def weak_reduce(m):
    dsu = dsu_components(m)
    part = classify_components(m, dsu)
    l = m.n_cols
    E = np.ones(l, dtype=np.int8)
    v_rows, v_cols = [np.arange(l)], [np.arange(l)]
    reps = []
    for c in part.regulable:
        E[c.cols] = c.signs
        rep = c.representative
        reps.append(rep)
        v_rows.append(c.cols[:-1])
        v_cols.append(np.full(len(c.cols) - 1, rep))
    v_rows = np.concatenate(v_rows)
    V = sp.csc_matrix(
        (np.ones(len(v_rows), dtype=np.int64), (v_rows, np.concatenate(v_cols))), shape=(l, l)
    )
    V.sort_indices()

    is_rep = np.zeros(l, dtype=bool)
    is_rep[reps] = True
    keep = ~is_rep[m.col_idx]
    rows = m.row_indices()[keep]
    ptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=m.n_rows))])
    R = NonBranchingMatrix(
        m.n_rows, l, ptr, m.col_idx[keep], (m.val * E[m.col_idx])[keep]
    )
    zero = np.flatnonzero(m.column_counts() == 0)
    kernel = np.union1d(zero, np.asarray(reps, dtype=np.int64))
    return WeakReduction(R, _frozen(E, np.int8), V, _frozen(kernel, np.int64), part)


def rank(m):
    """Rank over the reals: l minus regulable components minus zero columns."""
    part = classify_components(m, dsu_components(m))
    return m.n_cols - part.count(ComponentKind.REGULABLE) - part.count(ComponentKind.ZERO)
