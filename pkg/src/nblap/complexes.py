"""Weighted simplicial and cubical complexes, pairs K <= L, and image ingestion.

Cells are stored per dimension in a fixed order; the position of a cell in
that order is its row/column index in every boundary matrix.  Simplices are
tuples of vertex labels whose order is the orientation (the default builders
use increasing order).  Cubes are tuples of elementary intervals ``(lo, hi)``
with ``hi - lo`` in {0, 1}, one per axis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    ComplexError,
    DimensionOutOfRange,
    FaceMissing,
    InputError,
    NonPositiveWeight,
    NotNonBranching,
    NotSubcomplex,
    OddDimensions,
)
from .nbmatrix import NonBranchingMatrix

__all__ = [
    "Complex",
    "SimplicialComplex",
    "CubicalComplex",
    "ComplexPair",
    "GrayImage",
    "boundary_matrix",
    "is_q_nonbranching",
    "extract_D",
    "cubical_from_image",
    "max_pool",
    "cube_filtration",
    "pixel_cell_values",
]


def _perm_sign(src, dst):
    """Sign of the permutation taking tuple src to tuple dst."""
    pos = {v: i for i, v in enumerate(dst)}
    p = [pos[v] for v in src]
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inv % 2 else 1


class Complex:
    """Base class: ordered cells per dimension, positive weights, boundary maps.

    Subclasses define ``canonical`` (an orientation-free lookup key) and
    ``_raw_faces`` (signed codimension-one faces, as keys).
    """

    kind = "abstract"

    def __init__(self, cells, weights=None):
        self._cells = [list(map(self._normalize, c)) for c in cells]
        while self._cells and not self._cells[-1]:
            self._cells.pop()
        self._index = []
        for q, cs in enumerate(self._cells):
            idx = {}
            for i, c in enumerate(cs):
                if self.cell_dim(c) != q:
                    raise DimensionOutOfRange(f"cell {c} listed in dimension {q}")
                k = self.canonical(c)
                if k in idx:
                    raise ComplexError(f"cell {c} listed twice")
                idx[k] = i
            self._index.append(idx)
        self._weights = []
        for q in range(len(self._cells)):
            w = None if weights is None or q >= len(weights) else weights[q]
            self._weights.append(self._check_weights(q, w))
        self._bd = {}
        for q in range(1, len(self._cells)):
            self.boundary_matrix(q)

    # overridable hooks
    @staticmethod
    def _normalize(cell):
        return tuple(cell)

    def cell_dim(self, cell):
        raise NotImplementedError

    def canonical(self, cell):
        raise NotImplementedError

    def _raw_faces(self, cell):
        raise NotImplementedError

    def _check_weights(self, q, w):
        n = len(self._cells[q])
        if w is None:
            return np.ones(n)
        w = np.array(w, dtype=np.float64).reshape(-1)
        if w.shape != (n,):
            raise InputError(f"dimension {q}: expected {n} weights, got {len(w)}")
        if not (w > 0).all():
            raise NonPositiveWeight(f"dimension {q}: weights must be strictly positive")
        w.setflags(write=False)
        return w

    @property
    def dim(self):
        return len(self._cells) - 1

    def n(self, q):
        return len(self._cells[q]) if 0 <= q < len(self._cells) else 0

    def cells(self, q):
        return list(self._cells[q]) if 0 <= q < len(self._cells) else []

    def weights(self, q):
        if 0 <= q < len(self._weights):
            return self._weights[q]
        return np.ones(0)

    def index_of(self, cell):
        q = self.cell_dim(self._normalize(cell))
        return self._index[q][self.canonical(self._normalize(cell))]

    def __contains__(self, cell):
        cell = self._normalize(cell)
        q = self.cell_dim(cell)
        return 0 <= q < len(self._index) and self.canonical(cell) in self._index[q]

    def faces(self, cell):
        """Signed faces as (index into dimension q-1, sign)."""
        q = self.cell_dim(cell)
        out = []
        for f, s in self._raw_faces(cell):
            k = self.canonical(f)
            try:
                i = self._index[q - 1][k]
            except (KeyError, IndexError):
                raise NotSubcomplex(f"face {f} of {cell} is not a cell") from None
            out.append((i, s * self._orientation_sign(f, self._cells[q - 1][i])))
        return out

    def _orientation_sign(self, face, stored):
        return 1

    def boundary_matrix(self, q):
        """Sparse (n_{q-1} x n_q) signed incidence matrix of the q-th boundary map."""
        if q < 1:
            raise DimensionOutOfRange(f"boundary map needs q >= 1, got {q}")
        if q not in self._bd:
            rows, cols, vals = [], [], []
            for j, c in enumerate(self.cells(q)):
                for i, s in self.faces(c):
                    rows.append(i)
                    cols.append(j)
                    vals.append(s)
            b = sp.csr_matrix(
                (np.array(vals, dtype=np.int64), (rows, cols)), shape=(self.n(q - 1), self.n(q))
            )
            b.sum_duplicates()
            b.eliminate_zeros()
            b.sort_indices()
            self._bd[q] = b
        return self._bd[q]

    def boundary_nb(self, q):
        """The q-th boundary matrix as a NonBranchingMatrix."""
        b = self.boundary_matrix(q)
        counts = np.diff(b.indptr)
        if (counts > 2).any():
            r = int(np.flatnonzero(counts > 2)[0])
            raise NotNonBranching(
                f"{q - 1}-cell {self._cells[q - 1][r]} is a face of {counts[r]} {q}-cells"
            )
        return NonBranchingMatrix(b.shape[0], b.shape[1], b.indptr, b.indices, b.data)

    def check_boundary_squares(self):
        """True iff B_q B_{q+1} = 0 for all q (exact integers)."""
        for q in range(1, self.dim):
            if (self.boundary_matrix(q) @ self.boundary_matrix(q + 1)).count_nonzero():
                return False
        return True

    def subcomplex(self, masks):
        """The complex on the masked cells, keeping order and weights."""
        cells, weights = [], []
        for q in range(len(self._cells)):
            m = np.asarray(masks[q], dtype=bool) if q < len(masks) else np.zeros(self.n(q), bool)
            cells.append([c for c, keep in zip(self._cells[q], m) if keep])
            weights.append(self._weights[q][m])
        return type(self)(cells, weights)

    def with_weights(self, q, w):
        weights = [self.weights(p) for p in range(len(self._cells))]
        weights[q] = w
        return type(self)(self._cells, weights)

    def unweighted(self):
        return all((w == 1).all() for w in self._weights)

    def __repr__(self):
        counts = ", ".join(str(len(c)) for c in self._cells)
        return f"{type(self).__name__}([{counts}])"


class SimplicialComplex(Complex):
    """Simplices are vertex tuples; the tuple order is the orientation."""

    kind = "simplicial"

    def cell_dim(self, cell):
        return len(cell) - 1

    def canonical(self, cell):
        return tuple(sorted(cell))

    def _raw_faces(self, cell):
        if len(cell) < 2:
            return []
        return [(cell[:i] + cell[i + 1 :], -1 if i % 2 else 1) for i in range(len(cell))]

    def _orientation_sign(self, face, stored):
        return _perm_sign(face, stored)

    @classmethod
    def from_simplices(cls, simplices, weights=None):
        """Closure of the given simplices, each dimension in lexicographic order."""
        by_dim = {}
        for s in simplices:
            s = tuple(sorted(s))
            for r in range(1, len(s) + 1):
                by_dim.setdefault(r - 1, set()).update(itertools.combinations(s, r))
        top = max(by_dim, default=-1)
        return cls([sorted(by_dim.get(q, ())) for q in range(top + 1)], weights)

    @classmethod
    def standard_simplex(cls, d):
        return cls.from_simplices([tuple(range(d + 1))])


class CubicalComplex(Complex):
    """Cubes are tuples of elementary intervals (lo, hi), hi - lo in {0, 1}."""

    kind = "cubical"

    @staticmethod
    def _normalize(cell):
        out = tuple((int(a), int(b)) for a, b in cell)
        for a, b in out:
            if b - a not in (0, 1):
                raise ComplexError(f"{cell} is not a product of elementary intervals")
        return out

    def cell_dim(self, cell):
        return sum(b - a for a, b in cell)

    def canonical(self, cell):
        return cell

    def _raw_faces(self, cell):
        # d(I x J) = dI x J + (-1)^{dim I} I x dJ, with d[k, k+1] = [k+1] - [k]
        out = []
        sign = 1
        for i, (a, b) in enumerate(cell):
            if b == a + 1:
                out.append((cell[:i] + ((b, b),) + cell[i + 1 :], sign))
                out.append((cell[:i] + ((a, a),) + cell[i + 1 :], -sign))
                sign = -sign
        return out

    @classmethod
    def from_cubes(cls, cubes, weights=None):
        """Closure of the given cubes, each dimension in lexicographic key order."""
        by_dim = {}
        for c in cubes:
            c = cls._normalize(c)
            choices = [[(a, b), (a, a), (b, b)] if b > a else [(a, b)] for a, b in c]
            for f in itertools.product(*choices):
                by_dim.setdefault(sum(y - x for x, y in f), set()).add(f)
        top = max(by_dim, default=-1)
        return cls([sorted(by_dim.get(q, ())) for q in range(top + 1)], weights)


def boundary_matrix(c, q):
    return c.boundary_matrix(q)


def is_q_nonbranching(c, q):
    """True iff every q-cell is a face of at most two (q+1)-cells."""
    if q < 0:
        raise DimensionOutOfRange(f"q must be >= 0, got {q}")
    if q + 1 > c.dim:
        return True
    return bool((np.diff(c.boundary_matrix(q + 1).indptr) <= 2).all())


class ComplexPair:
    """A subcomplex K of L, stored as membership masks over L's cells.

    K inherits L's cell order and weights, so rows of matrices built for K
    follow L's order restricted to K.
    """

    def __init__(self, big, masks):
        self.big = big
        self._masks = []
        for q in range(big.dim + 1):
            m = np.zeros(big.n(q), dtype=bool) if q >= len(masks) else np.asarray(masks[q], bool)
            if m.shape != (big.n(q),):
                raise ValueError(f"dimension {q}: mask has wrong length")
            m = m.copy()
            m.setflags(write=False)
            self._masks.append(m)
        for q in range(1, big.dim + 1):
            b = abs(big.boundary_matrix(q))
            hit = b @ self._masks[q].astype(np.int64)
            bad = np.flatnonzero((hit > 0) & ~self._masks[q - 1])
            if len(bad):
                raise NotSubcomplex(
                    f"{q - 1}-cell {big.cells(q - 1)[bad[0]]} is a face of K but not in K"
                )
        self._small = None

    @classmethod
    def from_complexes(cls, big, small):
        masks = []
        for q in range(big.dim + 1):
            m = np.zeros(big.n(q), dtype=bool)
            for c in small.cells(q):
                if c not in big:
                    raise NotSubcomplex(f"cell {c} of K is not in L")
                m[big.index_of(c)] = True
            masks.append(m)
        if small.dim > big.dim:
            raise NotSubcomplex("K has higher dimension than L")
        return cls(big, masks)

    @classmethod
    def full(cls, big):
        return cls(big, [np.ones(big.n(q), dtype=bool) for q in range(big.dim + 1)])

    def mask(self, q):
        return self._masks[q] if 0 <= q < len(self._masks) else np.zeros(0, bool)

    def I_K(self, q):
        return np.flatnonzero(self.mask(q))

    def I_LK(self, q):
        return np.flatnonzero(~self.mask(q))

    def n_K(self, q):
        return int(self.mask(q).sum())

    @property
    def small(self):
        if self._small is None:
            self._small = self.big.subcomplex(self._masks)
        return self._small

    def with_cells(self, q, indices):
        """A new pair whose K also contains the given q-cells of L and their faces."""
        masks = [m.copy() for m in self._masks]
        masks[q][np.asarray(indices, dtype=np.int64)] = True
        for p in range(q, 0, -1):
            b = abs(self.big.boundary_matrix(p))
            masks[p - 1] |= (b @ masks[p].astype(np.int64)) > 0
        return ComplexPair(self.big, masks)

    def is_full(self, q):
        return bool(self.mask(q).all())


def extract_D(pair, q):
    """Rows of B_{q+1}^L belonging to q-cells of L that are not in K."""
    if q < 0:
        raise DimensionOutOfRange(f"q must be >= 0, got {q}")
    if q + 1 > pair.big.dim:
        return NonBranchingMatrix.empty(len(pair.I_LK(q)), 0)
    b = pair.big.boundary_nb(q + 1)
    return b.take_rows(pair.I_LK(q))


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image; ``values`` has shape (height, width)."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.size != self.width * self.height:
            raise InputError("values length must equal width * height")
        if v.size and (v.min() < 0 or v.max() > 255):
            raise InputError("intensities must lie in [0, 255]")
        v = v.reshape(self.height, self.width).astype(np.uint8)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a)
        return cls(a.shape[1], a.shape[0], a)


def cubical_from_image(img, threshold):
    """Cubical complex of the pixels with value < threshold (2-cubes plus faces)."""
    ys, xs = np.nonzero(img.values < threshold)
    squares, edges, verts = set(), set(), set()
    for x, y in zip(xs.tolist(), ys.tolist()):
        squares.add(((x, x + 1), (y, y + 1)))
        edges.update(
            [((x, x + 1), (y, y)), ((x, x + 1), (y + 1, y + 1)), ((x, x), (y, y + 1)), ((x + 1, x + 1), (y, y + 1))]
        )
        verts.update([((x, x), (y, y)), ((x + 1, x + 1), (y, y)), ((x, x), (y + 1, y + 1)), ((x + 1, x + 1), (y + 1, y + 1))])
    return CubicalComplex([sorted(verts), sorted(edges), sorted(squares)])


def max_pool(img):
    """2x2 max-pooling."""
    if img.width % 2 or img.height % 2:
        raise OddDimensions(f"max-pooling needs even dimensions, got {img.width}x{img.height}")
    v = img.values.reshape(img.height // 2, 2, img.width // 2, 2).max(axis=(1, 3))
    return GrayImage.from_array(v)


def pixel_cell_values(img, c, q):
    """Smallest intensity among the image pixels whose closed square contains each q-cell.

    This is the threshold at which the cell first appears in the sublevel
    complexes of ``img``.
    """
    v = img.values
    out = np.empty(c.n(q))
    for i, cell in enumerate(c.cells(q)):
        (x0, x1), (y0, y1) = cell
        xs = [x0] if x1 > x0 else [x0 - 1, x0]
        ys = [y0] if y1 > y0 else [y0 - 1, y0]
        vals = [int(v[y, x]) for y in ys for x in xs if 0 <= y < img.height and 0 <= x < img.width]
        out[i] = min(vals)
    return out


def cube_filtration(pair, q, order="lex", values=None, strict=False):
    """Order in which the q-cells of L \\ K are added, as indices into L's q-cells.

    ``order="lex"`` sorts by cell key; ``order="value"`` sorts by ``values``
    (one number per q-cell of L) and then by key.  With ``strict=True`` every
    face of an added cell must already lie in K; otherwise missing
    lower-dimensional faces enter together with the cell that needs them.
    """
    big = pair.big
    todo = pair.I_LK(q)
    if strict and q >= 1 and len(todo):
        b = abs(big.boundary_matrix(q)).tocsc()
        km = pair.mask(q - 1)
        for j in todo:
            rows = b.indices[b.indptr[j] : b.indptr[j + 1]]
            if not km[rows].all():
                raise FaceMissing(f"{q}-cell {big.cells(q)[j]} has a face outside K")
    cells = big.cells(q)
    keys = [big.canonical(cells[j]) for j in todo]
    if order == "lex":
        perm = sorted(range(len(todo)), key=lambda i: keys[i])
    elif order == "value":
        if values is None:
            raise ValueError("order='value' needs per-cell values")
        values = np.asarray(values)
        perm = sorted(range(len(todo)), key=lambda i: (values[todo[i]], keys[i]))
    else:
        raise ValueError(f"unknown order {order!r}")
    return [int(todo[i]) for i in perm]
