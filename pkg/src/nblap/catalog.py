"""Small named complexes and matrices, plus the synthetic families used in benchmarks.

Cell orders here are chosen explicitly (not lexicographically) wherever a
fixed row/column layout is needed to compare against hand-written matrices.
"""
from __future__ import annotations

import numpy as np

from .complexes import ComplexPair, CubicalComplex, SimplicialComplex
from .nbmatrix import NonBranchingMatrix, build_csr

__all__ = [
    "two_component_matrix",
    "mobius_pair",
    "subdivided_triangle_pair",
    "square_grid_pair",
    "tiny_weight_pair",
    "star_matrix",
    "ngon_pair",
    "grid_pair",
    "simplex_pair",
]


def two_component_matrix():
    """6x7 matrix whose rows are the edges 13, 35, 42, 51, 46, 47 (1-based columns)."""
    rows = [(1, 3), (3, 5), (4, 2), (5, 1), (4, 6), (4, 7)]
    t = []
    for r, (a, b) in enumerate(rows):
        t += [(r, a - 1, 1), (r, b - 1, -1)]
    return build_csr(t, shape=(6, 7))


def _pair(big, k_cells):
    """Pair whose K is the listed cells of ``big`` (all dimensions)."""
    masks = [np.zeros(big.n(q), dtype=bool) for q in range(big.dim + 1)]
    for c in k_cells:
        i = big.index_of(c)
        masks[big.cell_dim(big._normalize(c))][i] = True
    return ComplexPair(big, masks)


def mobius_pair():
    """Five-triangle Moebius strip L with K its boundary circle (plus vertices)."""
    verts = [(v,) for v in range(1, 6)]
    edges = [(3, 4), (1, 4), (1, 3), (2, 4), (1, 2), (4, 5), (2, 5), (3, 5), (2, 3), (1, 5)]
    tris = [(1, 3, 4), (1, 2, 4), (2, 4, 5), (2, 3, 5), (1, 3, 5)]
    big = SimplicialComplex([verts, edges, tris])
    boundary = [(3, 4), (1, 2), (4, 5), (2, 3), (1, 5)]
    return _pair(big, verts + boundary)


def _subdivided_triangle(w_edges=None, w_tris=None):
    verts = [(v,) for v in range(1, 5)]
    edges = [(1, 2), (2, 4), (1, 4), (1, 3), (3, 4), (2, 3)]
    tris = [(1, 2, 4), (1, 4, 3), (2, 3, 4)]
    return SimplicialComplex([verts, edges, tris], [None, w_edges, w_tris])


def subdivided_triangle_pair():
    """Triangle 123 split at an inner vertex 4; K lacks the edge 14."""
    big = _subdivided_triangle()
    return _pair(big, [(v,) for v in range(1, 5)] + [e for e in big.cells(1) if e != (1, 4)])


def tiny_weight_pair(eps=np.finfo(float).eps):
    """The subdivided triangle with triangle weights (3e, 3e, e) and edge weights (2, 1, 2, 1, 2) on K."""
    big = _subdivided_triangle(
        w_edges=[2.0, 1.0, 1.0, 2.0, 1.0, 2.0], w_tris=[3 * eps, 3 * eps, eps]
    )
    return _pair(big, [(v,) for v in range(1, 5)] + [e for e in big.cells(1) if e != (1, 4)])


_GRID = {1: (0, 2), 2: (1, 2), 3: (2, 2), 4: (0, 1), 5: (1, 1), 6: (2, 1), 7: (0, 0), 8: (1, 0), 9: (2, 0)}


def _edge(a, b):
    (x0, y0), (x1, y1) = sorted([_GRID[a], _GRID[b]])
    return ((x0, x1), (y0, y1))


def square_grid_pair():
    """2x2 block of unit squares (vertices 1-9 row by row from the top); K lacks edge 52."""
    verts = [((x, x), (y, y)) for x, y in (_GRID[v] for v in range(1, 10))]
    names = [(1, 2), (2, 3), (4, 1), (5, 2), (6, 3), (4, 5), (5, 6), (7, 4), (8, 5), (9, 6), (7, 8), (8, 9)]
    edges = [_edge(a, b) for a, b in names]
    squares = [((0, 1), (1, 2)), ((1, 2), (1, 2)), ((0, 1), (0, 1)), ((1, 2), (0, 1))]
    big = CubicalComplex([verts, edges, squares])
    return _pair(big, verts + [e for e in edges if e != _edge(5, 2)])


def star_matrix(k):
    """k x (k+1) matrix with row i = e_0 - e_{i+1}: one regulable component."""
    ptr = np.arange(0, 2 * k + 1, 2)
    cols = np.empty(2 * k, dtype=np.int64)
    cols[0::2] = 0
    cols[1::2] = np.arange(1, k + 1)
    vals = np.tile(np.array([1, -1], dtype=np.int8), k)
    return NonBranchingMatrix(k, k + 1, ptr, cols, vals)


def ngon_pair(n):
    """Fan triangulation of an n-gon from vertex 0; K is the outer cycle."""
    tris = [(0, i, i + 1) for i in range(1, n - 1)]
    big = SimplicialComplex.from_simplices(tris)
    ring = [tuple(sorted((i, (i + 1) % n))) for i in range(n)]
    return _pair(big, [(v,) for v in range(n)] + ring)


def grid_pair(n, rng=None, keep=None):
    """n x n block of unit squares; K is L's 1-skeleton minus interior edges.

    With ``rng`` given, each interior edge is instead kept in K with
    probability ``keep``.
    """
    cubes = [((x, x + 1), (y, y + 1)) for x in range(n) for y in range(n)]
    big = CubicalComplex.from_cubes(cubes)
    masks = [np.ones(big.n(0), bool), np.zeros(big.n(1), bool), np.zeros(big.n(2), bool)]
    b = abs(big.boundary_matrix(2))
    cofaces = np.asarray(b.sum(axis=1)).ravel()
    for i in range(big.n(1)):
        if cofaces[i] < 2:
            masks[1][i] = True
        elif rng is not None:
            masks[1][i] = rng.random() < keep
    return ComplexPair(big, masks)


def simplex_pair(d):
    """Standard d-simplex with K = L."""
    return ComplexPair.full(SimplicialComplex.standard_simplex(d))
