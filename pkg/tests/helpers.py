"""Random generators shared by the test modules."""
import itertools

import numpy as np

from nblap.catalog import mobius_pair
from nblap.complexes import ComplexPair, GrayImage, SimplicialComplex, cubical_from_image
from nblap.nbmatrix import build_csr

RP2 = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1), (1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3)]
TORUS = [t for i in range(7) for t in ((i, (i + 1) % 7, (i + 3) % 7), (i, (i + 2) % 7, (i + 3) % 7))]


def random_nb_matrix(rng, max_rows=64, max_cols=64):
    """Random non-branching matrix; mixes one- and two-nonzero rows and zero rows."""
    k = int(rng.integers(0, max_rows + 1))
    l = int(rng.integers(0, max_cols + 1))
    p_single = rng.choice([0.0, 0.05, 0.3])
    trip = []
    for r in range(k):
        u = rng.random()
        if l == 0 or u < 0.05:
            continue
        if l == 1 or u < 0.05 + p_single:
            trip.append((r, int(rng.integers(l)), int(rng.choice([-1, 1]))))
        else:
            a, b = rng.choice(l, size=2, replace=False)
            trip += [(r, int(a), int(rng.choice([-1, 1]))), (r, int(b), int(rng.choice([-1, 1])))]
    return build_csr(trip, shape=(k, l))


def _grid_triangles(rng, nx, ny):
    out = []
    for x in range(nx):
        for y in range(ny):
            a, b, c, d = (x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)
            v = lambda p: p[0] * (ny + 1) + p[1]
            if rng.random() < 0.5:
                out += [(v(a), v(b), v(c)), (v(a), v(c), v(d))]
            else:
                out += [(v(a), v(b), v(d)), (v(b), v(c), v(d))]
    return out


def _weights(rng, c, weighted):
    if not weighted:
        return None
    return [np.exp(rng.uniform(np.log(0.05), np.log(20.0), c.n(q))) for q in range(c.dim + 1)]


def _random_k(rng, big, q, keep):
    """K: all cells below q, a random subset of q-cells, and (q+1)-cells whose faces survived."""
    masks = [np.ones(big.n(p), bool) for p in range(min(q, big.dim + 1))]
    if q <= big.dim:
        masks.append(rng.random(big.n(q)) < keep)
    for p in range(q + 1, big.dim + 1):
        b = abs(big.boundary_matrix(p)).tocsc()
        ok = np.array([masks[p - 1][b.indices[b.indptr[j] : b.indptr[j + 1]]].all() for j in range(big.n(p))], bool)
        masks.append(ok & (rng.random(big.n(p)) < 0.5))
    return ComplexPair(big, masks)


def random_pair(rng, weighted=False, max_nk=60):
    """Random (pair, q) with L q-non-branching and at most ``max_nk`` q-cells in K."""
    while True:
        kind = rng.integers(7)
        q = 1
        if kind == 0:
            tris = _grid_triangles(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
            drop = rng.random(len(tris)) < 0.2
            tris = [t for t, d in zip(tris, drop) if not d] or tris[:1]
            big = SimplicialComplex.from_simplices(tris)
        elif kind == 1:
            big = SimplicialComplex.from_simplices(RP2)
        elif kind == 2:
            big = SimplicialComplex.from_simplices(TORUS)
        elif kind == 3:
            big = mobius_pair().big
        elif kind == 4:
            n = int(rng.integers(3, 12))
            big = SimplicialComplex.from_simplices([(i, (i + 1) % n) for i in range(n)])
            q = 0
        elif kind == 5:
            big = SimplicialComplex.from_simplices(list(itertools.combinations(range(5), 4)))
            q = 2
        else:
            h, w = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            img = GrayImage.from_array(rng.integers(0, 4, size=(h, w)))
            big = cubical_from_image(img, 3)
            if big.dim < 2:
                continue
        big = type(big)([big.cells(p) for p in range(big.dim + 1)], _weights(rng, big, weighted))
        pair = _random_k(rng, big, q, rng.choice([0.3, 0.6, 0.9]))
        if pair.n_K(q) <= max_nk:
            return pair, q
