import numpy as np
import pytest

from helpers import RP2, random_pair
from nblap.catalog import grid_pair, ngon_pair, simplex_pair, square_grid_pair, subdivided_triangle_pair, tiny_weight_pair
from nblap.complexes import ComplexPair, SimplicialComplex
from nblap.errors import NotHypergraph, WeightedL
from nblap.kron import (
    OrientedHypergraph,
    cheeger_bounds,
    dual_laplacian,
    polyhedron_stats,
    to_hypergraph,
    write_hypergraph,
)
from nblap.persistence import up_bundle
from nblap.spectral import dense_oracle_eig


def test_triangle_hypergraph_realizes_laplacian():
    b = up_bundle(subdivided_triangle_pair(), 1)
    h = to_hypergraph(b)
    assert h.W1.tolist() == [0.5, 1.0]
    assert (h.W0 == 1).all()
    assert np.array_equal(h.laplacian(), b.delta_dense())


def test_dual_laplacian_example():
    h = to_hypergraph(up_bundle(subdivided_triangle_pair(), 1))
    d = dual_laplacian(h)
    assert np.allclose(d, [[2, -1], [-2, 3]], rtol=0, atol=1e-12)
    assert np.allclose(dense_oracle_eig(d), [4, 1], atol=1e-12)


def test_square_grid_hyperedge_weights():
    h = to_hypergraph(up_bundle(square_grid_pair(), 1))
    assert h.W1.tolist() == [0.5, 1.0, 1.0]


def test_polyhedron_stats_triangle():
    st = polyhedron_stats(up_bundle(subdivided_triangle_pair(), 1))
    assert st.volume.tolist() == [2, 1]
    assert st.area.tolist() == [4, 3]
    assert st.shared.tolist() == [[0, 2], [2, 0]]
    assert st.interior_area.tolist() == [2, 1]


def test_cheeger_triangle():
    rep = cheeger_bounds(up_bundle(subdivided_triangle_pair(), 1))
    assert rep.hypotheses_ok
    assert abs(rep.lower - 1) < 1e-12 and abs(rep.upper - 2) < 1e-12
    assert abs(rep.lambda_min - 1) < 1e-10
    assert all(rep.holds().values())


def test_cheeger_square_grid():
    rep = cheeger_bounds(up_bundle(square_grid_pair(), 1))
    assert rep.lower <= rep.lambda_min + 1e-8 <= rep.upper + 2e-8
    assert rep.dimension_cap == 4.0


@pytest.mark.parametrize("q", [1, 2, 3])
def test_simplex_hits_dimension_cap(q):
    rep = cheeger_bounds(up_bundle(simplex_pair(q + 1), q))
    assert abs(rep.lambda_min - (q + 2)) < 1e-10
    assert rep.dimension_cap == q + 2


@pytest.mark.parametrize("n", range(4, 13))
def test_ngon_sandwich(n):
    rep = cheeger_bounds(up_bundle(ngon_pair(n), 1))
    assert rep.hypotheses_ok
    assert all(rep.holds(1e-8).values())


def test_random_grids_sandwich():
    rng = np.random.default_rng(6)
    checked = 0
    for _ in range(30):
        b = up_bundle(grid_pair(int(rng.integers(2, 6)), rng, 0.4), 1)
        rep = cheeger_bounds(b)
        if rep.hypotheses_ok:
            checked += 1
            assert all(rep.holds(1e-8).values())
    assert checked >= 10


def test_kron_identity_random_unweighted():
    rng = np.random.default_rng(12)
    done = 0
    for _ in range(60):
        pair, q = random_pair(rng, weighted=False)
        b = up_bundle(pair, q)
        try:
            h = to_hypergraph(b)
        except NotHypergraph:
            continue
        done += 1
        assert np.allclose(h.laplacian(), b.delta_dense(), rtol=0, atol=1e-12)
        d = np.sort(dense_oracle_eig(dual_laplacian(h)))[::-1] if h.n_edges else np.zeros(0)
        lap = dense_oracle_eig(h.laplacian()) if h.n_vertices else np.zeros(0)
        d, lap = d[d > 1e-9], lap[lap > 1e-9]
        assert np.allclose(d, lap, rtol=1e-8)
    assert done >= 40


def _rp2_twisted_pair():
    big = SimplicialComplex.from_simplices(RP2)
    drop = {(0, 1), (0, 2), (1, 5), (2, 3)}
    edges = np.array([e not in drop for e in big.cells(1)])
    return ComplexPair(big, [np.ones(6, bool), edges, np.zeros(10, bool)])


def test_twisted_polyhedron_is_not_a_hypergraph():
    b = up_bundle(_rp2_twisted_pair(), 1)
    assert np.abs(b.B_LK.data).max() == 2
    with pytest.raises(NotHypergraph):
        to_hypergraph(b)
    rep = cheeger_bounds(b)
    assert not rep.unit_incidence and not rep.hypotheses_ok
    assert rep.holds()["lower"]


def test_single_hyperedge_dual():
    h = OrientedHypergraph(np.array([[1]]), np.ones(1), np.ones(1))
    assert dual_laplacian(h).tolist() == [[1.0]]


def test_empty_hypergraph():
    h = to_hypergraph(up_bundle(simplex_pair(2), 2))
    assert h.n_edges == 0 and not h.laplacian().any()


def test_weighted_pair_is_rejected():
    b = up_bundle(tiny_weight_pair(), 1)
    with pytest.raises(WeightedL):
        to_hypergraph(b)
    with pytest.raises(WeightedL):
        cheeger_bounds(b)


def test_hypergraph_validation():
    with pytest.raises(ValueError):
        OrientedHypergraph(np.array([[2]]), np.ones(1), np.ones(1))
    with pytest.raises(ValueError):
        OrientedHypergraph(np.array([[1]]), np.ones(1), np.zeros(1))


def test_hypergraph_export(tmp_path):
    h = to_hypergraph(up_bundle(subdivided_triangle_pair(), 1))
    text = write_hypergraph(h, tmp_path / "h.txt")
    lines = text.splitlines()
    assert lines[0] == "hypergraph v1 5 2"
    assert lines[6] == "edge 0 w=0.5 in=0,1 out=2,3"
    assert lines[7] == "edge 1 w=1.0 in=3,4 out=1"
    assert (tmp_path / "h.txt").read_text() == text


def test_report_without_polyhedra():
    rep = cheeger_bounds(up_bundle(simplex_pair(2), 2))
    assert rep.lambda_min is None and not rep.nonzero and rep.holds() == {}
