"""One test per acceptance criterion; each records a PASS/FAIL verdict line."""
import time

import numpy as np
import scipy.sparse as sp

from conftest import VERDICTS
from helpers import random_nb_matrix, random_pair
from nblap.catalog import (
    grid_pair,
    mobius_pair,
    ngon_pair,
    simplex_pair,
    square_grid_pair,
    subdivided_triangle_pair,
    tiny_weight_pair,
    two_component_matrix,
)
from nblap.cli import run_bench
from nblap.kron import cheeger_bounds, dual_laplacian, to_hypergraph
from nblap.nbmatrix import ComponentKind, rank, weak_reduce
from nblap.oracles import dense_nullity, exact_rank
from nblap.persistence import FiltrationEngine, persistent_betti, up_bundle
from nblap.spectral import dense_eig_rank, factor_spectrum, laplacian_spectrum, numerical_rank

from test_nbmatrix import GOLDEN_R, GOLDEN_U7
from test_persistence import GRID_BLK, TRIANGLE_BLK


def verdict(n, ok, detail=""):
    VERDICTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_criterion_01_golden_reduction():
    m = two_component_matrix()
    red = weak_reduce(m)
    times = []
    for _ in range(50):
        t0 = time.perf_counter()
        weak_reduce(m)
        times.append(time.perf_counter() - t0)
    ev = (np.diag(red.E.astype(int)) @ red.V.toarray()).astype(int)
    comps = sorted(tuple(c.cols.tolist()) for c in red.partition.components)
    ok = (
        np.array_equal(red.R.to_dense(), GOLDEN_R)
        and np.array_equal(ev, GOLDEN_U7)
        and comps == [(0, 2, 4), (1, 3, 5, 6)]
        and all(c.kind is ComponentKind.REGULABLE for c in red.partition.components)
        and red.kernel_cols.tolist() == [4, 6]
        and min(times) < 1e-3
    )
    verdict(1, ok, f"min runtime {min(times) * 1e6:.0f} us")


def test_criterion_02_mobius_vanishing():
    b = up_bundle(mobius_pair(), 1, materialize_delta=True)
    ok = b.shape[1] == 0 and b.delta.shape == (5, 5) and not b.delta.any()
    verdict(2, ok, f"B_LK shape {b.shape}")


def test_criterion_03_kron_example():
    b = up_bundle(subdivided_triangle_pair(), 1)
    h = to_hypergraph(b)
    dual = dual_laplacian(h)
    evals = laplacian_spectrum(b).eigenvalues
    rep = cheeger_bounds(b)
    tol = 1e-10
    ok = (
        np.array_equal(b.B_LK.toarray(), TRIANGLE_BLK)
        and np.allclose(b.s, [2, 1], rtol=0, atol=tol)
        and np.allclose(dual, [[2, -1], [-2, 3]], rtol=0, atol=tol)
        and np.allclose(evals, [4, 1], rtol=0, atol=tol)
        and abs(rep.lower - 1) < tol
        and abs(rep.lambda_min - 1) < tol
        and abs(rep.upper - 2) < tol
    )
    verdict(3, ok, f"spectrum {evals.tolist()}, bounds {rep.lower} <= {rep.lambda_min} <= {rep.upper}")


def test_criterion_04_cubical_example():
    b = up_bundle(square_grid_pair(), 1)
    h = to_hypergraph(b)
    ok = np.array_equal(b.B_LK.toarray(), GRID_BLK) and b.s.tolist() == [2, 1, 1] and h.W1.tolist() == [0.5, 1, 1]
    verdict(4, ok, f"S {b.s.tolist()}, W1 {h.W1.tolist()}")


def test_criterion_05_dimension_cap():
    got = {}
    for q in (1, 2, 3):
        got[q] = laplacian_spectrum(up_bundle(simplex_pair(q + 1), q)).eigenvalues.min()
    ok = all(abs(got[q] - (q + 2)) <= 1e-10 for q in got)
    verdict(5, ok, "lambda_min " + ", ".join(f"q={q}: {v:.15g}" for q, v in got.items()))


def test_criterion_06_rank_oracle():
    rng = np.random.default_rng(2024)
    fails = 0
    for _ in range(1000):
        m = random_nb_matrix(rng, 64, 64)
        red = weak_reduce(m)
        r = exact_rank(m.to_dense())
        kb = red.kernel_basis()
        kernel_ok = not (m.to_scipy().astype(np.int64) @ kb).toarray().any() if kb.shape[1] else True
        if not (rank(m) == red.rank == r and red.nullity == m.n_cols - r and kernel_ok):
            fails += 1
    verdict(6, fails == 0, f"1000 matrices, {fails} failures")


def test_criterion_07_spectral_identity():
    rng = np.random.default_rng(77)
    worst, n, rank_bad = 0.0, 0, 0
    while n < 200:
        pair, q = random_pair(rng, weighted=True, max_nk=60)
        b = up_bundle(pair, q)
        res = laplacian_spectrum(b)
        if res.rank == 0:
            continue
        n += 1
        ev = np.sort(np.linalg.eigvalsh(b.symmetrized()))[::-1]
        rank_bad += int((ev > 1e-9 * ev[0]).sum()) != res.rank
        ref = ev[: res.rank]
        worst = max(worst, float(np.max(np.abs(res.eigenvalues - ref) / ref)))
    ok = worst <= 1e-8 and rank_bad == 0
    verdict(7, ok, f"{n} nonzero spectra, worst relative error {worst:.2e}, {rank_bad} rank mismatches")


def test_criterion_08_incremental_equals_batch():
    rng = np.random.default_rng(88)
    bad = 0
    for _ in range(50):
        pair, q = random_pair(rng, weighted=bool(rng.random() < 0.5))
        steps = pair.I_LK(q).copy()
        rng.shuffle(steps)
        steps = steps[:40].tolist()
        cur = pair
        for i, b in enumerate(FiltrationEngine(pair, q, steps).run()):
            if i:
                cur = cur.with_cells(q, [steps[i - 1]])
            bad += not b.same_as(up_bundle(cur, q))
    verdict(8, bad == 0, f"50 filtrations, {bad} mismatching steps")


def test_criterion_09_cheeger_sandwich():
    reports = [cheeger_bounds(up_bundle(ngon_pair(n), 1)) for n in range(4, 13)]
    rng = np.random.default_rng(99)
    grids = 0
    while grids < 30:
        rep = cheeger_bounds(up_bundle(grid_pair(int(rng.integers(2, 7)), rng, 0.4), 1))
        if rep.hypotheses_ok:
            reports.append(rep)
            grids += 1
    ok = all(r.hypotheses_ok and all(r.holds(1e-8).values()) for r in reports)
    verdict(9, ok, f"{len(reports)} instances (9 n-gons, {grids} grids)")


def test_criterion_10_tiny_weights():
    b = up_bundle(tiny_weight_pair(), 1)
    svd_rank = numerical_rank(b.M)
    dense_rank = dense_eig_rank(b.delta_dense(), np.finfo(float).eps)
    verdict(10, svd_rank == 2 and dense_rank <= 1, f"factor rank {svd_rank}, dense rank {dense_rank}")


def test_criterion_11_scaling():
    t0 = time.perf_counter()
    _, slopes = run_bench("star", ["weak_reduce", "gauss"], reps=5)
    total = time.perf_counter() - t0
    ok = slopes["weak_reduce"] <= 1.3 and slopes["gauss"] >= 1.8 and total < 60
    verdict(11, ok, f"slopes {slopes['weak_reduce']:.2f} / {slopes['gauss']:.2f}, {total:.1f} s")


def test_criterion_12_gkl_accuracy():
    rng = np.random.default_rng(1212)
    worst = 0.0
    for i in range(100):
        m, n = int(rng.integers(30, 501)), int(rng.integers(30, 101))
        a = sp.random(m, n, density=float(rng.uniform(0.01, 0.2)), random_state=rng, format="csr")
        a.data = rng.standard_normal(a.nnz)
        ref = np.linalg.svd(a.toarray(), compute_uv=False)[0]
        if ref == 0:
            continue
        got = factor_spectrum(a, k=30, seed=i).singular_values[0]
        worst = max(worst, abs(got - ref) / ref)
    verdict(12, worst <= 1e-6, f"worst relative error {worst:.2e}")


def test_criterion_13_persistent_betti():
    rng = np.random.default_rng(1313)
    bad = 0
    for i in range(100):
        pair, q = random_pair(rng, weighted=bool(i % 2), max_nk=40)
        bad += persistent_betti(pair, q) != dense_nullity(pair, q)
    verdict(13, bad == 0, f"100 pairs, {bad} mismatches")
