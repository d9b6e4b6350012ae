"""Hypergraph realization of the up persistent Laplacian and Cheeger-type bounds.

For an unweighted pair, Delta_up = B_LK S^{-1} B_LK^T is the Laplacian
W0 I W1 I^T of an oriented hypergraph whose vertices are the q-cells of K,
whose hyperedges are the columns of B_LK (the polyhedra P_j), and whose
hyperedge weights are 1 for zero columns of D and 1/s_j for components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NotHypergraph, WeightedL
from .nbmatrix import rank as nb_rank
from .spectral import laplacian_spectrum

__all__ = [
    "OrientedHypergraph",
    "to_hypergraph",
    "dual_laplacian",
    "PolyhedronStats",
    "polyhedron_stats",
    "CheegerReport",
    "cheeger_bounds",
    "write_hypergraph",
]


@dataclass(frozen=True, eq=False)
class OrientedHypergraph:
    incidence: sp.csc_matrix
    W0: np.ndarray
    W1: np.ndarray

    def __post_init__(self):
        inc = sp.csc_matrix(self.incidence)
        if inc.nnz and not np.isin(inc.data, (-1, 1)).all():
            raise ValueError("incidence entries must lie in {-1, 0, 1}")
        if not ((np.asarray(self.W0) > 0).all() and (np.asarray(self.W1) > 0).all()):
            raise ValueError("hypergraph weights must be positive")
        object.__setattr__(self, "incidence", inc)

    @property
    def n_vertices(self):
        return self.incidence.shape[0]

    @property
    def n_edges(self):
        return self.incidence.shape[1]

    def laplacian(self):
        """L0 = W0 I W1 I^T, dense."""
        inc = self.incidence.toarray().astype(float)
        return self.W0[:, None] * ((inc * self.W1[None, :]) @ inc.T)

    def edges(self):
        """(id, weight, input vertices, output vertices) per hyperedge."""
        inc = self.incidence
        for j in range(self.n_edges):
            rows = inc.indices[inc.indptr[j] : inc.indptr[j + 1]]
            vals = inc.data[inc.indptr[j] : inc.indptr[j + 1]]
            yield j, float(self.W1[j]), rows[vals > 0].tolist(), rows[vals < 0].tolist()


def _unit_incidence(bundle):
    d = bundle.B_LK.data
    return bool(np.isin(d[d != 0], (-1, 1)).all())


def to_hypergraph(bundle):
    if not bundle.unweighted:
        raise WeightedL("the hypergraph realization needs an unweighted complex")
    inc = bundle.B_LK
    if not _unit_incidence(bundle):
        # two cells of one polyhedron meet a q-cell of K with the same sign,
        # which needs a non-orientable L
        raise NotHypergraph("B_LK has entries outside {-1, 0, 1}")
    w1 = np.where(bundle.from_component, 1.0 / bundle.s, 1.0)
    return OrientedHypergraph(inc, np.ones(inc.shape[0]), w1)


def dual_laplacian(h):
    """W1 I^T W0 I, the Laplacian of the dual hypergraph."""
    inc = h.incidence.toarray().astype(float)
    return h.W1[:, None] * ((inc.T * h.W0[None, :]) @ inc)


@dataclass(frozen=True, eq=False)
class PolyhedronStats:
    volume: np.ndarray
    area: np.ndarray
    shared: np.ndarray
    interior_area: np.ndarray


def polyhedron_stats(bundle):
    """Volume, area, pairwise shared area and interior area of every polyhedron."""
    b = bundle.B_LK
    volume = np.array([len(s) for s in bundle.sources], dtype=np.int64)
    area = np.diff(b.indptr).astype(np.int64)
    shared = np.abs((b.T @ b).toarray()).astype(np.int64)
    np.fill_diagonal(shared, 0)
    interior = area - shared.sum(axis=1)
    return PolyhedronStats(volume, area, shared, interior)


@dataclass(frozen=True)
class CheegerReport:
    lower: float | None
    upper: float | None
    lambda_min: float | None
    full_column_rank: bool
    nonzero: bool
    dimension_cap: float
    q: int
    kind: str
    unit_incidence: bool = True

    @property
    def hypotheses_ok(self):
        return self.full_column_rank and self.nonzero and self.unit_incidence

    def holds(self, slack=1e-8):
        """Which of the claimed inequalities hold for this instance."""
        out = {}
        if self.lambda_min is None:
            return out
        out["lower"] = self.lower <= self.lambda_min + slack
        if self.hypotheses_ok:
            out["upper"] = self.lambda_min <= self.upper + slack
            out["dimension_cap"] = self.lambda_min <= self.dimension_cap + slack
        return out

    def as_dict(self):
        d = {
            "q": self.q,
            "kind": self.kind,
            "lower": self.lower,
            "upper": self.upper,
            "lambda_min": self.lambda_min,
            "full_column_rank": self.full_column_rank,
            "nonzero": self.nonzero,
            "unit_incidence": self.unit_incidence,
            "hypotheses_ok": self.hypotheses_ok,
            "dimension_cap": self.dimension_cap,
        }
        d["holds"] = self.holds()
        return d


def cheeger_bounds(bundle, stats=None, seed=0):
    """lower = min A^/V, upper = min A/V and lambda_min, with hypothesis flags.

    The upper bound and the dimension cap are only claimed when B_{q+1}^L
    has full column rank (decided exactly), B_LK is nonzero and its entries
    lie in {-1, 0, 1}; the flags say whether that is the case.
    """
    if not bundle.unweighted:
        raise WeightedL("Cheeger bounds are stated for unweighted complexes")
    if stats is None:
        stats = polyhedron_stats(bundle)
    q = bundle.q
    full = bundle.B_L is not None and nb_rank(bundle.B_L) == bundle.B_L.n_cols
    nonzero = bundle.B_LK.nnz > 0
    unit = _unit_incidence(bundle)
    cap = float(q + 2) if bundle.kind == "simplicial" else float(2 * (q + 1))
    if not nonzero:
        return CheegerReport(None, None, None, full, False, cap, q, bundle.kind, unit)
    lower = float(np.min(stats.interior_area / stats.volume))
    upper = float(np.min(stats.area / stats.volume))
    ritz = laplacian_spectrum(bundle, k=1, which="bottom", seed=seed)
    lam = float(ritz.eigenvalues[-1]) if len(ritz) else None
    return CheegerReport(lower, upper, lam, full, nonzero, cap, q, bundle.kind, unit)


def write_hypergraph(h, path, labels=None):
    """Text export: ``hypergraph v1`` header, vertex list, one line per hyperedge."""
    labels = labels if labels is not None else list(range(h.n_vertices))
    lines = [f"hypergraph v1 {h.n_vertices} {h.n_edges}"]
    lines += [f"vertex {i} {labels[i]} w={h.W0[i]!r}" for i in range(h.n_vertices)]
    for j, w, vin, vout in h.edges():
        lines.append(
            f"edge {j} w={w!r} in={','.join(map(str, vin))} out={','.join(map(str, vout))}"
        )
    text = "\n".join(lines) + "\n"
    if path is None:
        return text
    with open(path, "w") as f:
        f.write(text)
    return text
