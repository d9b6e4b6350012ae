"""Spectra of persistent Laplacians through singular values of sparse factors.

The symmetrized up Laplacian is M M^T, so its nonzero eigenvalues are the
squared nonzero singular values of M.  Those come from Golub-Kahan-Lanczos
bidiagonalization of M followed by implicit-shift QR sweeps on the small
bidiagonal matrix; neither step ever forms M M^T or B^T B, which is what
keeps tiny singular values resolvable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NotSimilarizable, NumericalError

__all__ = [
    "Bidiagonal",
    "GKLResult",
    "gkl_bidiagonalize",
    "bidiagonal_singular_values",
    "SpectrumResult",
    "factor_spectrum",
    "laplacian_spectrum",
    "numerical_rank",
    "rank_cutoff",
    "dense_oracle_eig",
    "dense_eig_rank",
]

EPS = np.finfo(np.float64).eps
FULL_SPECTRUM_CUTOFF = 4096


@dataclass(frozen=True)
class Bidiagonal:
    """Upper bidiagonal matrix with diagonal alpha and superdiagonal beta."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64).reshape(-1)
        b = np.asarray(self.beta, dtype=np.float64).reshape(-1)
        if len(b) != max(len(a) - 1, 0):
            raise ValueError("beta must have one entry fewer than alpha")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def __len__(self):
        return len(self.alpha)

    def to_dense(self):
        return np.diag(self.alpha) + np.diag(self.beta, 1)


@dataclass(frozen=True, eq=False)
class GKLResult:
    bidiagonal: Bidiagonal
    U: np.ndarray
    V: np.ndarray
    beta_last: float
    breakdown: bool
    restarts: int = 0


def _orth(w, q):
    """Classical Gram-Schmidt against the columns of q, applied twice."""
    if q.shape[1]:
        w = w - q @ (q.T @ w)
        w = w - q @ (q.T @ w)
    return w


def _lanczos(matvec, rmatvec, m, n, k, rng, reorth, restart):
    """Bidiagonalization with optional continuation after breakdowns.

    With ``restart`` a vanishing alpha_j keeps alpha_j = 0 and continues from
    a fresh u_j orthogonal to the earlier u's, and a vanishing beta_j splits
    the bidiagonal and continues from a fresh v_{j+1}.  Both keep
    U^T M V = B exactly, so k = min(m, n) steps (m >= n) give every
    singular value, repeated ones included.
    """
    U = np.zeros((m, k))
    V = np.zeros((n, k + 1))
    alpha = np.zeros(k)
    beta = np.zeros(k)
    dim = max(m, n)
    anorm = 0.0
    restarts = 0
    breakdown = False

    def fresh(basis, size):
        # random unit vector orthogonal to the given columns
        v = rng.standard_normal(size)
        v0 = np.linalg.norm(v)
        v = _orth(v, basis)
        nv = np.linalg.norm(v)
        return None if nv <= 1e-8 * v0 else v / nv

    V[:, 0] = fresh(V[:, :0], n)
    carry = 0.0
    j = 0
    while j < k:
        w = matvec(V[:, j])
        if j > 0 and carry:
            w = w - carry * U[:, j - 1]
        if reorth:
            w = _orth(w, U[:, :j])
        a = float(np.linalg.norm(w))
        anorm = max(anorm, a)
        if a <= dim * EPS * anorm:
            breakdown = True
            u = fresh(U[:, :j], m) if restart else None
            if u is None:
                break
            a = 0.0
            U[:, j] = u
            restarts += 1
        else:
            U[:, j] = w / a
        alpha[j] = a
        z = rmatvec(U[:, j]) - a * V[:, j]
        if reorth:
            z = _orth(z, V[:, : j + 1])
        b = float(np.linalg.norm(z))
        anorm = max(anorm, b)
        j += 1
        if b <= dim * EPS * anorm:
            beta[j - 1] = 0.0
            if j == k:
                break
            breakdown = True
            v = fresh(V[:, :j], n) if restart else None
            if v is None:
                break
            V[:, j] = v
            carry = 0.0
            restarts += 1
        else:
            beta[j - 1] = b
            V[:, j] = z / b
            carry = b
    steps = j
    bd = Bidiagonal(alpha[:steps], beta[: max(steps - 1, 0)])
    last = float(beta[steps - 1]) if steps else 0.0
    return GKLResult(bd, U[:, :steps], V[:, : steps + 1], last, breakdown, restarts)


def gkl_bidiagonalize(apply_M, apply_Mt, dims, k, seed, reorth=True):
    """k steps of Golub-Kahan-Lanczos bidiagonalization from a seeded start vector.

    Runs the recurrences alpha_j u_j = M v_j - beta_{j-1} u_{j-1} and
    beta_j v_{j+1} = M^T u_j - alpha_j v_j.  If alpha_j or beta_j falls
    below max(m, n) * eps * ||M||_est the iteration stops early and the steps
    completed so far are returned with ``breakdown=True``.
    """
    m, n = dims
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k must lie in [1, {min(m, n)}], got {k}")
    rng = np.random.default_rng(seed)
    return _lanczos(apply_M, apply_Mt, m, n, k, rng, reorth, restart=False)


def _givens(y, z):
    r = math.hypot(y, z)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return y / r, z / r, r


def _gk_sweep(d, e, lo, hi):
    """One implicit Wilkinson-shifted QR sweep on the unreduced block lo..hi."""
    dm, dn, em = d[hi - 1], d[hi], e[hi - 1]
    el = e[hi - 2] if hi - 1 > lo else 0.0
    t11 = dm * dm + el * el
    t12 = dm * em
    t22 = dn * dn + em * em
    delta = (t11 - t22) / 2
    denom = delta + math.copysign(math.hypot(delta, t12), delta)
    mu = t22 - t12 * t12 / denom if denom != 0.0 else t22
    y = d[lo] * d[lo] - mu
    z = d[lo] * e[lo]
    for k in range(lo, hi):
        c, s, r = _givens(y, z)
        if k > lo:
            e[k - 1] = r
        dk = c * d[k] + s * e[k]
        ek = -s * d[k] + c * e[k]
        bulge = s * d[k + 1]
        dk1 = c * d[k + 1]
        c, s, r = _givens(dk, bulge)
        d[k] = r
        e[k] = c * ek + s * dk1
        d[k + 1] = -s * ek + c * dk1
        if k + 1 < hi:
            y = e[k]
            z = s * e[k + 1]
            e[k + 1] = c * e[k + 1]


def _chase_row(d, e, i, hi):
    """d[i] == 0: rotate e[i] out along row i."""
    x = e[i]
    e[i] = 0.0
    for j in range(i + 1, hi + 1):
        c, s, r = _givens(d[j], x)
        d[j] = r
        if j < hi:
            x = -s * e[j]
            e[j] = c * e[j]


def _chase_col(d, e, lo, hi):
    """d[hi] == 0: rotate e[hi-1] out along column hi."""
    x = e[hi - 1]
    e[hi - 1] = 0.0
    for j in range(hi - 1, lo - 1, -1):
        c, s, r = _givens(d[j], x)
        d[j] = r
        if j > lo:
            x = -s * e[j - 1]
            e[j - 1] = c * e[j - 1]


def bidiagonal_singular_values(b):
    """All singular values of an upper bidiagonal matrix, descending.

    Golub-Kahan implicit-shift QR: zero superdiagonal entries split the
    matrix, zero diagonal entries are chased out with Givens rotations, and
    each sweep works on the bottom unreduced block.
    """
    d = np.array(b.alpha, dtype=np.float64).tolist()
    e = np.array(b.beta, dtype=np.float64).tolist()
    n = len(d)
    if n == 0:
        return np.zeros(0)
    bnorm = max(max(abs(x) for x in d), max((abs(x) for x in e), default=0.0))
    if bnorm == 0.0:
        return np.zeros(n)
    tiny = EPS * bnorm
    hi = n - 1
    sweeps = 0
    max_sweeps = 50 * n * max(n, 10)
    while hi > 0:
        if abs(e[hi - 1]) <= EPS * (abs(d[hi - 1]) + abs(d[hi])):
            e[hi - 1] = 0.0
            hi -= 1
            continue
        lo = hi - 1
        while lo > 0 and abs(e[lo - 1]) > EPS * (abs(d[lo - 1]) + abs(d[lo])):
            lo -= 1
        if lo > 0:
            e[lo - 1] = 0.0
        zero = next((i for i in range(lo, hi + 1) if abs(d[i]) <= tiny), None)
        if zero is not None:
            d[zero] = 0.0
            if zero < hi:
                _chase_row(d, e, zero, hi)
            else:
                _chase_col(d, e, lo, hi)
            continue
        _gk_sweep(d, e, lo, hi)
        sweeps += 1
        if sweeps > max_sweeps:
            raise NumericalError("bidiagonal QR did not converge")
    return np.sort(np.abs(np.array(d)))[::-1]


@dataclass(frozen=True)
class SpectrumResult:
    """Singular values of a factor and the eigenvalues (their squares), descending."""

    singular_values: np.ndarray
    eigenvalues: np.ndarray
    k: int | None
    iterations: int
    converged: np.ndarray
    residual_estimates: np.ndarray
    cutoff: float
    which: str = "top"
    seed: int = 0
    rank: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.singular_values)


def rank_cutoff(sigma_max, shape):
    """sigma counts as nonzero iff sigma > sigma_max * max(m, n) * 2**-52."""
    return float(sigma_max) * max(shape) * 2.0**-52


def _operators(a):
    if sp.issparse(a):
        a = sp.csr_matrix(a, dtype=np.float64)
        at = sp.csr_matrix(a.T)
        return (lambda x: a @ x), (lambda y: at @ y)
    a = np.asarray(a, dtype=np.float64)
    return (lambda x: a @ x), (lambda y: a.T @ y)


def _residuals(res):
    """Residual norms beta_k |p_i[-1]| of the Ritz triplets, aligned with descending sigma."""
    bd = res.bidiagonal
    if len(bd) == 0:
        return np.zeros(0)
    p, _, _ = np.linalg.svd(bd.to_dense())
    return np.abs(res.beta_last * p[-1, :])


def factor_spectrum(a, k=None, which="top", seed=0, reorth=True, full_cutoff=FULL_SPECTRUM_CUTOFF):
    """Nonzero singular values of a (sparse or dense) factor and their squares.

    ``which="top"`` returns the k largest; ``which="bottom"`` the k smallest
    nonzero ones; ``k=None`` returns all nonzero values.  Bottom and
    exhaustive requests run the bidiagonalization to completion (with
    restarts after invariant subspaces) when the smaller side is at most
    ``full_cutoff``; beyond that the smaller Gram matrix is diagonalized.
    """
    if which not in ("top", "bottom"):
        raise ValueError(f"which must be 'top' or 'bottom', got {which!r}")
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    m, n = a.shape
    meta = {"shape": [int(m), int(n)], "method": "gkl"}
    empty = np.zeros(0)
    if min(m, n) == 0 or (sp.issparse(a) and a.nnz == 0) or not np.any(a.data if sp.issparse(a) else a):
        return SpectrumResult(empty, empty, k, 0, np.zeros(0, bool), empty, 0.0, which, seed, 0, meta)
    if m < n:
        a = a.T
        m, n = n, m
    small = n
    exhaustive = k is None or which == "bottom"
    if exhaustive and small > full_cutoff:
        g = a.T @ a
        g = g.toarray() if sp.issparse(g) else np.asarray(g)
        ev = np.clip(np.linalg.eigvalsh(g), 0.0, None)[::-1]
        sig = np.sqrt(ev)
        resid = np.zeros(len(sig))
        iterations = 0
        meta["method"] = "gram"
    else:
        steps = small if exhaustive else min(small, max(2 * k, k + 20))
        mv, rmv = _operators(a)
        rng = np.random.default_rng(seed)
        res = _lanczos(mv, rmv, m, n, steps, rng, reorth, restart=True)
        sig = bidiagonal_singular_values(res.bidiagonal)
        resid = _residuals(res)
        iterations = len(res.bidiagonal)
        meta["restarts"] = res.restarts
    smax = float(sig[0]) if len(sig) else 0.0
    cutoff = rank_cutoff(smax, (m, n))
    keep = sig > cutoff
    sig, resid = sig[keep], resid[keep]
    rank = len(sig)
    if k is not None:
        sel = slice(0, k) if which == "top" else slice(max(len(sig) - k, 0), len(sig))
        sig, resid = sig[sel], resid[sel]
    conv = resid <= math.sqrt(EPS) * max(smax, np.finfo(float).tiny)
    return SpectrumResult(sig, sig * sig, k, iterations, conv, resid, cutoff, which, seed, rank, meta)


def laplacian_spectrum(bundle, k=None, which="top", seed=0, reorth=True, full_cutoff=FULL_SPECTRUM_CUTOFF):
    """Eigenvalues of the up persistent Laplacian as squared singular values of M."""
    if which == "bottom-nonzero":
        which = "bottom"
    return factor_spectrum(bundle.M, k, which, seed, reorth, full_cutoff)


def numerical_rank(a, seed=0):
    """Number of singular values above the standard cutoff (GKL route)."""
    return factor_spectrum(a, None, "top", seed).rank


def _similarity_scaling(a):
    """Positive d with diag(d)^{-1/2} a diag(d)^{1/2} symmetric, if it exists."""
    n = a.shape[0]
    d = np.full(n, np.nan)
    tol = 1e-12 * max(1.0, float(np.abs(a).max()))
    for s in range(n):
        if not np.isnan(d[s]):
            continue
        d[s] = 1.0
        stack = [s]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero((np.abs(a[i]) > tol) | (np.abs(a[:, i]) > tol)):
                if j == i:
                    continue
                aij, aji = a[i, j], a[j, i]
                if abs(aij) <= tol or abs(aji) <= tol or aij * aji < 0:
                    raise NotSimilarizable("matrix is not a positive diagonal scaling of a symmetric one")
                # a = diag(d) S  =>  a_ji / a_ij = d_j / d_i
                dj = d[i] * aji / aij
                if np.isnan(d[j]):
                    d[j] = dj
                    stack.append(j)
                elif abs(d[j] - dj) > 1e-9 * max(abs(d[j]), abs(dj)):
                    raise NotSimilarizable("inconsistent diagonal scaling")
    return d


def dense_oracle_eig(a, weights=None):
    """Full spectrum (descending) of a matrix similar to a symmetric one.

    With ``weights`` w, ``a`` is taken as diag(w) S with S symmetric (or the
    caller's up-Laplacian form S diag(w)^{-1}, which has the same
    symmetrization).  Without weights, a positive diagonal scaling is
    inferred from the off-diagonal pattern.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if a.shape[0] == 0:
        return np.zeros(0)
    if weights is None:
        d = np.ones(a.shape[0]) if np.allclose(a, a.T, rtol=1e-12, atol=0) else _similarity_scaling(a)
    else:
        d = np.asarray(weights, dtype=np.float64)
        if not (d > 0).all():
            raise NotSimilarizable("weights must be strictly positive")
    r = np.sqrt(d)
    sym = a / r[:, None] * r[None, :]
    sym = (sym + sym.T) / 2
    return np.linalg.eigvalsh(sym)[::-1]


def dense_eig_rank(a, atol):
    """Count eigenvalues of a dense matrix with modulus above an absolute threshold."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return 0
    return int((np.abs(np.linalg.eigvals(a)) > atol).sum())
