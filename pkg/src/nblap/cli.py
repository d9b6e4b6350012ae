"""``nblap`` command line: reduce, laplacian, spectrum, filtration, image, cheeger, bench.

Results go to ``--out`` (or standard output); diagnostics go to standard
error and are controlled by NBLAP_LOG=off|info|debug.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import io as nio
from .catalog import grid_pair, ngon_pair, star_matrix
from .complexes import (
    ComplexPair,
    CubicalComplex,
    cube_filtration,
    cubical_from_image,
    extract_D,
    max_pool,
    pixel_cell_values,
)
from .errors import InputError, NblapError
from .kron import cheeger_bounds, to_hypergraph, write_hypergraph
from .nbmatrix import weak_reduce
from .oracles import exact_rank
from .persistence import FiltrationEngine, up_bundle
from .spectral import SpectrumResult, dense_oracle_eig, laplacian_spectrum, rank_cutoff

log = logging.getLogger("nblap")

__all__ = ["RunConfig", "main", "build_parser"]


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    q: int = 1
    tk: int | None = None
    tl: int | None = None
    order: str = "lex"
    k: int = 10
    which: str = "top"
    seed: int = 0
    materialize_delta: bool = False
    out: str | None = None
    format: str = "csv"
    oracle: bool = False
    jobs: int = 1
    reorth: bool = True
    strict_faces: bool = False
    pool: int = 0
    emit: str = "spectra"
    sub: str | None = None
    family: str = "star"
    sizes: list | None = None
    methods: list | None = None
    reps: int = 3

    def validate(self):
        if self.q < 0:
            raise InputError(f"--q must be >= 0, got {self.q}")
        if self.k < 1:
            raise InputError(f"--k must be >= 1, got {self.k}")
        if self.tk is not None and self.tl is not None and self.tk > self.tl:
            raise InputError(f"thresholds need tk <= tl, got tk={self.tk} tl={self.tl}")
        if self.jobs < 1:
            raise InputError("--jobs must be >= 1")
        if self.reps < 1:
            raise InputError("--reps must be >= 1")
        return self


def _setup_logging():
    level = os.environ.get("NBLAP_LOG", "off").lower()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("nblap: %(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel({"debug": logging.DEBUG, "info": logging.INFO}.get(level, logging.CRITICAL + 1))


def _open_out(cfg):
    return open(cfg.out, "w", newline="") if cfg.out else contextlib.nullcontext(sys.stdout)


def _load_pair(cfg):
    big = nio.read_complex(cfg.inputs[0])
    if cfg.sub is None:
        return ComplexPair.full(big)
    return ComplexPair.from_complexes(big, nio.read_complex(cfg.sub))


def _spectrum(bundle, cfg):
    if cfg.oracle:
        return _oracle_spectrum(bundle, cfg)
    return laplacian_spectrum(bundle, k=cfg.k, which=cfg.which, seed=cfg.seed, reorth=cfg.reorth)


def _oracle_spectrum(bundle, cfg):
    ev = dense_oracle_eig(bundle.delta_dense(), weights=bundle.w_K) if bundle.shape[0] else np.zeros(0)
    # eigenvalues carry absolute error ~ lambda_max * eps, so the cutoff is
    # applied on the eigenvalue scale before taking square roots
    ecut = rank_cutoff(ev[0], bundle.M.shape) if len(ev) else 0.0
    sig = np.sqrt(ev[ev > ecut])
    cut = float(np.sqrt(ecut))
    rank = len(sig)
    sig = sig[: cfg.k] if cfg.which == "top" else sig[max(len(sig) - cfg.k, 0) :]
    return SpectrumResult(
        sig, sig * sig, cfg.k, 0, np.ones(len(sig), bool), np.zeros(len(sig)), cut, cfg.which, cfg.seed, rank, {"method": "dense-oracle"}
    )


def _meta(cfg, **extra):
    d = {"q": cfg.q, "k": cfg.k, "which": cfg.which, "seed": cfg.seed, "oracle": cfg.oracle, "reorth": cfg.reorth}
    d.update(extra)
    return d


def cmd_reduce(cfg):
    m = nio.read_nb_matrix(cfg.inputs[0])
    red = weak_reduce(m)
    log.info("reduced %dx%d matrix: rank %d, %d components", m.n_rows, m.n_cols, red.rank, len(red.partition))
    if cfg.out:
        nio.write_nb_matrix(cfg.out + ".R.nbm", red.R)
        nio.write_triplets(cfg.out + ".V.nbm", red.V)
        nio.write_diag(cfg.out + ".E.diag", red.E)
        nio.write_sidecar(cfg.out + ".components", red)
    else:
        sys.stdout.write(nio.write_sidecar(None, red))
    return 0


def cmd_laplacian(cfg):
    pair = _load_pair(cfg)
    b = up_bundle(pair, cfg.q, materialize_delta=cfg.materialize_delta)
    if cfg.out:
        nio.write_triplets(cfg.out + ".BLK.nbm", b.B_LK)
        nio.write_diag(cfg.out + ".WLK.diag", b.w_LK)
        nio.write_diag(cfg.out + ".WK.diag", b.w_K)
        nio.write_triplets(cfg.out + ".M.txt", b.M, header="matrix v1")
        if cfg.materialize_delta:
            nio.write_triplets(cfg.out + ".delta.txt", b.delta, header="matrix v1")
    else:
        sys.stdout.write(nio.write_triplets(None, b.B_LK))
        sys.stdout.write(nio.write_diag(None, b.w_LK))
        if cfg.materialize_delta:
            sys.stdout.write(nio.write_triplets(None, b.delta, header="matrix v1"))
    return 0


def cmd_spectrum(cfg):
    pair = _load_pair(cfg)
    res = _spectrum(up_bundle(pair, cfg.q), cfg)
    with _open_out(cfg) as f:
        nio.write_spectra(f, [res], cfg.k, cfg.format, _meta(cfg))
    return 0


def _run_steps(pair, cfg, steps):
    """Per-step bundles and spectra with per-step wall time in seconds."""
    t0 = time.perf_counter()
    bundles = FiltrationEngine(pair, cfg.q, steps).run()
    setup = (time.perf_counter() - t0) / len(bundles)

    def one(b):
        t = time.perf_counter()
        r = _spectrum(b, cfg) if cfg.emit == "spectra" else None
        return r, setup + time.perf_counter() - t

    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as ex:
            out = list(ex.map(one, bundles))
    else:
        out = [one(b) for b in bundles]
    return bundles, [r for r, _ in out], [t for _, t in out]


def _emit_steps(cfg, bundles, results, seconds, meta):
    if cfg.emit == "bundle":
        with _open_out(cfg) as f:
            if cfg.format == "json":
                doc = {
                    "meta": meta,
                    "steps": [
                        {
                            "step": i,
                            "B_LK": nio.write_triplets(None, b.B_LK).splitlines(),
                            "W_LK": [float(x) for x in b.w_LK],
                            "seconds": s,
                        }
                        for i, (b, s) in enumerate(zip(bundles, seconds))
                    ],
                }
                f.write(json.dumps(doc, indent=1) + "\n")
            else:
                w = csv.writer(f, lineterminator="\n")
                w.writerow(["step", "column", "w_LK", "rows", "values", "seconds"])
                for i, (b, s) in enumerate(zip(bundles, seconds)):
                    for j in range(b.shape[1]):
                        lo, hi = b.B_LK.indptr[j], b.B_LK.indptr[j + 1]
                        w.writerow(
                            [i, j, repr(float(b.w_LK[j])), " ".join(map(str, b.B_LK.indices[lo:hi])), " ".join(map(str, b.B_LK.data[lo:hi])), f"{s:.6f}"]
                        )
        return 0
    with _open_out(cfg) as f:
        nio.write_spectra(f, results, cfg.k, cfg.format, meta, ["seconds"], [[f"{s:.6f}"] for s in seconds])
    return 0


def cmd_filtration(cfg):
    pair = _load_pair(cfg)
    if cfg.order == "value":
        raise InputError("--order value needs per-cell values; use it with the image command")
    steps = cube_filtration(pair, cfg.q, "lex", strict=cfg.strict_faces)
    bundles, results, seconds = _run_steps(pair, cfg, steps)
    return _emit_steps(cfg, bundles, results, seconds, _meta(cfg, steps=len(steps)))


def cmd_image(cfg):
    if cfg.tk is None or cfg.tl is None:
        raise InputError("image needs --tk and --tl")
    img = nio.read_image(cfg.inputs[0])
    for _ in range(cfg.pool):
        img = max_pool(img)
    big = cubical_from_image(img, cfg.tl)
    small = cubical_from_image(img, cfg.tk)
    if big.dim < 0 or big.n(0) == 0:
        big = small = CubicalComplex([[], [], []])
    pair = ComplexPair.from_complexes(big, small)
    values = pixel_cell_values(img, big, cfg.q) if cfg.order == "value" else None
    steps = cube_filtration(pair, cfg.q, cfg.order, values, strict=cfg.strict_faces)
    log.info("image %dx%d: %d filtration steps", img.width, img.height, len(steps))
    bundles, results, seconds = _run_steps(pair, cfg, steps)
    meta = _meta(cfg, tk=cfg.tk, tl=cfg.tl, order=cfg.order, steps=len(steps), width=img.width, height=img.height)
    return _emit_steps(cfg, bundles, results, seconds, meta)


def cmd_cheeger(cfg):
    pair = _load_pair(cfg)
    b = up_bundle(pair, cfg.q)
    rep = cheeger_bounds(b, seed=cfg.seed).as_dict()
    if cfg.out:
        if b.unweighted and rep["unit_incidence"]:
            write_hypergraph(to_hypergraph(b), cfg.out + ".hypergraph")
        with open(cfg.out + ".json", "w") as f:
            f.write(json.dumps(rep, indent=1) + "\n")
    else:
        sys.stdout.write(json.dumps(rep, indent=1) + "\n")
    return 0


# -- bench -------------------------------------------------------------------

DEFAULT_SIZES = {
    "star": [2**14, 2**15, 2**16],
    "grid": [8, 16, 32],
    "ngon": [64, 128, 256],
}
# the Gaussian oracle is quadratic or worse, so it runs on its own smaller ladder
ORACLE_SIZES = {"star": [2**10, 2**11, 2**12], "grid": [4, 8, 16], "ngon": [32, 64, 128]}
METHODS = ("weak_reduce", "bundle", "delta", "gauss")


def _bench_input(family, n):
    if family == "star":
        return None, star_matrix(n)
    if family == "grid":
        pair = grid_pair(n)
    elif family == "ngon":
        pair = ngon_pair(n)
    else:
        raise InputError(f"unknown family {family!r}")
    return pair, extract_D(pair, 1)


def _time_ladder(fns, reps):
    """Best-of-reps time for each callable.

    Repetitions are interleaved across the ladder so a burst of background
    load slows every size once instead of skewing a single one.
    """
    best = [float("inf")] * len(fns)
    for _ in range(reps):
        for i, fn in enumerate(fns):
            t = time.perf_counter()
            fn()
            best[i] = min(best[i], time.perf_counter() - t)
    return best


def fit_slope(sizes, times):
    """Least-squares slope of log(time) against log(size)."""
    if len(sizes) < 2:
        return float("nan")
    return float(np.polyfit(np.log(sizes), np.log(np.maximum(times, 1e-9)), 1)[0])


def run_bench(family, methods=None, sizes=None, reps=3):
    """Rows (method, size, seconds) plus the fitted slope per method."""
    methods = list(methods or (("weak_reduce", "gauss") if family == "star" else METHODS))
    rows, slopes = [], {}
    for meth in methods:
        if meth not in METHODS:
            raise InputError(f"unknown bench method {meth!r}")
        if family == "star" and meth in ("bundle", "delta"):
            raise InputError("the star family is a bare matrix; bundle and delta need a complex family")
        ladder = sizes or (ORACLE_SIZES[family] if meth == "gauss" else DEFAULT_SIZES[family])
        fns = []
        for n in ladder:
            pair, d = _bench_input(family, n)
            fns.append(
                {
                    "weak_reduce": lambda d=d: weak_reduce(d),
                    "bundle": lambda pair=pair: up_bundle(pair, 1),
                    "delta": lambda pair=pair: up_bundle(pair, 1, materialize_delta=True),
                    "gauss": lambda d=d: exact_rank(d),
                }[meth]
            )
        ts = _time_ladder(fns, reps)
        for n, t in zip(ladder, ts):
            log.info("bench %s %s n=%d: %.4fs", family, meth, n, t)
            rows.append((meth, n, t))
        slopes[meth] = fit_slope(ladder, ts)
    return rows, slopes


def cmd_bench(cfg):
    rows, slopes = run_bench(cfg.family, cfg.methods, cfg.sizes, cfg.reps)
    with _open_out(cfg) as f:
        if cfg.format == "json":
            doc = {
                "family": cfg.family,
                "rows": [{"method": m, "size": n, "seconds": t} for m, n, t in rows],
                "slopes": slopes,
            }
            f.write(json.dumps(doc, indent=1) + "\n")
        else:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["family", "method", "size", "seconds", "slope"])
            for m, n, t in rows:
                w.writerow([cfg.family, m, n, f"{t:.6g}", f"{slopes[m]:.4f}"])
    return 0


COMMANDS = {
    "reduce": cmd_reduce,
    "laplacian": cmd_laplacian,
    "spectrum": cmd_spectrum,
    "filtration": cmd_filtration,
    "image": cmd_image,
    "cheeger": cmd_cheeger,
    "bench": cmd_bench,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    p = _Parser(prog="nblap", description="Persistent Laplacians of non-branching complexes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp_, inputs=True, complex_pair=False, spectra=False):
        if inputs:
            sp_.add_argument("inputs", nargs=1, metavar="INPUT")
        if complex_pair:
            sp_.add_argument("--sub", help="complex file for K (default K = L)")
        sp_.add_argument("--q", type=int, default=1)
        sp_.add_argument("--out")
        sp_.add_argument("--format", choices=("csv", "json"), default="csv")
        sp_.add_argument("--seed", type=int, default=0)
        if spectra:
            sp_.add_argument("--k", type=int, default=10)
            sp_.add_argument("--which", choices=("top", "bottom", "bottom-nonzero"), default="top")
            sp_.add_argument("--oracle", action="store_true")
            sp_.add_argument("--no-reorth", dest="reorth", action="store_false")

    common(sub.add_parser("reduce", help="weak column reduction of an nb-matrix file"))
    lp = sub.add_parser("laplacian", help="sparse factors of the up persistent Laplacian")
    common(lp, complex_pair=True)
    lp.add_argument("--materialize-delta", action="store_true")
    common(sub.add_parser("spectrum", help="eigenvalues via singular values of the factor"), complex_pair=True, spectra=True)
    for name in ("filtration", "image"):
        fp = sub.add_parser(name, help=f"{name}: per-step bundles or spectra")
        common(fp, complex_pair=name == "filtration", spectra=True)
        fp.add_argument("--order", choices=("lex", "value"), default="lex")
        fp.add_argument("--jobs", type=int, default=1)
        fp.add_argument("--strict-faces", action="store_true")
        fp.add_argument("--emit", choices=("spectra", "bundle"), default="spectra")
        if name == "image":
            fp.add_argument("--tk", type=int, required=True)
            fp.add_argument("--tl", type=int, required=True)
            fp.add_argument("--pool", type=int, default=0, help="number of 2x2 max-pooling passes")
    common(sub.add_parser("cheeger", help="Kron hypergraph and Cheeger-type bounds"), complex_pair=True)
    bp = sub.add_parser("bench", help="scaling benchmark on a synthetic family")
    common(bp, inputs=False)
    bp.add_argument("--family", choices=("star", "grid", "ngon"), default="star")
    bp.add_argument("--sizes", type=lambda s: [int(x) for x in s.split(",")])
    bp.add_argument("--methods", type=lambda s: s.split(","))
    bp.add_argument("--reps", type=int, default=3)
    return p


def parse_config(argv):
    ns = build_parser().parse_args(argv)
    d = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    if d.get("which") == "bottom-nonzero":
        d["which"] = "bottom"
    return RunConfig(**d).validate()


def main(argv=None):
    _setup_logging()
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except NblapError as e:
        print(f"nblap: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"nblap: {e}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
