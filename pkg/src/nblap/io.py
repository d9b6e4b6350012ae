"""Text formats: nb-matrix triplets, diagonals, complexes, images and spectra."""
from __future__ import annotations

import csv
import io as _io
import json
import re

import numpy as np
import scipy.sparse as sp

from .complexes import CubicalComplex, GrayImage, SimplicialComplex
from .errors import InputError, MatrixFormatError
from .nbmatrix import build_csr

__all__ = [
    "read_nb_matrix",
    "write_nb_matrix",
    "write_triplets",
    "write_diag",
    "read_diag",
    "write_sidecar",
    "read_complex",
    "write_complex",
    "read_image",
    "read_pgm",
    "write_pgm",
    "spectrum_rows",
    "write_spectra",
]


def _text(src):
    if hasattr(src, "read"):
        return src.read()
    with open(src) as f:
        return f.read()


def read_nb_matrix(src):
    """Parse ``nb-matrix v1 <rows> <cols> <nnz>`` followed by ``row col val`` lines."""
    lines = [ln.split("#")[0].strip() for ln in _text(src).splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MatrixFormatError("empty matrix file")
    head = lines[0].split()
    if len(head) != 5 or head[:2] != ["nb-matrix", "v1"]:
        raise MatrixFormatError(f"bad header: {lines[0]!r}")
    try:
        k, l, nnz = (int(x) for x in head[2:])
        trip = []
        for ln in lines[1:]:
            r, c, v = ln.split()
            trip.append((int(r), int(c), int(float(v)) if float(v).is_integer() else float(v)))
    except ValueError as e:
        raise MatrixFormatError(f"cannot parse matrix file: {e}") from None
    if len(trip) != nnz:
        raise MatrixFormatError(f"header promises {nnz} entries, found {len(trip)}")
    try:
        return build_csr(trip, shape=(k, l))
    except ValueError as e:
        if type(e) is ValueError:
            raise MatrixFormatError(str(e)) from None
        raise


def _triplet_lines(m, fmt):
    m = sp.coo_matrix(m)
    order = np.lexsort((m.col, m.row))
    return [f"{m.row[i]} {m.col[i]} {fmt(m.data[i])}" for i in order]


def write_triplets(path, m, header="nb-matrix v1"):
    """Any sparse matrix as sorted triplets; integers plain, floats round-trippable."""
    m = sp.coo_matrix(m)
    m.sum_duplicates()
    m.eliminate_zeros()
    if np.issubdtype(m.dtype, np.integer):
        fmt = str
    else:
        fmt = lambda x: repr(float(x))
    lines = [f"{header} {m.shape[0]} {m.shape[1]} {m.nnz}"] + _triplet_lines(m, fmt)
    return _emit(path, lines)


def write_nb_matrix(path, m):
    return write_triplets(path, m.to_scipy(), "nb-matrix v1")


def _emit(path, lines):
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text


def write_diag(path, values):
    values = np.asarray(values, dtype=np.float64)
    return _emit(path, [f"diag v1 {len(values)}"] + [repr(float(v)) for v in values])


def read_diag(src):
    lines = [ln.strip() for ln in _text(src).splitlines() if ln.strip()]
    if not lines or lines[0].split()[:2] != ["diag", "v1"]:
        raise InputError("bad diag header")
    return np.array([float(x) for x in lines[1:]])


def write_sidecar(path, red):
    """Kernel columns and component kinds of a weak reduction, one item per line."""
    lines = [f"nb-reduction v1 {red.R.n_rows} {red.R.n_cols} rank={red.rank}"]
    lines += [f"kernel {c}" for c in red.kernel_cols.tolist()]
    for i, c in enumerate(red.partition):
        lines.append(f"component {i} {c.kind.value} cols={','.join(map(str, c.cols.tolist()))}")
    return _emit(path, lines)


_INTERVAL = re.compile(r"\[(-?\d+),(-?\d+)\]")


def _cell_text(kind, cell):
    if kind == "simplicial":
        return " ".join(str(v) for v in cell)
    return "x".join(f"[{a},{b}]" for a, b in cell)


def _parse_cell(kind, text):
    if kind == "simplicial":
        return tuple(int(v) for v in text.split())
    parts = text.split("x")
    out = []
    for p in parts:
        m = _INTERVAL.fullmatch(p.strip())
        if not m:
            raise InputError(f"bad cube {text!r}")
        out.append((int(m.group(1)), int(m.group(2))))
    return tuple(out)


def write_complex(path, c):
    lines = [f"complex v1 {c.kind}"]
    for q in range(c.dim + 1):
        lines.append(f"cells q={q}")
        lines += [_cell_text(c.kind, x) for x in c.cells(q)]
    for q in range(c.dim + 1):
        lines.append(f"weights q={q}")
        lines += [repr(float(w)) for w in c.weights(q)]
    return _emit(path, lines)


def read_complex(src):
    """Parse a ``complex v1`` file.  Missing weight sections default to 1."""
    lines = [ln.strip() for ln in _text(src).splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InputError("empty complex file")
    head = lines[0].split()
    if head[:2] != ["complex", "v1"] or len(head) != 3 or head[2] not in ("simplicial", "cubical"):
        raise InputError(f"bad complex header: {lines[0]!r}")
    kind = head[2]
    cells, weights = {}, {}
    section = None
    try:
        for ln in lines[1:]:
            m = re.fullmatch(r"(cells|weights) q=(\d+)", ln)
            if m:
                section = (m.group(1), int(m.group(2)))
                (cells if section[0] == "cells" else weights).setdefault(section[1], [])
                continue
            if section is None:
                raise InputError(f"data before any section: {ln!r}")
            if section[0] == "cells":
                cells[section[1]].append(_parse_cell(kind, ln))
            else:
                weights[section[1]].append(float(ln))
    except ValueError as e:
        raise InputError(f"cannot parse complex file: {e}") from None
    top = max(cells, default=-1)
    cell_lists = [cells.get(q, []) for q in range(top + 1)]
    wl = [weights.get(q) for q in range(top + 1)]
    cls = SimplicialComplex if kind == "simplicial" else CubicalComplex
    return cls(cell_lists, wl)


def _pgm_tokens(data):
    tokens, i = [], 0
    # header: magic, width, height, maxval, with comments allowed
    while len(tokens) < 4:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise InputError("truncated PGM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1


def read_pgm(path):
    with open(path, "rb") as f:
        data = f.read()
    try:
        (magic, w, h, maxval), start = _pgm_tokens(data)
        w, h, maxval = int(w), int(h), int(maxval)
    except (ValueError, IndexError):
        raise InputError(f"{path}: not a PGM file") from None
    if maxval < 1 or maxval > 255:
        raise InputError(f"{path}: only 8-bit PGM is supported")
    if magic == b"P5":
        raw = np.frombuffer(data[start : start + w * h], dtype=np.uint8)
    elif magic == b"P2":
        try:
            raw = np.array(data[start:].split(), dtype=np.int64)[: w * h]
        except ValueError:
            raise InputError(f"{path}: bad PGM pixel data") from None
    else:
        raise InputError(f"{path}: unsupported PGM magic {magic!r}")
    if raw.size != w * h:
        raise InputError(f"{path}: expected {w * h} pixels, found {raw.size}")
    if maxval != 255:
        raw = np.round(raw.astype(float) * 255 / maxval)
    return GrayImage(w, h, raw.reshape(h, w))


def write_pgm(path, img, binary=True):
    with open(path, "wb") as f:
        if binary:
            f.write(f"P5\n{img.width} {img.height}\n255\n".encode())
            f.write(np.ascontiguousarray(img.values, dtype=np.uint8).tobytes())
        else:
            f.write(f"P2\n{img.width} {img.height}\n255\n".encode())
            for row in img.values:
                f.write((" ".join(str(int(v)) for v in row) + "\n").encode())


def read_image(path):
    """PGM (P2/P5) or a CSV grid of intensities, chosen by file content."""
    with open(path, "rb") as f:
        head = f.read(2)
    if head in (b"P2", b"P5"):
        return read_pgm(path)
    try:
        with open(path) as f:
            rows = [[float(x) for x in r] for r in csv.reader(f) if r]
    except (ValueError, UnicodeDecodeError):
        raise InputError(f"{path}: neither PGM nor a CSV of intensities") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: CSV rows must have equal length")
    a = np.array(rows)
    if (a < 0).any() or (a > 255).any() or not np.array_equal(a, np.round(a)):
        raise InputError(f"{path}: intensities must be integers in [0, 255]")
    return GrayImage.from_array(a.astype(np.int64))


def spectrum_rows(step, result, k=None, extra=None):
    """CSV rows for one spectrum; pads to k rows with nan when fewer values exist."""
    n = len(result.singular_values)
    count = max(n, k or 0)
    rows = []
    for i in range(count):
        if i < n:
            row = [step, i, repr(float(result.singular_values[i])), repr(float(result.eigenvalues[i])), str(bool(result.converged[i])).lower()]
        else:
            row = [step, i, "nan", "nan", "false"]
        if extra is not None:
            row += list(extra)
        rows.append(row)
    return rows


def write_spectra(out, results, k=None, fmt="csv", meta=None, extra_cols=None, extras=None):
    """Write per-step spectra as CSV (``step,index,singular_value,eigenvalue,converged``) or JSON."""
    if fmt == "json":
        doc = {"meta": meta or {}, "steps": []}
        for i, r in enumerate(results):
            entry = {
                "step": i,
                "singular_values": [float(x) for x in r.singular_values],
                "eigenvalues": [float(x) for x in r.eigenvalues],
                "converged": [bool(x) for x in r.converged],
                "iterations": r.iterations,
                "cutoff": r.cutoff,
                "rank": r.rank,
            }
            if extras is not None:
                entry.update(dict(zip(extra_cols, extras[i])))
            doc["steps"].append(entry)
        text = json.dumps(doc, indent=1) + "\n"
    else:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "index", "singular_value", "eigenvalue", "converged"] + list(extra_cols or []))
        for i, r in enumerate(results):
            w.writerows(spectrum_rows(i, r, k, None if extras is None else extras[i]))
        text = buf.getvalue()
    if hasattr(out, "write"):
        out.write(text)
    elif out is not None:
        with open(out, "w") as f:
            f.write(text)
    return text
