import csv
import io
import json

import numpy as np
import pytest

from nblap import io as nio
from nblap.catalog import mobius_pair, square_grid_pair, subdivided_triangle_pair, two_component_matrix
from nblap.cli import fit_slope, main, run_bench
from nblap.complexes import GrayImage
from nblap.errors import InputError, MatrixFormatError, NonBranchingViolation


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _strip_seconds(text):
    return [{k: v for k, v in r.items() if k != "seconds"} for r in _rows(text)]


@pytest.fixture
def files(tmp_path):
    p = subdivided_triangle_pair()
    nio.write_complex(tmp_path / "L.cx", p.big)
    nio.write_complex(tmp_path / "K.cx", p.small)
    nio.write_nb_matrix(tmp_path / "g.nbm", two_component_matrix())
    nio.write_pgm(tmp_path / "cb.pgm", GrayImage.from_array(np.array([[0, 255], [255, 0]])))
    return tmp_path


# -- formats --------------------------------------------------------------


def test_nb_matrix_roundtrip(tmp_path):
    m = two_component_matrix()
    text = nio.write_nb_matrix(tmp_path / "m.nbm", m)
    assert text.splitlines()[0] == "nb-matrix v1 6 7 12"
    assert nio.read_nb_matrix(tmp_path / "m.nbm") == m


def test_nb_matrix_parse_errors():
    with pytest.raises(MatrixFormatError):
        nio.read_nb_matrix(io.StringIO("matrix 1 1 0\n"))
    with pytest.raises(MatrixFormatError):
        nio.read_nb_matrix(io.StringIO("nb-matrix v1 1 1 2\n0 0 1\n"))
    with pytest.raises(MatrixFormatError):
        nio.read_nb_matrix(io.StringIO("nb-matrix v1 1 1 1\n0 x 1\n"))
    with pytest.raises(MatrixFormatError):
        nio.read_nb_matrix(io.StringIO("nb-matrix v1 1 1 1\n0 5 1\n"))
    with pytest.raises(NonBranchingViolation):
        nio.read_nb_matrix(io.StringIO("nb-matrix v1 1 3 3\n0 0 1\n0 1 1\n0 2 1\n"))


def test_complex_roundtrip(tmp_path):
    for big in (mobius_pair().big, square_grid_pair().big, subdivided_triangle_pair().big.with_weights(1, np.arange(1.0, 7.0))):
        nio.write_complex(tmp_path / "c.cx", big)
        back = nio.read_complex(tmp_path / "c.cx")
        assert type(back) is type(big)
        for q in range(big.dim + 1):
            assert back.cells(q) == big.cells(q)
            assert np.array_equal(back.weights(q), big.weights(q))


def test_complex_cube_syntax():
    c = nio.read_complex(io.StringIO("complex v1 cubical\ncells q=0\n[0,0]x[1,1]\n[1,1]x[1,1]\ncells q=1\n[0,1]x[1,1]\n"))
    assert c.cells(1) == [((0, 1), (1, 1))]
    with pytest.raises(InputError):
        nio.read_complex(io.StringIO("complex v1 cubical\ncells q=0\n[0,0]y[1,1]\n"))
    with pytest.raises(InputError):
        nio.read_complex(io.StringIO("complex v2 simplicial\n"))


def test_pgm_and_csv_images(tmp_path):
    img = GrayImage.from_array(np.array([[0, 10, 200], [255, 3, 4]]))
    for binary in (True, False):
        nio.write_pgm(tmp_path / "a.pgm", img, binary=binary)
        assert np.array_equal(nio.read_image(tmp_path / "a.pgm").values, img.values)
    (tmp_path / "a.csv").write_text("0,10,200\n255,3,4\n")
    assert np.array_equal(nio.read_image(tmp_path / "a.csv").values, img.values)
    (tmp_path / "b.csv").write_text("0,300\n")
    with pytest.raises(InputError):
        nio.read_image(tmp_path / "b.csv")
    (tmp_path / "c.pgm").write_bytes(b"P5\n4 4\n255\n\x00")
    with pytest.raises(InputError):
        nio.read_image(tmp_path / "c.pgm")


def test_pgm_comments_and_maxval(tmp_path):
    (tmp_path / "x.pgm").write_text("P2\n# note\n2 1\n15\n0 15\n")
    assert nio.read_image(tmp_path / "x.pgm").values.tolist() == [[0, 255]]


def test_diag_roundtrip():
    text = nio.write_diag(None, [0.5, 1e-300])
    assert nio.read_diag(io.StringIO(text)).tolist() == [0.5, 1e-300]


# -- CLI ------------------------------------------------------------------


def test_reduce_sidecar(files, capsys):
    assert main(["reduce", str(files / "g.nbm")]) == 0
    out = capsys.readouterr().out.splitlines()
    comps = [ln for ln in out if ln.startswith("component")]
    assert comps == ["component 0 regulable cols=0,2,4", "component 1 regulable cols=1,3,5,6"]
    assert [ln for ln in out if ln.startswith("kernel")] == ["kernel 4", "kernel 6"]


def test_reduce_writes_files(files):
    assert main(["reduce", str(files / "g.nbm"), "--out", str(files / "r")]) == 0
    r = nio.read_nb_matrix(files / "r.R.nbm")
    assert r.shape == (6, 7) and nio.read_diag(files / "r.E.diag").tolist() == [1.0] * 7
    assert "kernel 6" in (files / "r.components").read_text()


def test_reduce_empty(tmp_path, capsys):
    (tmp_path / "e.nbm").write_text("nb-matrix v1 0 0 0\n")
    assert main(["reduce", str(tmp_path / "e.nbm"), "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e.R.nbm").read_text() == "nb-matrix v1 0 0 0\n"
    assert "kernel" not in (tmp_path / "e.components").read_text()


def test_reduce_violation_names_row(tmp_path, capsys):
    (tmp_path / "b.nbm").write_text("nb-matrix v1 2 3 4\n0 0 1\n1 0 1\n1 1 1\n1 2 -1\n")
    assert main(["reduce", str(tmp_path / "b.nbm")]) == 3
    assert "row 1" in capsys.readouterr().err


def test_parse_error_exit_code(tmp_path, capsys):
    (tmp_path / "b.nbm").write_text("garbage\n")
    assert main(["reduce", str(tmp_path / "b.nbm")]) == 2
    assert main(["reduce", str(tmp_path / "missing.nbm")]) == 2
    assert main(["nonsense"]) == 2


def test_laplacian_and_delta(files, capsys):
    assert main(["laplacian", str(files / "L.cx"), "--sub", str(files / "K.cx"), "--materialize-delta", "--out", str(files / "t")]) == 0
    blk = nio.read_nb_matrix(files / "t.BLK.nbm").to_dense()
    assert blk.tolist() == [[1, 0], [1, -1], [-1, 0], [-1, 1], [0, 1]]
    assert nio.read_diag(files / "t.WLK.diag").tolist() == [0.5, 1.0]
    assert (files / "t.delta.txt").read_text().startswith("matrix v1 5 5")


def test_spectrum_csv_json_and_oracle(files, capsys):
    base = ["spectrum", str(files / "L.cx"), "--sub", str(files / "K.cx"), "--k", "2"]
    assert main(base) == 0
    rows = _rows(capsys.readouterr().out)
    assert [float(r["eigenvalue"]) for r in rows] == pytest.approx([4.0, 1.0], abs=1e-12)
    assert main(base + ["--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["meta"]["k"] == 2 and doc["steps"][0]["rank"] == 2
    assert main(base + ["--oracle"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [float(r["eigenvalue"]) for r in rows] == pytest.approx([4.0, 1.0], abs=1e-12)


def test_image_checkerboard_five_steps(files, capsys):
    assert main(["image", str(files / "cb.pgm"), "--tk", "1", "--tl", "256", "--k", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [int(r["step"]) for r in rows] == [0, 1, 2, 3, 4]
    assert all(float(r["seconds"]) >= 0 for r in rows)


def test_image_uniform_single_step(tmp_path, capsys):
    nio.write_pgm(tmp_path / "u.pgm", GrayImage.from_array(np.full((3, 3), 9)))
    assert main(["image", str(tmp_path / "u.pgm"), "--tk", "1", "--tl", "1", "--k", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 1 and rows[0]["singular_value"] == "nan"


def test_image_config_errors(files, capsys):
    assert main(["image", str(files / "cb.pgm"), "--tk", "5", "--tl", "1"]) == 2
    assert main(["image", str(files / "cb.pgm"), "--tk", "1", "--tl", "256", "--strict-faces"]) == 4
    assert main(["image", str(files / "cb.pgm"), "--tk", "1", "--tl", "256", "--k", "0"]) == 2
    nio.write_pgm(files / "odd.pgm", GrayImage.from_array(np.zeros((3, 3), int)))
    assert main(["image", str(files / "odd.pgm"), "--tk", "1", "--tl", "2", "--pool", "1"]) == 2


def test_image_is_deterministic_and_jobs_preserve_order(files, capsys):
    args = ["image", str(files / "cb.pgm"), "--tk", "1", "--tl", "256", "--k", "2", "--order", "value"]
    main(args)
    a = _strip_seconds(capsys.readouterr().out)
    main(args + ["--jobs", "3"])
    b = _strip_seconds(capsys.readouterr().out)
    main(args)
    c = _strip_seconds(capsys.readouterr().out)
    assert a == b == c


def test_image_bundle_output(files, capsys):
    assert main(["image", str(files / "cb.pgm"), "--tk", "1", "--tl", "256", "--emit", "bundle", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["steps"]) == 5 and doc["steps"][0]["W_LK"] == [1.0, 1.0]


def test_filtration_command(files, capsys):
    assert main(["filtration", str(files / "L.cx"), "--sub", str(files / "K.cx"), "--k", "2"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert sorted({r["step"] for r in rows}) == ["0", "1"]


def test_cheeger_command(files, capsys):
    assert main(["cheeger", str(files / "L.cx"), "--sub", str(files / "K.cx")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["lower"] == 1.0 and rep["upper"] == 2.0 and abs(rep["lambda_min"] - 1) < 1e-10
    assert main(["cheeger", str(files / "L.cx"), "--sub", str(files / "K.cx"), "--out", str(files / "ch")]) == 0
    assert (files / "ch.hypergraph").read_text().startswith("hypergraph v1 5 2")


def test_logging_goes_to_stderr(files, capsys, monkeypatch):
    monkeypatch.setenv("NBLAP_LOG", "info")
    assert main(["reduce", str(files / "g.nbm")]) == 0
    out = capsys.readouterr()
    assert "rank 5" in out.err and "nblap:" not in out.out


def test_bench_grid_single_size(capsys):
    assert main(["bench", "--family", "grid", "--sizes", "16", "--reps", "1"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["method"] for r in rows] == ["weak_reduce", "bundle", "delta", "gauss"]


def test_bench_ngon_times_grow():
    rows, _ = run_bench("ngon", ["weak_reduce", "bundle"], [64, 128, 256], reps=5)
    for meth in ("weak_reduce", "bundle"):
        t = [s for m, _, s in rows if m == meth]
        # minimum-of-repetitions timings; allow a little jitter between neighbours
        assert all(b >= 0.8 * a for a, b in zip(t, t[1:])) and t[-1] > t[0]


def test_bench_rejects_star_bundle():
    with pytest.raises(InputError):
        run_bench("star", ["bundle"], [8])


def test_fit_slope():
    assert fit_slope([1, 2, 4], [1, 4, 16]) == pytest.approx(2.0)
