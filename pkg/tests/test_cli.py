import json

import numpy as np
import pytest

from steinhaus.cli import main
from steinhaus.norms import NormSpec
from steinhaus.pointset import build_index, lattice_window, load_points
from steinhaus.search import BallCertificate, validate_certificate


@pytest.fixture
def pts(tmp_path):
    path = tmp_path / "pts.txt"
    assert main(["gen-points", "--dim", "2", "--horizon", "20", "--norm", "l2", "--out", str(path)]) == 0
    return path


def test_gen_points(tmp_path, pts):
    assert len(load_points(pts)) == len(lattice_window(2, 20.0, NormSpec.lp(2, 2)))
    sq = tmp_path / "sq.txt"
    assert main(["gen-points", "--dim", "2", "--horizon", "1", "--norm", "linf", "--out", str(sq)]) == 0
    assert len(load_points(sq)) == 9
    assert main(["gen-points", "--dim", "2", "--horizon", "1"]) == 1
    assert main(["gen-points", "--dim", "2", "--horizon", "50", "--cap", "10", "--out", str(sq)]) == 1


@pytest.mark.parametrize("method", ["sorted", "growth"])
def test_find_ball(tmp_path, pts, method):
    out = tmp_path / "cert.json"
    argv = ["find-ball", "--points", str(pts), "--norm", "l2", "--center", "1.41421356,0.33333333",
            "--n", "7", "--method", method, "--out", str(out)]
    assert main(argv) == 0
    cert = BallCertificate.from_dict(json.loads(out.read_text()))
    assert cert.n == 7 and cert.method == method
    assert validate_certificate(cert, load_points(pts)).ok
    if method == "growth":
        assert cert.trace
    first = out.read_bytes()
    assert main(argv) == 0 and out.read_bytes() == first


def test_find_ball_errors(tmp_path, pts):
    base = ["find-ball", "--points", str(pts), "--center", "0.5,0.5"]
    assert main(base + ["--n", "0"]) == 1
    assert main(base + ["--n", "100000"]) == 3
    assert main(base + ["--n", "2", "--max-perturbations", "1"]) == 2
    assert main(["find-ball", "--points", str(tmp_path / "nope"), "--center", "0,0", "--n", "1"]) == 4
    assert main(base[:-1] + ["0.5,0.5,0.5", "--n", "1"]) == 1


def test_find_ball_lattice_source(capsys):
    assert main(["find-ball", "--dim", "3", "--horizon", "5", "--norm", "custom3d",
                 "--center", "0.4,0.3,0.2", "--n", "6", "--method", "growth"]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 6


def test_config_file(tmp_path, pts, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("# defaults\nn = 5\nmethod=growth\ncenter=1.41421356,0.33333333\ntau_shell=1e-9\n")
    assert main(["find-ball", "--config", str(cfg), "--points", str(pts)]) == 0
    assert json.loads(capsys.readouterr().out)["n"] == 5
    # flags override the file
    assert main(["find-ball", "--config", str(cfg), "--points", str(pts), "--n", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 3 and out["method"] == "growth"
    cfg.write_text("n=5\nbogus=1\n")
    assert main(["find-ball", "--config", str(cfg), "--points", str(pts), "--center", "0,0"]) == 1
    cfg.write_text("tau_shell=-1\n")
    assert main(["find-ball", "--config", str(cfg), "--points", str(pts), "--center", "0,0",
                 "--n", "1"]) == 1
    assert main(["find-ball", "--config", str(tmp_path / "none"), "--points", str(pts)]) == 4


def test_check_sprime(tmp_path):
    out = tmp_path / "r.json"
    assert main(["check-sprime", "--norm", "l1.5", "--dim", "3", "--pairs", "100", "--delta", "0.1",
                 "--seed", "1", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["witnessed"] == 100
    first = out.read_bytes()
    main(["check-sprime", "--norm", "l1.5", "--dim", "3", "--pairs", "100", "--delta", "0.1",
          "--seed", "1", "--out", str(out)])
    assert out.read_bytes() == first
    assert main(["check-sprime", "--norm", "linf", "--dim", "2", "--facet-pairs", "50", "--delta", "0.4",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["certified_impossible"] == 50
    assert main(["check-sprime", "--norm", "linf", "--dim", "2", "--facet-pairs", "5", "--delta", "0"]) == 1
    assert main(["check-sprime", "--norm", "custom3d", "--equator=-0.5:-0.1,0:0.4", "--delta", "0.05",
                 "--strategies", "tangent", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["strategies"]["tangent"] == 2


def test_norm_info(tmp_path):
    svg, csv = tmp_path / "fig1.svg", tmp_path / "fig1.csv"
    argv = ["norm-info", "--norm", "custom3d", "--triangles", "1,2", "--grid", "16",
            "--svg", str(svg), "--csv", str(csv), "--out", str(tmp_path / "info.json")]
    assert main(argv) == 0
    rows = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert rows.shape == (3 * 2 * 16 * 16, 3)
    assert np.abs(NormSpec.custom3d()(rows) - 1).max() < 1e-6
    assert svg.read_text().startswith("<svg") and "polyline" in svg.read_text()
    first_csv, first_svg = csv.read_bytes(), svg.read_bytes()
    assert main(argv) == 0
    assert csv.read_bytes() == first_csv and svg.read_bytes() == first_svg

    sq = tmp_path / "sq.svg"
    assert main(["norm-info", "--norm", "linf", "--dim", "2", "--svg", str(sq)]) == 0
    assert sq.read_text().count("polyline") == 1
    assert main(["norm-info", "--norm", "custom3d", "--grid", "0"]) == 1
    assert main(["norm-info", "--norm", "l2", "--dim", "2", "--triangles", "1"]) == 1
    assert main(["norm-info", "--norm", "l2", "--dim", "3"]) == 1
    assert main(["norm-info", "--norm", "custom3d", "--triangles", "5"]) == 1


def test_bench(tmp_path, pts):
    out = tmp_path / "b.json"
    assert main(["bench", "--points", str(pts), "--queries", "50", "--seed", "5", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["identical"] and report["queries"] == 50
    assert main(["bench", "--points", str(pts), "--queries", "0", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["speedup"] is None
    assert main(["bench", "--points", str(tmp_path / "missing.txt")]) == 4


def test_help_and_usage(capsys):
    assert main(["--help"]) == 0
    assert "key=value" in capsys.readouterr().out
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
