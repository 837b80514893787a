import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from sfmval import geotag as gt
from sfmval.alignment import SimilarityTransform
from sfmval import synth as sy
from sfmval import trajio as tio
from sfmval.cli import main

from conftest import make_jpeg, random_unit_quats


def _colmap_file(tmp_path, n=30, seed=0):
    rng = np.random.default_rng(seed)
    keys = list(range(1, n + 1))
    traj = tio.Trajectory.from_arrays(keys, rng.uniform(-20, 20, (n, 3)), random_unit_quats(rng, n),
                                      [f"frame_{k:04d}.png" for k in keys])
    path = tmp_path / "images.txt"
    tio.write_colmap_images(traj, path, points_per_image=5)
    return path, traj


def test_convert_colmap(tmp_path):
    src, traj = _colmap_file(tmp_path)
    out = tmp_path / "out.txt"
    assert main(["convert", "--in", str(src), "--format", "colmap", "--out", str(out)]) == 0
    back = tio.read_canonical(out)
    np.testing.assert_allclose(back.positions(), traj.positions(), atol=1e-9)
    first = out.read_bytes()
    assert main(["convert", "--in", str(src), "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_convert_missing_input_is_usage_error(tmp_path):
    assert main(["convert", "--in", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o.txt")]) == 2
    assert not (tmp_path / "o.txt").exists()


def test_bad_flags_are_usage_errors(tmp_path):
    assert main(["convert", "--in", "x"]) == 2
    assert main(["frobnicate"]) == 2


def test_convert_reports_line_number(tmp_path, capsys):
    bad = tmp_path / "images.txt"
    bad.write_text("# header\n1 1 0 0 0 0 0 0 1 f_1.png\n\n2 1 0 0 0 0 0 1 f_2.png\n\n")
    out = tmp_path / "o.txt"
    assert main(["convert", "--in", str(bad), "--format", "colmap", "--out", str(out)]) == 1
    assert "line 4" in capsys.readouterr().err
    assert not out.exists()


def test_convert_blender_units_agree(tmp_path):
    rad = tmp_path / "rad.csv"
    deg = tmp_path / "deg.csv"
    rad.write_text("frame,x,y,z,rx,ry,rz\n1,1,2,3,0.5,-0.25,1.5\n2,4,5,6,3.0,0.1,-2.0\n")
    rows = [[1, 1, 2, 3, 0.5, -0.25, 1.5], [2, 4, 5, 6, 3.0, 0.1, -2.0]]
    deg.write_text("frame,x,y,z,rx,ry,rz\n" + "".join(
        ",".join([str(r[0])] + [repr(v) for v in r[1:4]] + [repr(math.degrees(v)) for v in r[4:]]) + "\n" for r in rows))
    assert main(["convert", "--in", str(rad), "--out", str(tmp_path / "a.txt")]) == 0
    assert main(["convert", "--in", str(deg), "--unit", "deg", "--out", str(tmp_path / "b.txt")]) == 0
    a = tio.read_canonical(tmp_path / "a.txt")
    b = tio.read_canonical(tmp_path / "b.txt")
    np.testing.assert_allclose(a.orientations(), b.orientations(), atol=1e-12)


@pytest.fixture
def gauge_pair(tmp_path):
    gtraj = sy.generate_circuit(sy.CircuitParams(n_frames=300))
    est = sy.perturb(gtraj, sy.NoiseModel(gauge=SimilarityTransform(2.0, (1, 0, 0, 0), (3, 4, 5))))
    g_path, e_path = tmp_path / "gt.txt", tmp_path / "est.txt"
    tio.write_canonical(gtraj, g_path)
    tio.write_canonical(est, e_path)
    return g_path, e_path


def test_evaluate_identical_is_zero(tmp_path, gauge_pair, capsys):
    g_path, _ = gauge_pair
    rep, res = tmp_path / "r.csv", tmp_path / "res.csv"
    assert main(["evaluate", "--gt", str(g_path), "--est", str(g_path), "--report", str(rep), "--residuals", str(res)]) == 0
    row = next(csv.DictReader(io.StringIO(rep.read_text())))
    for k in ("rms_x", "rms_y", "rms_z", "rms_avg", "rms_3d"):
        assert float(row[k]) < 1e-9
    assert res.read_text().startswith("frame_key,dx,dy,dz\n")
    assert "RMS" in capsys.readouterr().out


def test_evaluate_no_scale_counter_case(tmp_path, gauge_pair):
    g_path, e_path = gauge_pair
    rep = tmp_path / "r.csv"
    assert main(["evaluate", "--gt", str(g_path), "--est", str(e_path), "--report", str(rep)]) == 0
    assert float(next(csv.DictReader(rep.open()))["rms_avg"]) < 1e-9
    assert main(["evaluate", "--gt", str(g_path), "--est", str(e_path), "--no-scale", "--report", str(rep)]) == 0
    assert float(next(csv.DictReader(rep.open()))["rms_avg"]) > 10


def test_evaluate_no_overlap_names_error(tmp_path, capsys):
    a = tio.Trajectory.from_arrays([1, 2, 3], np.eye(3), np.tile([1.0, 0, 0, 0], (3, 1)))
    b = tio.Trajectory.from_arrays([7, 8, 9], np.eye(3), np.tile([1.0, 0, 0, 0], (3, 1)))
    tio.write_canonical(a, tmp_path / "a.txt")
    tio.write_canonical(b, tmp_path / "b.txt")
    assert main(["evaluate", "--gt", str(tmp_path / "a.txt"), "--est", str(tmp_path / "b.txt")]) == 1
    assert "NoOverlap" in capsys.readouterr().err


def test_align_outputs(tmp_path, gauge_pair):
    g_path, e_path = gauge_pair
    tr, out = tmp_path / "t.txt", tmp_path / "aligned.txt"
    assert main(["align", "--gt", str(g_path), "--est", str(e_path), "--out-transform", str(tr), "--out-traj", str(out)]) == 0
    line = tr.read_text().strip()
    assert line.startswith("sfmval-transform v1:")
    assert float(line.split()[2]) == pytest.approx(0.5, rel=1e-9)
    np.testing.assert_allclose(tio.read_canonical(out).positions(), tio.read_canonical(g_path).positions(), atol=1e-9)


def test_geotag_four_of_five(tmp_path, capsys):
    images = tmp_path / "img"
    images.mkdir()
    for k in (1, 2, 4, 5):
        (images / f"frame_{k:04d}.jpg").write_bytes(make_jpeg())
    traj = tio.Trajectory.from_arrays([1, 2, 3, 4, 5], np.arange(15.0).reshape(5, 3), np.tile([1.0, 0, 0, 0], (5, 1)))
    tio.write_canonical(traj, tmp_path / "t.txt")
    rep = tmp_path / "geo.csv"
    args = ["geotag", "--images", str(images), "--traj", str(tmp_path / "t.txt"), "--lat0", "10", "--lon0", "20",
            "--alt0", "5", "--report", str(rep)]
    assert main(args) == 0
    rows = list(csv.DictReader(rep.open()))
    assert [r["status"] for r in rows].count("missing") == 1
    assert "missing 1" in capsys.readouterr().out
    fix = gt.read_gps_exif((images / "frame_0002.jpg").read_bytes())
    assert fix.alt == pytest.approx(5 + 5, abs=1e-3)
    assert main(["geotag", "--images", str(tmp_path / "none"), "--traj", str(tmp_path / "t.txt")]) == 2


def test_synth_custom_and_seed_env(tmp_path, monkeypatch):
    args = ["synth", "--preset", "custom", "--frames", "200", "--sigma", "0.5", "0.5", "0.1", "--gauge", "--dropout", "0.05"]
    monkeypatch.setenv("SFMVAL_SEED", "77")
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--seed", "77"]) == 0
    assert main(args + ["--out", str(tmp_path / "c"), "--seed", "78"]) == 0
    a = (tmp_path / "a" / "custom_est.txt").read_bytes()
    assert a == (tmp_path / "b" / "custom_est.txt").read_bytes()
    assert a != (tmp_path / "c" / "custom_est.txt").read_bytes()
    assert "custom,custom_gt.txt,custom_est.txt,77" in (tmp_path / "a" / "manifest.csv").read_text()
    monkeypatch.setenv("SFMVAL_SEED", "zebra")
    assert main(args + ["--out", str(tmp_path / "d")]) == 2


def test_compare_sorted_small(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--frames", "400", "--seed", "5"]) == 0
    out = tmp_path / "table.csv"
    assert main(["compare", "--inputs", str(tmp_path / "manifest.csv"), "--out", str(out), "--sorted"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 6
    avgs = [float(r["rms_avg"]) for r in rows]
    assert avgs == sorted(avgs)


def test_compare_empty_manifest(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("label,gt_path,est_path,seed\n")
    assert main(["compare", "--inputs", str(m)]) == 1
    assert main(["compare", "--inputs", str(tmp_path / "missing.csv")]) == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "sfmval", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "sfmval" in out.stdout
