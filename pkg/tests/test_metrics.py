import math

import numpy as np
import pytest

from sfmval import alignment as al
from sfmval import metrics as mt
from sfmval import trajio as tio
from sfmval.errors import EmptyInput

from conftest import random_unit_quats


def _pair(rng, n=200, sigma=(0.0, 0.0, 0.0), missing=()):
    keys = np.arange(1, n + 1)
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    pos = np.c_[100 * np.cos(t), 60 * np.sin(t), 3 * np.sin(3 * t)]
    q = random_unit_quats(rng, n)
    gt = tio.Trajectory.from_arrays(keys, pos, q, frame_label="gt")
    noisy = pos + rng.normal(size=pos.shape) * np.asarray(sigma)
    keep = np.array([k not in missing for k in keys])
    est = tio.Trajectory.from_arrays(keys[keep], noisy[keep], q[keep], frame_label="est")
    return gt, est


def test_rms_examples():
    assert mt.rms([3.0, 4.0]) == pytest.approx(math.sqrt(12.5))
    assert mt.rms([0, 0, 0]) == 0.0
    assert mt.rms([-2.0]) == 2.0
    with pytest.raises(EmptyInput):
        mt.rms([])


def test_perfect_estimate_gives_zero(rng):
    gt, est = _pair(rng)
    truth = al.SimilarityTransform(0.01, tuple(random_unit_quats(rng, 1)[0]), (5, 6, 7))
    est = al.apply_similarity(truth.inverse(), est)
    rep = mt.evaluate(gt, est)
    assert rep.rms_3d < 1e-9
    assert rep.max_abs_residual < 1e-9


def test_axis_aggregates(rng):
    gt, est = _pair(rng, sigma=(0.5, 1.0, 0.2))
    rep = mt.evaluate(gt, est)
    assert rep.rms_avg == pytest.approx((rep.rms_x + rep.rms_y + rep.rms_z) / 3)
    assert rep.rms_3d == pytest.approx(math.sqrt(rep.rms_x ** 2 + rep.rms_y ** 2 + rep.rms_z ** 2))
    assert rep.max_abs_residual == pytest.approx(np.max(np.abs(rep.residuals)))
    np.testing.assert_allclose(np.sqrt(np.mean(rep.residuals ** 2, axis=0)), [rep.rms_x, rep.rms_y, rep.rms_z])


def test_unregistered_frames_excluded(rng):
    gt, est = _pair(rng, sigma=(0.1, 0.1, 0.1), missing={3, 50, 51})
    rep = mt.evaluate(gt, est)
    assert rep.n_pairs == 197
    assert rep.n_excluded_gt == 3
    assert rep.n_excluded_est == 0
    assert 3 not in rep.frame_keys


def test_compare_sorts_stably(rng):
    gt, est = _pair(rng, sigma=(0.1, 0.1, 0.1))
    a = mt.evaluate(gt, est)
    _, est2 = _pair(np.random.default_rng(7), sigma=(1, 1, 1))
    b = mt.evaluate(gt, est2)
    table = mt.compare([("worse", b), ("good", a), ("good-again", a)])
    assert table.labels() == ["good", "good-again", "worse"]
    assert mt.compare([("worse", b), ("good", a)], sort=False).labels() == ["worse", "good"]
    with pytest.raises(EmptyInput):
        mt.compare([])


def test_serializers(rng):
    gt, est = _pair(rng, n=10, sigma=(0.1, 0.2, 0.3))
    rep = mt.evaluate(gt, est)
    csv_text = mt.reports_csv([("run", rep)])
    header, row = csv_text.strip().split("\n")
    assert header == ",".join(mt.REPORT_COLUMNS)
    assert row.split(",")[0] == "run"
    assert float(row.split(",")[5]) == rep.rms_avg
    res = mt.residuals_csv(rep).strip().split("\n")
    assert res[0] == "frame_key,dx,dy,dz"
    assert len(res) == 11
    text = mt.report_text("run", rep)
    for name in mt.REPORT_COLUMNS[1:]:
        assert f"{name}: " in text
    assert "rms_avg" in mt.report_summary("run", rep) or "avg" in mt.report_summary("run", rep)
