import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfmval import alignment as al
from sfmval import geometry as g
from sfmval import trajio as tio
from sfmval.errors import DegenerateGeometry, NoConvergence, NotSymmetric, TooFewPoints

from conftest import random_unit_quats, rodrigues
from oracles import char_poly, max_eigenvalue_bisection


def _random_transform(rng):
    return al.SimilarityTransform(
        float(rng.uniform(0.1, 10)), tuple(random_unit_quats(rng, 1)[0]), tuple(rng.uniform(-100, 100, 3))
    )


def test_char_poly_oracle_sanity():
    a = np.diag([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(np.roots(char_poly(a)), [4, 3, 2, 1], atol=1e-12)
    assert abs(max_eigenvalue_bisection(a) - 4) < 1e-12
    assert abs(max_eigenvalue_bisection(np.diag([5.0, 5.0, -1.0, 0.0])) - 5) < 1e-7


def test_n_matrix_layout_and_trace(rng):
    m = rng.normal(size=(3, 3))
    n = al.build_n_matrix(m)
    np.testing.assert_array_equal(n, n.T)
    assert abs(np.trace(n)) < 1e-12
    assert n[0, 0] == m[0, 0] + m[1, 1] + m[2, 2]
    assert n[0, 1] == m[1, 2] - m[2, 1]


def test_eig_sym4_against_oracle(rng):
    for _ in range(100):
        a = rng.normal(size=(4, 4))
        a = a + a.T
        lam, v = al.max_eigpair_sym4(a)
        assert abs(lam - max_eigenvalue_bisection(a)) <= 1e-8
        assert np.linalg.norm(a @ v - lam * v) <= 1e-9


def test_eig_sym4_rejects_asymmetric():
    a = np.eye(4)
    a[0, 1] = 1e-3
    with pytest.raises(NotSymmetric):
        al.eig_sym4(a)


def test_eig_sym4_no_convergence(monkeypatch, rng):
    monkeypatch.setattr(al, "JACOBI_MAX_SWEEPS", 0)
    a = rng.normal(size=(4, 4))
    with pytest.raises(NoConvergence):
        al.eig_sym4(a + a.T)


def test_identity_example():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    t = al.horn_align(pts, pts)
    assert t.scale == pytest.approx(1, abs=1e-12)
    np.testing.assert_allclose(t.rotation, [1, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(t.translation, 0, atol=1e-12)


def test_known_quarter_turn_scale_two():
    xs = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], float)
    r = rodrigues((0, 0, 1), math.pi / 2)
    ys = 2 * xs @ r.T + [10, -5, 3]
    t = al.horn_align(xs, ys)
    assert t.scale == pytest.approx(2, rel=1e-12)
    np.testing.assert_allclose(t.rotation, [math.sqrt(0.5), 0, 0, math.sqrt(0.5)], atol=1e-12)
    np.testing.assert_allclose(t.translation, [10, -5, 3], atol=1e-9)


def test_exact_recovery(rng):
    for _ in range(50):
        truth = _random_transform(rng)
        xs = rng.uniform(-50, 50, size=(50, 3))
        est = al.horn_align(xs, truth.apply(xs))
        assert abs(est.scale - truth.scale) / truth.scale <= 1e-9
        assert abs(np.dot(est.rotation, truth.rotation)) >= 1 - 1e-12
        assert np.linalg.norm(np.subtract(est.translation, truth.translation)) <= 1e-6


@pytest.mark.parametrize("method", ["symmetric", "asymmetric"])
def test_scale_methods_agree_without_noise(rng, method):
    truth = _random_transform(rng)
    xs = rng.normal(size=(30, 3))
    assert al.horn_align(xs, truth.apply(xs), scale_method=method).scale == pytest.approx(truth.scale, rel=1e-10)


def test_rigid_mode_fixes_scale(rng):
    xs = rng.normal(size=(20, 3))
    t = al.horn_align(xs, 3 * xs, with_scale=False)
    assert t.scale == 1.0
    np.testing.assert_allclose(t.rotation, [1, 0, 0, 0], atol=1e-12)


def test_degenerate_inputs():
    with pytest.raises(TooFewPoints):
        al.horn_align(np.zeros((2, 3)), np.zeros((2, 3)))
    line = np.outer(np.arange(10.0), [1, 2, 3])
    with pytest.raises(DegenerateGeometry):
        al.horn_align(line, line + 1)
    same = np.ones((5, 3))
    with pytest.raises(DegenerateGeometry):
        al.horn_align(same, same)
    with pytest.raises(ValueError):
        al.horn_align(np.zeros((4, 3)), np.zeros((5, 3)))
    with pytest.raises(ValueError):
        al.horn_align([[0, 0, float("nan")]] * 4, np.zeros((4, 3)))


def test_planar_points_are_fine(rng):
    xs = np.c_[rng.normal(size=(20, 2)), np.zeros(20)]
    truth = _random_transform(rng)
    est = al.horn_align(xs, truth.apply(xs))
    assert abs(np.dot(est.rotation, truth.rotation)) >= 1 - 1e-12


def _grid_rotations(step_deg=3.0):
    # axis-angle grid: a coarse sphere of axes times a fine angle sweep
    axes = []
    for el in np.radians(np.arange(-90, 91, 15)):
        for az in np.radians(np.arange(0, 360, 15)):
            axes.append((math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)))
    for axis in axes:
        for ang in np.radians(np.arange(step_deg, 180.1, step_deg)):
            yield rodrigues(axis, ang)


def _best_cost_for_rotation(r, xs, ys):
    # with rotation fixed, the least-squares scale and translation are closed form
    xc, yc = xs - xs.mean(0), ys - ys.mean(0)
    rx = xc @ r.T
    s = max(np.sum(yc * rx) / np.sum(xc * xc), 1e-12)
    return float(np.sum((yc - s * rx) ** 2))


def test_optimality_against_grid_and_perturbation(rng):
    truth = _random_transform(rng)
    xs = rng.uniform(-10, 10, size=(40, 3))
    ys = truth.apply(xs) + rng.normal(scale=0.5, size=xs.shape)
    est = al.horn_align(xs, ys, scale_method="asymmetric")
    cost = al.residual_sum(est, xs, ys)
    grid_best = min(_best_cost_for_rotation(r, xs, ys) for r in _grid_rotations(6.0))
    assert cost <= grid_best + 1e-9
    r0 = est.rotation_matrix
    for _ in range(300):
        dr = rodrigues(rng.normal(size=3), rng.uniform(1e-4, 1e-2))
        assert cost <= _best_cost_for_rotation(dr @ r0, xs, ys) + 1e-9
    for ds in (1 - 1e-3, 1 + 1e-3):
        t = al.SimilarityTransform(est.scale * ds, est.rotation, est.translation)
        assert cost <= al.residual_sum(t, xs, ys)
    for dt in rng.normal(scale=1e-2, size=(20, 3)):
        t = al.SimilarityTransform(est.scale, est.rotation, tuple(np.add(est.translation, dt)))
        assert cost <= al.residual_sum(t, xs, ys)


def test_transform_algebra(rng):
    a, b = _random_transform(rng), _random_transform(rng)
    pts = rng.normal(size=(10, 3))
    np.testing.assert_allclose(a.compose(b).apply(pts), a.apply(b.apply(pts)), atol=1e-8)
    np.testing.assert_allclose(a.inverse().apply(a.apply(pts)), pts, atol=1e-9)
    assert al.SimilarityTransform.from_line(a.to_line()) == a
    assert a.to_line().startswith("sfmval-transform v1:")
    with pytest.raises(ValueError):
        al.SimilarityTransform(scale=0.0)


def test_apply_similarity_identity_is_bit_exact(rng):
    keys = list(range(1, 11))
    traj = tio.Trajectory.from_arrays(keys, rng.normal(size=(10, 3)), random_unit_quats(rng, 10))
    out = al.apply_similarity(al.SimilarityTransform.identity(), traj)
    np.testing.assert_array_equal(out.positions(), traj.positions())
    np.testing.assert_array_equal(out.orientations(), traj.orientations())


def test_apply_similarity_rotates_orientations(rng):
    traj = tio.Trajectory.from_arrays([1], [[1.0, 0, 0]], [[1.0, 0, 0, 0]])
    t = al.SimilarityTransform(2.0, (math.sqrt(0.5), 0, 0, math.sqrt(0.5)), (0, 0, 1))
    out = al.apply_similarity(t, traj)
    np.testing.assert_allclose(out.positions()[0], [0, 2, 1], atol=1e-15)
    np.testing.assert_allclose(g.quat_to_rotmat(out.orientations()[0]), t.rotation_matrix, atol=1e-15)



@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_recovery_property(seed):
    rng = np.random.default_rng(seed)
    truth = _random_transform(rng)
    xs = rng.uniform(-100, 100, size=(int(rng.integers(3, 60)), 3))
    est = al.horn_align(xs, truth.apply(xs))
    assert abs(est.scale - truth.scale) / truth.scale <= 1e-9
    assert abs(np.dot(est.rotation, truth.rotation)) >= 1 - 1e-12
