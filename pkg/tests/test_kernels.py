import os
import subprocess
import sys

import numpy as np
import pytest

from sfmval import _kernels as k

from conftest import random_unit_quats

needs_numba = pytest.mark.skipif(not k.HAVE_NUMBA, reason="numba not installed or disabled")


def _sym(rng, n=4):
    a = rng.normal(size=(n, n))
    return a + a.T


def test_jacobi_py_matches_numpy_eigh(rng):
    for _ in range(50):
        a = _sym(rng)
        w, v, sweeps = k.jacobi_sym_py(a, 1e-13, 100)
        assert sweeps >= 0
        np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-10)
        np.testing.assert_allclose(a @ v, v * w, atol=1e-10)
        np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-12)


def test_jacobi_reports_nonconvergence(rng):
    a = _sym(rng)
    _, _, sweeps = k.jacobi_sym_py(a, 0.0, 1)
    assert sweeps == -1


@needs_numba
def test_jacobi_paths_agree(rng):
    for _ in range(50):
        a = _sym(rng)
        wp, vp, sp = k.jacobi_sym_py(a, 1e-13, 100)
        wn, vn, sn = k.jacobi_sym_nb(a, 1e-13, 100)
        assert sp == sn
        np.testing.assert_allclose(wn, wp, atol=1e-12)
        np.testing.assert_allclose(vn, vp, atol=1e-12)


@needs_numba
def test_rotmat_paths_agree(rng):
    from sfmval.geometry import quats_to_rotmats

    qs = random_unit_quats(rng, 500)
    rs = np.ascontiguousarray(quats_to_rotmats(qs))
    a = k.rotmats_to_quats_py(rs)
    b = k.rotmats_to_quats_nb(rs)
    np.testing.assert_allclose(a, b, atol=1e-15)
    np.testing.assert_allclose(a, qs, atol=1e-12)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, SFMVAL_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from sfmval import _kernels as k; print(k.backend(), k.jacobi_sym is k.jacobi_sym_py)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["numpy", "True"]


@needs_numba
def test_default_backend_is_numba():
    env = {kk: v for kk, v in os.environ.items() if kk != "SFMVAL_DISABLE_NUMBA"}
    out = subprocess.run(
        [sys.executable, "-c", "from sfmval import _kernels as k; print(k.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numba"


@needs_numba
def test_march_paths_agree():
    from sfmval import synth

    table = synth._path_table(synth._circuit_pieces(100.0, 80.0, 7.0))
    total = float(table[-1, 0] + table[-1, 1])
    a = k.march_chords_py(table, total, total / 500, 500, 1e-11, 50)
    b = k.march_chords_nb(table, total, total / 500, 500, 1e-11, 50)
    np.testing.assert_allclose(a, b, atol=1e-10)
