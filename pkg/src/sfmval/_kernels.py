"""Numeric inner loops, compiled with numba when available.

Set ``SFMVAL_DISABLE_NUMBA=1`` to force the pure numpy/Python path.  Both
paths are always importable as ``<name>_py`` and ``<name>_nb`` so tests and
the benchmark can compare them directly; ``<name>`` is the selected one.
"""
from __future__ import annotations

import math
import os
import types

import numpy as np

_DISABLED = os.environ.get("SFMVAL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("disabled by SFMVAL_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# cyclic Jacobi for small dense symmetric matrices
# --------------------------------------------------------------------------
def _jacobi_sym(a_in, tol, max_sweeps):
    """Cyclic Jacobi eigen-decomposition.

    Returns ``(eigenvalues, eigenvectors_as_columns, sweeps)``; ``sweeps`` is
    -1 when the off-diagonal norm is still above ``tol`` after ``max_sweeps``.
    """
    n = a_in.shape[0]
    a = a_in.copy()
    v = np.eye(n)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if math.sqrt(off) <= tol:
            w = np.empty(n)
            for i in range(n):
                w[i] = a[i, i]
            return w, v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, -1


jacobi_sym_py = _jacobi_sym
jacobi_sym_nb = njit(cache=True, nogil=True)(_jacobi_sym) if HAVE_NUMBA else None


# --------------------------------------------------------------------------
# batched rotation matrix -> quaternion (largest-diagonal branch)
# --------------------------------------------------------------------------
def _canonical_sign(w, x, y, z):
    if w > 0.0:
        return 1.0
    if w < 0.0:
        return -1.0
    for c in (x, y, z):
        if c > 0.0:
            return 1.0
        if c < 0.0:
            return -1.0
    return 1.0


def _rotmats_to_quats_loop(rs):
    n = rs.shape[0]
    out = np.empty((n, 4))
    for i in range(n):
        r = rs[i]
        tr = r[0, 0] + r[1, 1] + r[2, 2]
        if tr >= r[0, 0] and tr >= r[1, 1] and tr >= r[2, 2]:
            w = 0.5 * math.sqrt(max(1.0 + tr, 0.0))
            f = 0.25 / w
            x = (r[2, 1] - r[1, 2]) * f
            y = (r[0, 2] - r[2, 0]) * f
            z = (r[1, 0] - r[0, 1]) * f
        elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
            x = 0.5 * math.sqrt(max(1.0 + r[0, 0] - r[1, 1] - r[2, 2], 0.0))
            f = 0.25 / x
            w = (r[2, 1] - r[1, 2]) * f
            y = (r[0, 1] + r[1, 0]) * f
            z = (r[0, 2] + r[2, 0]) * f
        elif r[1, 1] >= r[2, 2]:
            y = 0.5 * math.sqrt(max(1.0 - r[0, 0] + r[1, 1] - r[2, 2], 0.0))
            f = 0.25 / y
            w = (r[0, 2] - r[2, 0]) * f
            x = (r[0, 1] + r[1, 0]) * f
            z = (r[1, 2] + r[2, 1]) * f
        else:
            z = 0.5 * math.sqrt(max(1.0 - r[0, 0] - r[1, 1] + r[2, 2], 0.0))
            f = 0.25 / z
            w = (r[1, 0] - r[0, 1]) * f
            x = (r[0, 2] + r[2, 0]) * f
            y = (r[1, 2] + r[2, 1]) * f
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        sgn = _canonical_sign(w, x, y, z) / norm
        out[i, 0] = w * sgn
        out[i, 1] = x * sgn
        out[i, 2] = y * sgn
        out[i, 3] = z * sgn
    return out


def rotmats_to_quats_py(rs: np.ndarray) -> np.ndarray:
    """Vectorised numpy version of the largest-diagonal case analysis."""
    rs = np.asarray(rs, dtype=float).reshape(-1, 3, 3)
    r00, r11, r22 = rs[:, 0, 0], rs[:, 1, 1], rs[:, 2, 2]
    tr = r00 + r11 + r22
    d21 = rs[:, 2, 1] - rs[:, 1, 2]
    d02 = rs[:, 0, 2] - rs[:, 2, 0]
    d10 = rs[:, 1, 0] - rs[:, 0, 1]
    s01 = rs[:, 0, 1] + rs[:, 1, 0]
    s02 = rs[:, 0, 2] + rs[:, 2, 0]
    s12 = rs[:, 1, 2] + rs[:, 2, 1]

    case_w = (tr >= r00) & (tr >= r11) & (tr >= r22)
    case_x = ~case_w & (r00 >= r11) & (r00 >= r22)
    case_y = ~case_w & ~case_x & (r11 >= r22)
    case_z = ~(case_w | case_x | case_y)

    q = np.empty((rs.shape[0], 4))
    with np.errstate(divide="ignore", invalid="ignore"):
        big = 0.5 * np.sqrt(np.maximum(1.0 + tr, 0.0))
        f = 0.25 / big
        q[case_w] = np.stack([big, d21 * f, d02 * f, d10 * f], axis=1)[case_w]
        big = 0.5 * np.sqrt(np.maximum(1.0 + r00 - r11 - r22, 0.0))
        f = 0.25 / big
        q[case_x] = np.stack([d21 * f, big, s01 * f, s02 * f], axis=1)[case_x]
        big = 0.5 * np.sqrt(np.maximum(1.0 - r00 + r11 - r22, 0.0))
        f = 0.25 / big
        q[case_y] = np.stack([d02 * f, s01 * f, big, s12 * f], axis=1)[case_y]
        big = 0.5 * np.sqrt(np.maximum(1.0 - r00 - r11 + r22, 0.0))
        f = 0.25 / big
        q[case_z] = np.stack([d10 * f, s02 * f, s12 * f, big], axis=1)[case_z]

    norm = np.sqrt(np.sum(q * q, axis=1))
    return canonicalize_quats(q / norm[:, None])


def canonicalize_quats(q: np.ndarray) -> np.ndarray:
    """Flip rows so that w >= 0 (ties: first nonzero of x, y, z positive)."""
    q = np.array(q, dtype=float, copy=True)
    lead = q[:, 0].copy()
    for col in (1, 2, 3):
        zero = lead == 0.0
        lead[zero] = q[zero, col]
    q[lead < 0.0] *= -1.0
    return q


rotmats_to_quats_nb = None
if HAVE_NUMBA:
    _canonical_sign = njit(cache=True, inline="always")(_canonical_sign)
    rotmats_to_quats_nb = njit(cache=True, nogil=True)(_rotmats_to_quats_loop)



# --------------------------------------------------------------------------
# equal-chord marching along a closed planar path
# --------------------------------------------------------------------------
# path table rows: (s_start, length, radius, x0, y0, a, b)
#   radius == 0: line from (x0, y0) along unit direction (a, b)
#   radius > 0: arc about center (x0, y0) starting at angle a, counterclockwise
def _path_eval(table, total, s):
    s = s % total
    k = table.shape[0] - 1
    for i in range(table.shape[0]):
        if s < table[i, 0] + table[i, 1]:
            k = i
            break
    u = s - table[k, 0]
    r = table[k, 2]
    if r == 0.0:
        return table[k, 3] + u * table[k, 5], table[k, 4] + u * table[k, 6], table[k, 5], table[k, 6]
    ang = table[k, 5] + u / r
    c = math.cos(ang)
    sn = math.sin(ang)
    return table[k, 3] + r * c, table[k, 4] + r * sn, -sn, c


def _march_chords(table, total, h, n, tol, max_iter):
    """Arc positions ``s[0..n]`` with ``|P(s[k+1]) - P(s[k])| == h``, starting at 0."""
    out = np.empty(n + 1)
    out[0] = 0.0
    for k in range(n):
        s0 = out[k]
        x0, y0, _, _ = _path_eval(table, total, s0)
        s = s0 + h  # a chord never exceeds its arc
        for _ in range(max_iter):
            x, y, tx, ty = _path_eval(table, total, s)
            dx = x - x0
            dy = y - y0
            d = math.sqrt(dx * dx + dy * dy)
            g = d - h
            if abs(g) <= tol:
                break
            slope = (tx * dx + ty * dy) / d
            if slope < 1e-3:
                slope = 1e-3
            s -= g / slope
        out[k + 1] = s
    return out


path_eval_py = _path_eval
march_chords_py = _march_chords
march_chords_nb = None
if HAVE_NUMBA:
    # same body, but resolving _path_eval to its compiled twin
    _march_globals = dict(globals(), _path_eval=njit(cache=True, inline="always")(_path_eval))
    march_chords_nb = njit(cache=True)(
        types.FunctionType(_march_chords.__code__, _march_globals, "_march_chords_nb")
    )


if USE_NUMBA:
    jacobi_sym = jacobi_sym_nb
    rotmats_to_quats = rotmats_to_quats_nb
    march_chords = march_chords_nb
else:
    jacobi_sym = jacobi_sym_py
    rotmats_to_quats = rotmats_to_quats_py
    march_chords = march_chords_py
