"""Rotation representations and conversions.

Quaternions are numpy arrays ordered ``(w, x, y, z)``, the same column order
as COLMAP's ``QW QX QY QZ``.  Rotation matrices are ``(3, 3)`` arrays.  Euler
angles follow the intrinsic X-then-Y-then-Z convention, i.e. the matrix is
``Rz(rz) @ Ry(ry) @ Rx(rx)``.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .errors import NotARotation, ZeroQuaternion

QUAT_EPS = 1e-12
ROTATION_CHECK_TOL = 1e-6

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def _as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have 4 components, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("quaternion has non-finite components")
    return q


def canonicalize_quats(qs) -> np.ndarray:
    """Row-wise :func:`canonicalize_quat` for an ``(n, 4)`` array."""
    return _kernels.canonicalize_quats(np.asarray(qs, dtype=float).reshape(-1, 4))


def quat_norm(q) -> float:
    q = _as_quat(q)
    return math.sqrt(float(q @ q))


def canonicalize_quat(q) -> np.ndarray:
    """Pick the sign of ``q`` with ``w >= 0`` (ties: first nonzero of x, y, z >= 0)."""
    q = np.array(_as_quat(q), copy=True)
    for c in q:
        if c > 0.0:
            return q
        if c < 0.0:
            return -q
    return q


def normalize_quat(q) -> np.ndarray:
    """Unit, canonical version of ``q``."""
    q = _as_quat(q)
    n = quat_norm(q)
    if n <= QUAT_EPS:
        raise ZeroQuaternion(f"quaternion norm {n:.3g} is too small to normalize")
    return canonicalize_quat(q / n)


def quat_conjugate(q) -> np.ndarray:
    q = _as_quat(q)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product ``a * b`` (apply ``b`` first, then ``a``)."""
    aw, ax, ay, az = _as_quat(a)
    bw, bx, by, bz = _as_quat(b)
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quats_multiply(a, bs) -> np.ndarray:
    """``a * b`` for every row ``b`` of ``bs``, canonicalized (unit inputs stay unit)."""
    aw, ax, ay, az = _as_quat(a)
    left = np.array(
        [
            [aw, -ax, -ay, -az],
            [ax, aw, -az, ay],
            [ay, az, aw, -ax],
            [az, -ay, ax, aw],
        ]
    )
    return canonicalize_quats(np.asarray(bs, dtype=float).reshape(-1, 4) @ left.T)


def quats_to_rotmats(qs) -> np.ndarray:
    """Batch conversion of ``(n, 4)`` quaternions (normalized first) to ``(n, 3, 3)``."""
    qs = np.asarray(qs, dtype=float).reshape(-1, 4)
    norms = np.sqrt(np.sum(qs * qs, axis=1))
    if np.any(norms <= QUAT_EPS):
        raise ZeroQuaternion("quaternion norm is too small to normalize")
    w, x, y, z = (qs / norms[:, None]).T
    r = np.empty((qs.shape[0], 3, 3))
    r[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    r[:, 0, 1] = 2.0 * (x * y - w * z)
    r[:, 0, 2] = 2.0 * (x * z + w * y)
    r[:, 1, 0] = 2.0 * (x * y + w * z)
    r[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    r[:, 1, 2] = 2.0 * (y * z - w * x)
    r[:, 2, 0] = 2.0 * (x * z - w * y)
    r[:, 2, 1] = 2.0 * (y * z + w * x)
    r[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return r


def quat_to_rotmat(q) -> np.ndarray:
    """Rotation matrix of the normalized quaternion."""
    return quats_to_rotmats(_as_quat(q)[None, :])[0]


def check_rotation(r, tol: float = ROTATION_CHECK_TOL) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise NotARotation("expected a finite 3x3 matrix")
    err = np.max(np.abs(r.T @ r - np.eye(3)))
    det = np.linalg.det(r)
    if err > tol or abs(det - 1.0) > tol:
        raise NotARotation(f"matrix is not a proper rotation (|RtR - I| = {err:.3g}, det = {det:.6g})")
    return r


def rotmat_to_quat(r) -> np.ndarray:
    """Canonical unit quaternion of a proper rotation matrix."""
    r = check_rotation(r)
    return rotmats_to_quats(r[None])[0]


def rotmats_to_quats(rs) -> np.ndarray:
    """Batch version of :func:`rotmat_to_quat` without the validity check."""
    rs = np.ascontiguousarray(np.asarray(rs, dtype=float).reshape(-1, 3, 3))
    return _kernels.rotmats_to_quats(rs)


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _check_angles(rx, ry, rz):
    if not all(math.isfinite(a) for a in (rx, ry, rz)):
        raise ValueError("Euler angles must be finite")


def euler_xyz_to_rotmat(rx: float, ry: float, rz: float) -> np.ndarray:
    _check_angles(rx, ry, rz)
    return rot_z(rz) @ rot_y(ry) @ rot_x(rx)


def euler_xyz_to_quat(rx: float, ry: float, rz: float) -> np.ndarray:
    """Quaternion of ``Rz(rz) @ Ry(ry) @ Rx(rx)``, canonicalized."""
    _check_angles(rx, ry, rz)
    hx, hy, hz = 0.5 * rx, 0.5 * ry, 0.5 * rz
    qx = np.array([math.cos(hx), math.sin(hx), 0.0, 0.0])
    qy = np.array([math.cos(hy), 0.0, math.sin(hy), 0.0])
    qz = np.array([math.cos(hz), 0.0, 0.0, math.sin(hz)])
    return normalize_quat(quat_multiply(qz, quat_multiply(qy, qx)))


def rotmat_to_euler_xyz(r) -> tuple[float, float, float]:
    """Inverse of :func:`euler_xyz_to_rotmat`.

    ``rz`` is read first, then ``rx`` and ``ry`` come from ``Rz(rz)^T R``, which
    keeps the matrix round trip accurate at and near gimbal lock
    (``|ry| = pi/2``, where only ``rz -/+ rx`` is observable).
    """
    r = check_rotation(r)
    rz = math.atan2(r[1, 0], r[0, 0])
    m = rot_z(rz).T @ r
    rx = math.atan2(-m[1, 2], m[1, 1])
    ry = math.atan2(-m[2, 0], m[0, 0])
    return rx, ry, rz


def camera_center_from_w2c(q, t) -> np.ndarray:
    """Camera center ``C = -R(q)^T t`` for a world-to-camera pose ``(q, t)``."""
    r = quat_to_rotmat(q)
    t = np.asarray(t, dtype=float)
    return -(r.T @ t)
