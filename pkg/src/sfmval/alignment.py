"""Closed-form similarity alignment of paired 3D point sets (Horn's quaternion method).

The rotation is the unit eigenvector belonging to the largest eigenvalue of a
symmetric 4x4 matrix assembled from the cross-covariance of the centered
point sets.  Only positions take part in the fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, geometry
from .errors import DegenerateGeometry, NoConvergence, NotSymmetric, TooFewPoints
from .trajio import Trajectory

TRANSFORM_MAGIC = "sfmval-transform v1:"
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-9
DEGENERATE_SV_RATIO = 1e-9
DEGENERATE_SPREAD = 1e-18
SCALE_METHODS = ("symmetric", "asymmetric")


@dataclass(frozen=True)
class SimilarityTransform:
    """``y = scale * R(rotation) @ x + translation``."""

    scale: float = 1.0
    rotation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        q = np.asarray(self.rotation, dtype=float)
        if not (abs(geometry.quat_norm(q) - 1.0) <= 1e-12 and np.array_equal(geometry.canonicalize_quat(q), q)):
            q = geometry.normalize_quat(q)
        object.__setattr__(self, "rotation", tuple(float(v) for v in q))
        t = tuple(float(v) for v in self.translation)
        if len(t) != 3 or not all(math.isfinite(v) for v in t):
            raise ValueError("translation must be 3 finite values")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls()

    @property
    def rotation_matrix(self) -> np.ndarray:
        return geometry.quat_to_rotmat(self.rotation)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.scale * pts @ self.rotation_matrix.T + np.asarray(self.translation)

    def inverse(self) -> "SimilarityTransform":
        r = self.rotation_matrix
        t = -(r.T @ np.asarray(self.translation)) / self.scale
        return SimilarityTransform(1.0 / self.scale, tuple(geometry.quat_conjugate(self.rotation)), tuple(t))

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """``self ∘ other``: apply ``other`` first."""
        q = geometry.quat_multiply(self.rotation, other.rotation)
        t = self.apply(np.asarray(other.translation))
        return SimilarityTransform(self.scale * other.scale, tuple(q), tuple(t))

    def to_line(self) -> str:
        vals = (self.scale, *self.rotation, *self.translation)
        return TRANSFORM_MAGIC + " " + " ".join(format(v, ".17g") for v in vals)

    @classmethod
    def from_line(cls, line: str) -> "SimilarityTransform":
        line = line.strip()
        if not line.startswith(TRANSFORM_MAGIC):
            raise ValueError("not an sfmval-transform v1 line")
        vals = [float(v) for v in line[len(TRANSFORM_MAGIC):].split()]
        if len(vals) != 8:
            raise ValueError(f"expected 8 numbers, found {len(vals)}")
        return cls(vals[0], tuple(vals[1:5]), tuple(vals[5:8]))


def _as_points(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def cross_covariance(xs, ys) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(M, x_mean, y_mean)`` with ``M = sum (x_i - x_mean)(y_i - y_mean)^T``."""
    xs = _as_points(xs, "xs")
    ys = _as_points(ys, "ys")
    if len(xs) != len(ys):
        raise ValueError("point sets must have equal length")
    if len(xs) == 0:
        raise TooFewPoints("need at least one point pair")
    x_mean = xs.mean(axis=0)
    y_mean = ys.mean(axis=0)
    m = (xs - x_mean).T @ (ys - y_mean)
    return m, x_mean, y_mean


def build_n_matrix(m) -> np.ndarray:
    """Symmetric traceless 4x4 matrix whose top eigenvector is the best rotation."""
    m = np.asarray(m, dtype=float)
    (sxx, sxy, sxz), (syx, syy, syz), (szx, szy, szz) = m
    return np.array(
        [
            [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
            [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
            [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
            [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
        ]
    )


def eig_sym4(n) -> tuple[np.ndarray, np.ndarray]:
    """All eigenpairs of a symmetric 4x4 matrix by cyclic Jacobi rotations.

    Eigenvectors are the columns of the second result.  The sweep loop stops
    once the off-diagonal Frobenius norm falls to ``1e-13 * max(1, ||N||_F)``.
    """
    n = np.asarray(n, dtype=float)
    if n.shape != (4, 4) or not np.all(np.isfinite(n)):
        raise ValueError("expected a finite 4x4 matrix")
    scale = max(1.0, float(np.linalg.norm(n)))
    asym = float(np.max(np.abs(n - n.T)))
    if asym > SYMMETRY_TOL * scale:
        raise NotSymmetric(f"matrix asymmetry {asym:.3g} exceeds tolerance")
    sym = np.ascontiguousarray(0.5 * (n + n.T))
    w, v, sweeps = _kernels.jacobi_sym(sym, JACOBI_TOL * scale, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    return w, v


def max_eigpair_sym4(n) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and its unit eigenvector (sign chosen with first nonzero entry >= 0)."""
    w, v = eig_sym4(n)
    k = int(np.argmax(w))
    vec = v[:, k] / np.linalg.norm(v[:, k])
    return float(w[k]), geometry.canonicalize_quat(vec)


def horn_align(xs, ys, with_scale: bool = True, scale_method: str = "symmetric") -> SimilarityTransform:
    """Similarity ``(s, q, t)`` minimising ``sum ||y_i - (s R(q) x_i + t)||^2``.

    ``xs`` live in the estimate frame and ``ys`` in the ground-truth frame.
    ``scale_method="symmetric"`` uses ``s = sqrt(sum|y'|^2 / sum|x'|^2)``,
    which does not depend on the rotation; ``"asymmetric"`` uses the least
    squares ``s = sum y'.(R x') / sum|x'|^2``.
    """
    if scale_method not in SCALE_METHODS:
        raise ValueError(f"scale_method must be one of {SCALE_METHODS}")
    xs = _as_points(xs, "xs")
    ys = _as_points(ys, "ys")
    if len(xs) != len(ys):
        raise ValueError("point sets must have equal length")
    if len(xs) < 3:
        raise TooFewPoints(f"need at least 3 point pairs, got {len(xs)}")

    m, x_mean, y_mean = cross_covariance(xs, ys)
    xc = xs - x_mean
    yc = ys - y_mean
    spread_x = float(np.sum(xc * xc))
    if spread_x <= DEGENERATE_SPREAD:
        raise DegenerateGeometry("estimate points are coincident")
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0 or sv[1] < DEGENERATE_SV_RATIO * sv[0]:
        raise DegenerateGeometry("points are collinear; rotation about their line is unobservable")

    _, q = max_eigpair_sym4(build_n_matrix(m))
    r = geometry.quat_to_rotmat(q)
    if not with_scale:
        s = 1.0
    elif scale_method == "symmetric":
        s = math.sqrt(float(np.sum(yc * yc)) / spread_x)
    else:
        s = float(np.sum(yc * (xc @ r.T))) / spread_x
        if s <= 0.0:
            raise DegenerateGeometry("least-squares scale is not positive")
    t = y_mean - s * (r @ x_mean)
    return SimilarityTransform(s, tuple(q), tuple(t))


def residual_sum(transform: SimilarityTransform, xs, ys) -> float:
    d = np.asarray(ys, dtype=float) - transform.apply(xs)
    return float(np.sum(d * d))


def apply_similarity(
    transform: SimilarityTransform, traj: Trajectory, frame_label: str | None = None
) -> Trajectory:
    """Map positions by ``p -> s R p + t`` and left-compose orientations with the rotation."""
    if not traj.samples:
        return traj
    positions = transform.apply(traj.positions())
    orientations = geometry.quats_multiply(transform.rotation, traj.orientations())
    label = frame_label if frame_label is not None else f"{traj.frame_label}+similarity"
    return traj.replace_poses(positions, orientations, frame_label=label)
