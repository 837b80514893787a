"""Synthetic ground-truth circuits and perturbed "reconstructions".

Randomness comes from :class:`CounterRng`, a SplitMix64 hash of
``key + counter * golden_gamma`` with Box-Muller normals, so fixture values
depend only on the seed and not on numpy's generator implementation.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels, geometry
from ._fileio import atomic_write_text
from .alignment import SimilarityTransform
from .errors import InvalidParams
from .trajio import Source, Trajectory, write_canonical

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / (1 << 53)

DEFAULT_SEED = 20170601
CHORD_MAX_ROUNDS = 50


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class CounterRng:
    """Counter-based generator: output ``i`` of stream ``s`` is ``mix64(key(seed, s) + i * gamma)``."""

    def __init__(self, seed: int, stream: int = 0):
        with np.errstate(over="ignore"):
            s = _mix64(np.array([stream & MASK64], dtype=np.uint64))
            self._key = _mix64(np.array([seed & MASK64], dtype=np.uint64) ^ s)[0]
        self.counter = 0

    def uint64(self, n: int) -> np.ndarray:
        ctr = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix64(self._key + ctr * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in ``[0, 1)`` with 53 random bits."""
        return (self.uint64(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int) -> np.ndarray:
        """Standard normals by the Box-Muller transform."""
        m = (n + 1) // 2
        bits = self.uint64(2 * m) >> np.uint64(11)
        u1 = (bits[0::2].astype(np.float64) + 1.0) * _INV_2_53  # (0, 1]
        u2 = bits[1::2].astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:n]


# --------------------------------------------------------------------------
# circuit
# --------------------------------------------------------------------------
class OrientationMode(str, enum.Enum):
    FORWARD = "forward"
    SIDEVIEW = "sideview"
    TILTED_SIDEVIEW = "tilted-sideview"


@dataclass(frozen=True)
class CircuitParams:
    extent_x: float = 100.0
    extent_y: float = 100.0
    n_frames: int = 3000
    height: float = 2.0
    orientation_mode: OrientationMode = OrientationMode.FORWARD
    tilt_deg: float = 30.0
    corner_radius: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "orientation_mode", OrientationMode(self.orientation_mode))
        if not (self.extent_x > 0 and self.extent_y > 0):
            raise InvalidParams("extents must be positive")
        if int(self.n_frames) != self.n_frames or self.n_frames < 4:
            raise InvalidParams("n_frames must be an integer >= 4")
        if not 0.0 < self.tilt_deg < 90.0:
            raise InvalidParams("tilt_deg must lie in (0, 90)")
        if not 0.0 <= self.corner_radius <= 0.5 * min(self.extent_x, self.extent_y):
            raise InvalidParams("corner_radius must lie in [0, min(extent)/2]")
        if not math.isfinite(self.height):
            raise InvalidParams("height must be finite")


@dataclass(frozen=True)
class _Piece:
    length: float
    start: tuple[float, float]  # line start, or arc center
    direction: tuple[float, float] = (0.0, 0.0)  # line unit direction
    radius: float = 0.0
    angle0: float = 0.0  # arc start angle, counterclockwise


def _circuit_pieces(ex: float, ey: float, r: float) -> list[_Piece]:
    """Counterclockwise rounded rectangle starting at the middle of the bottom edge."""
    half = math.pi / 2
    pieces = [
        _Piece(ex / 2 - r, (ex / 2, 0.0), (1.0, 0.0)),
        _Piece(half * r, (ex - r, r), radius=r, angle0=-half),
        _Piece(ey - 2 * r, (ex, r), (0.0, 1.0)),
        _Piece(half * r, (ex - r, ey - r), radius=r, angle0=0.0),
        _Piece(ex - 2 * r, (ex - r, ey), (-1.0, 0.0)),
        _Piece(half * r, (r, ey - r), radius=r, angle0=half),
        _Piece(ey - 2 * r, (0.0, ey - r), (0.0, -1.0)),
        _Piece(half * r, (r, r), radius=r, angle0=math.pi),
        _Piece(ex / 2 - r, (r, 0.0), (1.0, 0.0)),
    ]
    return [p for p in pieces if p.length > 0.0]


def circuit_length(params: CircuitParams) -> float:
    r = params.corner_radius
    return 2 * (params.extent_x - 2 * r) + 2 * (params.extent_y - 2 * r) + 2 * math.pi * r


def _path_table(pieces: list[_Piece]) -> np.ndarray:
    rows, s0 = [], 0.0
    for p in pieces:
        if p.radius == 0.0:
            rows.append((s0, p.length, 0.0, *p.start, *p.direction))
        else:
            rows.append((s0, p.length, p.radius, *p.start, p.angle0, 0.0))
        s0 += p.length
    return np.array(rows, dtype=float)


def _equal_chord_stations(table: np.ndarray, total: float, n: int) -> np.ndarray:
    """Arc positions of ``n`` points on the closed path with all ``n`` chords equal.

    The chord ``h`` is adjusted until the ``n``-th step lands back on the start;
    ``s_n(h)`` grows like ``n * h``, so a secant update converges in a few rounds.
    """
    tol = 1e-13 * max(1.0, total)
    h_prev, h = None, total / n
    f_prev = None
    for _ in range(CHORD_MAX_ROUNDS):
        s = _kernels.march_chords(table, total, h, n, tol, 50)
        f = s[n] - total
        if abs(f) <= tol:
            return s[:n]
        if f_prev is None or f == f_prev:
            h_next = h - f / n
        else:
            h_next = h - f * (h - h_prev) / (f - f_prev)
        h_prev, f_prev, h = h, f, h_next
    raise InvalidParams("could not place equally spaced frames on the circuit")


def _sample_path(table: np.ndarray, total: float, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Planar positions and unit tangents at arc lengths ``s``."""
    vals = np.array([_kernels.path_eval_py(table, total, float(v)) for v in s])
    return vals[:, :2], vals[:, 2:]


def _camera_frames(tangent: np.ndarray, mode: OrientationMode, tilt_deg: float) -> np.ndarray:
    """Camera-to-world rotations with columns (right, down, optical axis)."""
    n = len(tangent)
    fwd = np.column_stack([tangent, np.zeros(n)])
    up = np.array([0.0, 0.0, 1.0])
    if mode is OrientationMode.FORWARD:
        axis = fwd
    else:
        left = np.cross(up, fwd)
        if mode is OrientationMode.SIDEVIEW:
            axis = left
        else:
            t = math.radians(tilt_deg)
            axis = math.cos(t) * left + math.sin(t) * up
    right = np.cross(axis, up)
    right /= np.linalg.norm(right, axis=1)[:, None]
    down = np.cross(axis, right)
    return np.stack([right, down, axis], axis=2)


def generate_circuit(params: CircuitParams) -> Trajectory:
    """Closed rounded-rectangle camera path with all consecutive steps equally long.

    Steps are equal as straight-line distances (including the closing step from
    the last frame back to the first), which on the rounded corners is a hair
    shorter than the arc between them.

    Frames are keyed 1..n and named ``frame_%04d.png``.
    """
    table = _path_table(_circuit_pieces(params.extent_x, params.extent_y, params.corner_radius))
    total = circuit_length(params)
    n = int(params.n_frames)
    xy, tangent = _sample_path(table, total, _equal_chord_stations(table, total, n))
    positions = np.column_stack([xy, np.full(n, float(params.height))])
    rots = _camera_frames(tangent, params.orientation_mode, params.tilt_deg)
    quats = geometry.rotmats_to_quats(rots)
    keys = range(1, n + 1)
    return Trajectory.from_arrays(
        list(keys),
        positions,
        quats,
        [f"frame_{k:04d}.png" for k in keys],
        frame_label=f"synthetic-circuit-{params.orientation_mode.value}",
        source=Source.SYNTHETIC,
    )


# --------------------------------------------------------------------------
# perturbation
# --------------------------------------------------------------------------
_STREAM_DRIFT, _STREAM_NOISE, _STREAM_DROPOUT, _STREAM_GAUGE = 1, 2, 3, 4


@dataclass(frozen=True)
class NoiseModel:
    sigma: tuple[float, float, float] = (0.0, 0.0, 0.0)
    drift_step: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gauge: SimilarityTransform | None = None
    dropout: float = 0.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        object.__setattr__(self, "drift_step", tuple(float(v) for v in self.drift_step))
        if len(self.sigma) != 3 or len(self.drift_step) != 3:
            raise InvalidParams("sigma and drift_step need three components")
        if any(not (math.isfinite(v) and v >= 0.0) for v in self.sigma + self.drift_step):
            raise InvalidParams("noise magnitudes must be finite and nonnegative")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidParams("dropout must lie in [0, 1)")


def random_similarity(rng: CounterRng, scale_range=(0.2, 5.0), translation_extent: float = 100.0) -> SimilarityTransform:
    """Log-uniform scale, uniformly random rotation, uniform translation."""
    u = rng.uniform(1)[0]
    lo, hi = scale_range
    scale = math.exp(math.log(lo) + u * (math.log(hi) - math.log(lo)))
    q = geometry.normalize_quat(rng.normal(4))
    t = (rng.uniform(3) * 2.0 - 1.0) * translation_extent
    return SimilarityTransform(scale, tuple(q), tuple(t))


def perturb(traj: Trajectory, model: NoiseModel, frame_label: str = "synthetic-estimate") -> Trajectory:
    """Random-walk drift plus white noise, then the gauge similarity, then dropout."""
    n = len(traj)
    positions = traj.positions()
    orientations = traj.orientations()
    if any(model.drift_step):
        steps = CounterRng(model.seed, _STREAM_DRIFT).normal(3 * n).reshape(n, 3)
        positions = positions + np.cumsum(steps * np.array(model.drift_step), axis=0)
    if any(model.sigma):
        noise = CounterRng(model.seed, _STREAM_NOISE).normal(3 * n).reshape(n, 3)
        positions = positions + noise * np.array(model.sigma)
    if model.gauge is not None:
        positions = model.gauge.apply(positions)
        orientations = geometry.quats_multiply(model.gauge.rotation, orientations)
    out = traj.replace_poses(positions, orientations, frame_label=frame_label)
    if model.dropout > 0.0:
        keep = CounterRng(model.seed, _STREAM_DROPOUT).uniform(n) >= model.dropout
        out = Trajectory(
            tuple(s for s, k in zip(out.samples, keep) if k),
            frame_label=out.frame_label,
            source=out.source,
            euler_unit=out.euler_unit,
        )
    return out


# --------------------------------------------------------------------------
# reference fixture set (six labelled gt/estimate pairs)
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Preset:
    label: str
    mode: OrientationMode
    sigma: tuple[float, float, float]
    drift_step: tuple[float, float, float] = (5e-4, 5e-4, 1e-4)
    dropout: float = 0.003


# Constructed targets, not measurements: tilted sideview best; spatial (GPS) matching
# about 0.2 m worse per planar axis with z unchanged; fewer features help only the
# non-tilted x axis.
REFERENCE_PRESETS: tuple[Preset, ...] = (
    Preset("nontilted-sequential", OrientationMode.SIDEVIEW, (1.00, 1.05, 0.25)),
    Preset("tilted-sequential", OrientationMode.TILTED_SIDEVIEW, (0.85, 0.90, 0.20)),
    Preset("nontilted-spatial-gps", OrientationMode.SIDEVIEW, (1.20, 1.25, 0.25)),
    Preset("tilted-spatial-gps", OrientationMode.TILTED_SIDEVIEW, (1.05, 1.10, 0.20)),
    Preset("nontilted-spatial-gps-fewer", OrientationMode.SIDEVIEW, (0.60, 1.25, 0.25)),
    Preset("tilted-spatial-gps-fewer", OrientationMode.TILTED_SIDEVIEW, (1.10, 1.15, 0.22)),
)

MANIFEST_COLUMNS = ("label", "gt_path", "est_path", "seed")


@dataclass(frozen=True)
class FixturePair:
    label: str
    gt_path: Path
    est_path: Path
    seed: int


def write_manifest(pairs: list[FixturePair], path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_COLUMNS)
    for p in pairs:
        writer.writerow([p.label, p.gt_path.name, p.est_path.name, p.seed])
    atomic_write_text(path, buf.getvalue())


def reference_fixtures(
    out_dir: str | Path,
    seed: int = DEFAULT_SEED,
    n_frames: int = 3000,
    presets: tuple[Preset, ...] = REFERENCE_PRESETS,
) -> list[FixturePair]:
    """Write the six labelled gt/estimate pairs plus ``manifest.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs = []
    for i, preset in enumerate(presets):
        fixture_seed = (seed + i) & MASK64
        params = CircuitParams(n_frames=n_frames, orientation_mode=preset.mode)
        gt = generate_circuit(params)
        gauge = random_similarity(CounterRng(fixture_seed, _STREAM_GAUGE))
        model = NoiseModel(preset.sigma, preset.drift_step, gauge, preset.dropout, fixture_seed)
        est = perturb(gt, model, frame_label=f"{preset.label}-estimate")
        gt_path = out / f"{preset.label}_gt.txt"
        est_path = out / f"{preset.label}_est.txt"
        write_canonical(gt, gt_path)
        write_canonical(est, est_path)
        pairs.append(FixturePair(preset.label, gt_path, est_path, fixture_seed))
    write_manifest(pairs, out / "manifest.csv")
    return pairs
