"""Trajectory containers, file parsers and correspondence matching.

Three on-disk formats are understood:

* COLMAP ``images.txt``: two lines per image, the second being a (possibly
  huge) list of 2D feature observations that is skipped without buffering.
* Blender export CSV with header ``frame,x,y,z,rx,ry,rz``.
* The canonical ``sfmval-trajectory v1`` text format written by this package.

Every sample is stored as camera center plus camera-to-world orientation.
"""
from __future__ import annotations

import contextlib
import csv
import enum
import io
import logging
import math
import os
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, Sequence
from urllib.parse import quote, unquote

import numpy as np

from . import geometry
from ._fileio import atomic_write_bytes
from .errors import (
    DanglingPoseLine,
    DuplicateFrameKey,
    DuplicateImageName,
    EmptyTrajectory,
    LengthMismatch,
    MalformedDocument,
    MalformedPoseLine,
    MalformedRecord,
    NoDigitsInName,
    NonMonotonicFrames,
    NoOverlap,
    SchemaVersionMismatch,
)

log = logging.getLogger(__name__)

CANONICAL_MAGIC = "sfmval-trajectory"
CANONICAL_VERSION = "v1"
BLENDER_HEADER = ("frame", "x", "y", "z", "rx", "ry", "rz")
QUAT_WARN_DEVIATION = 1e-3
MAX_POSE_LINE = 64 * 1024


class Source(str, enum.Enum):
    COLMAP = "ColmapImagesTxt"
    BLENDER = "BlenderExport"
    CANONICAL = "CanonicalJson"
    SYNTHETIC = "Synthetic"


class EulerUnit(str, enum.Enum):
    RADIANS = "radians"
    DEGREES = "degrees"

    @classmethod
    def parse(cls, value: "EulerUnit | str") -> "EulerUnit":
        if isinstance(value, EulerUnit):
            return value
        v = str(value).strip().lower()
        if v in ("rad", "radian", "radians"):
            return cls.RADIANS
        if v in ("deg", "degree", "degrees"):
            return cls.DEGREES
        raise ValueError(f"unknown angle unit {value!r}")


class Convention(str, enum.Enum):
    CAMERA_TO_WORLD = "CameraToWorld"
    WORLD_TO_CAMERA_RESOLVED = "WorldToCamera-resolved"


class KeyMode(str, enum.Enum):
    FRAME = "frame"
    NAME = "name"
    ORDER = "order"


@dataclass(frozen=True)
class PoseSample:
    frame_key: int
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    image_name: str | None = None

    def __post_init__(self):
        if self.frame_key < 0:
            raise ValueError("frame_key must be nonnegative")
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError("position must be finite")


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[PoseSample, ...]
    frame_label: str = ""
    source: Source = Source.SYNTHETIC
    euler_unit: EulerUnit = EulerUnit.RADIANS
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        keys = [s.frame_key for s in self.samples]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise NonMonotonicFrames("frame keys must be strictly increasing")
        if "\n" in self.frame_label or "\r" in self.frame_label:
            raise ValueError("frame_label must be a single line")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def convention(self) -> Convention:
        if self.source is Source.COLMAP:
            return Convention.WORLD_TO_CAMERA_RESOLVED
        return Convention.CAMERA_TO_WORLD

    @property
    def frame_keys(self) -> np.ndarray:
        return np.array([s.frame_key for s in self.samples], dtype=np.int64)

    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.samples], dtype=float).reshape(-1, 3)

    def orientations(self) -> np.ndarray:
        return np.array([s.orientation for s in self.samples], dtype=float).reshape(-1, 4)

    @classmethod
    def from_arrays(
        cls,
        frame_keys: Sequence[int],
        positions,
        orientations,
        image_names: Sequence[str | None] | None = None,
        **meta,
    ) -> "Trajectory":
        positions = np.asarray(positions, dtype=float).reshape(-1, 3)
        orientations = np.asarray(orientations, dtype=float).reshape(-1, 4)
        if image_names is None:
            image_names = [None] * len(positions)
        samples = tuple(
            PoseSample(int(k), tuple(map(float, p)), tuple(map(float, q)), n)
            for k, p, q, n in zip(frame_keys, positions, orientations, image_names)
        )
        return cls(samples, **meta)

    def replace_poses(self, positions, orientations, frame_label: str | None = None) -> "Trajectory":
        """Same keys and names, new pose values."""
        return Trajectory.from_arrays(
            [s.frame_key for s in self.samples],
            positions,
            orientations,
            [s.image_name for s in self.samples],
            frame_label=self.frame_label if frame_label is None else frame_label,
            source=self.source,
            euler_unit=self.euler_unit,
        )


@dataclass(frozen=True)
class CorrespondenceSet:
    pairs: tuple[tuple[int, int], ...]
    key_mode: KeyMode

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def gt_indices(self) -> np.ndarray:
        return np.array([p[0] for p in self.pairs], dtype=np.intp)

    @property
    def est_indices(self) -> np.ndarray:
        return np.array([p[1] for p in self.pairs], dtype=np.intp)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------
_DIGITS = re.compile(r"[0-9]+")


def extract_frame_key(image_name: str) -> int:
    """Last maximal run of ASCII digits in the file stem of ``image_name``.

    >>> extract_frame_key("frame_0042.png")
    42
    >>> extract_frame_key("cam2_shot_0100_v3.png")
    3
    """
    if not image_name:
        raise NoDigitsInName("empty image name")
    base = re.split(r"[/\\]", image_name)[-1]
    stem = os.path.splitext(base)[0]
    runs = _DIGITS.findall(stem)
    if not runs:
        raise NoDigitsInName(f"no digits in image name {image_name!r}")
    return int(runs[-1])


@contextlib.contextmanager
def _binary_source(src) -> Iterator[BinaryIO]:
    if isinstance(src, (str, os.PathLike)):
        with open(src, "rb") as fh:
            yield fh
    elif isinstance(src, (bytes, bytearray, memoryview)):
        yield io.BytesIO(bytes(src))
    else:
        yield src


class _LineScanner:
    """Chunked line reader that can skip arbitrarily long lines in O(chunk) memory."""

    def __init__(self, stream: BinaryIO, chunk_size: int = 1 << 20):
        self._stream = stream
        self._chunk = chunk_size
        self._buf = b""
        self._pos = 0
        self._eof = False
        self.line_no = 0

    def _fill(self) -> bool:
        if self._eof:
            return False
        data = self._stream.read(self._chunk)
        if not data:
            self._eof = True
            return False
        self._buf = self._buf[self._pos:] + data
        self._pos = 0
        return True

    def peek(self) -> int | None:
        while self._pos >= len(self._buf):
            if not self._fill():
                return None
        return self._buf[self._pos]

    def read_line(self, limit: int) -> bytes | None:
        while True:
            idx = self._buf.find(b"\n", self._pos)
            if idx >= 0:
                line = self._buf[self._pos:idx]
                self._pos = idx + 1
                self.line_no += 1
                return line.rstrip(b"\r")
            if len(self._buf) - self._pos > limit:
                raise MalformedPoseLine("pose line exceeds maximum length", self.line_no + 1)
            if not self._fill():
                if self._pos >= len(self._buf):
                    return None
                line = self._buf[self._pos:]
                self._buf, self._pos = b"", 0
                self.line_no += 1
                return line.rstrip(b"\r")

    def skip_line(self) -> bool:
        """Consume one line; False when already at end of input."""
        consumed = False
        while True:
            idx = self._buf.find(b"\n", self._pos)
            if idx >= 0:
                self._pos = idx + 1
                self.line_no += 1
                return True
            consumed = consumed or self._pos < len(self._buf)
            self._buf, self._pos = b"", 0
            if not self._fill():
                if consumed:
                    self.line_no += 1
                return consumed


def _finish(
    keys: list[int],
    names: list[str | None],
    positions: np.ndarray,
    orientations: np.ndarray,
    **meta,
) -> Trajectory:
    order = np.argsort(np.asarray(keys, dtype=np.int64), kind="stable")
    sorted_keys = [keys[i] for i in order]
    for a, b in zip(sorted_keys, sorted_keys[1:]):
        if a == b:
            raise DuplicateFrameKey(f"frame key {a} occurs more than once")
    return Trajectory.from_arrays(
        sorted_keys, positions[order], orientations[order], [names[i] for i in order], **meta
    )


# --------------------------------------------------------------------------
# COLMAP images.txt
# --------------------------------------------------------------------------
def parse_colmap_images(stream, frame_label: str = "colmap-sfm") -> Trajectory:
    """Parse a COLMAP ``images.txt`` into camera centers and camera-to-world rotations.

    Feature-point lines are skipped chunk-wise, so retained memory grows with
    the number of images only.
    """
    names: list[str] = []
    quats: list[tuple[float, float, float, float]] = []
    trans: list[tuple[float, float, float]] = []
    warnings: list[str] = []
    seen: set[str] = set()

    with _binary_source(stream) as fh:
        scanner = _LineScanner(fh)
        while True:
            first = scanner.peek()
            if first is None:
                break
            if first == 0x23:  # '#'
                scanner.skip_line()
                continue
            raw = scanner.read_line(MAX_POSE_LINE)
            if raw is None:
                break
            line_no = scanner.line_no
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise MalformedPoseLine(f"invalid UTF-8 ({exc})", line_no) from None
            if not text.strip():
                continue
            parts = text.split(maxsplit=9)
            if len(parts) != 10:
                raise MalformedPoseLine(f"expected 10 fields, found {len(parts)}", line_no)
            try:
                int(parts[0])
                q = tuple(float(v) for v in parts[1:5])
                t = tuple(float(v) for v in parts[5:8])
                int(parts[8])
            except ValueError:
                raise MalformedPoseLine("non-numeric pose field", line_no) from None
            if not all(math.isfinite(v) for v in q + t):
                raise MalformedPoseLine("non-finite pose field", line_no)
            name = parts[9].strip()
            if name in seen:
                raise DuplicateImageName(f"line {line_no}: image name {name!r} appears twice")
            seen.add(name)
            norm = math.sqrt(sum(v * v for v in q))
            if norm <= geometry.QUAT_EPS:
                raise MalformedPoseLine("zero quaternion", line_no)
            if abs(norm - 1.0) > QUAT_WARN_DEVIATION:
                msg = f"line {line_no}: quaternion norm {norm:.6g} normalized"
                warnings.append(msg)
                log.warning(msg)
            names.append(name)
            quats.append(q)
            trans.append(t)
            if not scanner.skip_line():
                raise DanglingPoseLine("pose line without a following points line", line_no)

    if not names:
        raise EmptyTrajectory("no images found in COLMAP file")

    q_w2c = np.array(quats, dtype=float)
    q_w2c /= np.linalg.norm(q_w2c, axis=1)[:, None]
    t_w2c = np.array(trans, dtype=float)
    r_w2c = geometry.quats_to_rotmats(q_w2c)
    centers = -np.einsum("nji,nj->ni", r_w2c, t_w2c)
    q_c2w = q_w2c * np.array([1.0, -1.0, -1.0, -1.0])
    q_c2w = geometry.canonicalize_quats(q_c2w)
    keys = [extract_frame_key(n) for n in names]
    return _finish(
        keys,
        list(names),
        centers,
        q_c2w,
        frame_label=frame_label,
        source=Source.COLMAP,
        warnings=tuple(warnings),
    )


def write_colmap_images(traj: Trajectory, sink, points_per_image: int = 0, seed: int = 0) -> None:
    """Write ``traj`` as a COLMAP ``images.txt`` (fixture generation).

    ``points_per_image`` dummy ``X Y POINT3D_ID`` triplets are written on each
    points line.
    """
    rng = np.random.default_rng(seed)
    with _binary_sink(sink) as out:
        out.write(b"# Image list with two lines of data per image:\n")
        out.write(b"#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n")
        out.write(b"#   POINTS2D[] as (X, Y, POINT3D_ID)\n")
        for i, s in enumerate(traj.samples, start=1):
            q_w2c = geometry.quat_conjugate(s.orientation)
            r_w2c = geometry.quat_to_rotmat(q_w2c)
            t = -(r_w2c @ np.asarray(s.position))
            name = s.image_name or f"frame_{s.frame_key:04d}.png"
            fields = [str(i)] + [_fmt(v) for v in q_w2c] + [_fmt(v) for v in t] + ["1", name]
            out.write((" ".join(fields) + "\n").encode())
            if points_per_image:
                xy = rng.uniform(0, 1000, size=(points_per_image, 2))
                ids = rng.integers(-1, 10**6, size=points_per_image)
                line = " ".join(f"{x:.2f} {y:.2f} {k}" for (x, y), k in zip(xy, ids))
                out.write(line.encode() + b"\n")
            else:
                out.write(b"\n")


# --------------------------------------------------------------------------
# Blender CSV export
# --------------------------------------------------------------------------
def parse_blender_export(
    stream, unit: EulerUnit | str = EulerUnit.RADIANS, frame_label: str = "blender-world"
) -> Trajectory:
    """Parse the ``frame,x,y,z,rx,ry,rz`` camera export.

    Angles are intrinsic XYZ Euler angles in ``unit``; positions are camera
    centers taken verbatim.
    """
    unit = EulerUnit.parse(unit)
    scale = math.pi / 180.0 if unit is EulerUnit.DEGREES else 1.0
    keys: list[int] = []
    positions: list[tuple[float, float, float]] = []
    quats: list[np.ndarray] = []
    with _binary_source(stream) as fh:
        text = io.TextIOWrapper(fh, encoding="utf-8", newline="")
        try:
            reader = csv.reader(text)
            header = None
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                if header is None:
                    header = tuple(c.strip().lower() for c in row)
                    if header != BLENDER_HEADER:
                        raise MalformedRecord(
                            f"expected header {','.join(BLENDER_HEADER)}", reader.line_num
                        )
                    continue
                if len(row) != 7:
                    raise MalformedRecord(f"expected 7 fields, found {len(row)}", reader.line_num)
                try:
                    frame = int(row[0])
                    vals = [float(v) for v in row[1:]]
                except ValueError:
                    raise MalformedRecord("non-numeric field", reader.line_num) from None
                if frame < 0 or not all(math.isfinite(v) for v in vals):
                    raise MalformedRecord("negative frame or non-finite value", reader.line_num)
                if keys and frame <= keys[-1]:
                    raise NonMonotonicFrames(
                        f"line {reader.line_num}: frame {frame} does not follow {keys[-1]}"
                    )
                keys.append(frame)
                positions.append((vals[0], vals[1], vals[2]))
                quats.append(geometry.euler_xyz_to_quat(vals[3] * scale, vals[4] * scale, vals[5] * scale))
        finally:
            text.detach()
    if not keys:
        raise EmptyTrajectory("Blender export contains no records")
    return Trajectory.from_arrays(
        keys,
        positions,
        np.array(quats),
        frame_label=frame_label,
        source=Source.BLENDER,
        euler_unit=unit,
    )


def write_blender_export(traj: Trajectory, sink, unit: EulerUnit | str = EulerUnit.RADIANS) -> None:
    unit = EulerUnit.parse(unit)
    scale = 180.0 / math.pi if unit is EulerUnit.DEGREES else 1.0
    lines = [",".join(BLENDER_HEADER)]
    for s in traj.samples:
        angles = geometry.rotmat_to_euler_xyz(geometry.quat_to_rotmat(s.orientation))
        vals = list(s.position) + [a * scale for a in angles]
        lines.append(",".join([str(s.frame_key)] + [_fmt(v) for v in vals]))
    with _binary_sink(sink) as out:
        out.write(("\n".join(lines) + "\n").encode())


# --------------------------------------------------------------------------
# canonical format
# --------------------------------------------------------------------------
def _fmt(x: float) -> str:
    return format(float(x), ".17g")


_NAME_SAFE = "!\"#$&'()*+,-./:;<=>?@[\\]^_`{|}~"


def _encode_name(name: str | None) -> str:
    if name is None:
        return "-"
    if name == "-":
        return "%2D"
    return quote(name, safe=_NAME_SAFE)


def _decode_name(token: str) -> str | None:
    return None if token == "-" else unquote(token)


def dumps_canonical(traj: Trajectory) -> str:
    if not traj.samples:
        raise EmptyTrajectory("refusing to write an empty trajectory")
    lines = [
        f"{CANONICAL_MAGIC} {CANONICAL_VERSION}",
        f"@frame_label {traj.frame_label}",
        f"@source {traj.source.value}",
        f"@euler_unit {traj.euler_unit.value}",
    ]
    for s in traj.samples:
        vals = " ".join(_fmt(v) for v in (*s.position, *s.orientation))
        lines.append(f"{s.frame_key} {_encode_name(s.image_name)} {vals}")
    return "\n".join(lines) + "\n"


def write_canonical(traj: Trajectory, sink) -> None:
    """Write ``traj`` to a path (atomically) or a binary stream."""
    data = dumps_canonical(traj).encode("utf-8")
    if isinstance(sink, (str, os.PathLike)):
        atomic_write_bytes(sink, data)
    else:
        sink.write(data)


def loads_canonical(text: str) -> Trajectory:
    lines = text.splitlines()
    if not lines:
        raise MalformedDocument("empty document", 1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != CANONICAL_MAGIC:
        raise MalformedDocument(f"missing '{CANONICAL_MAGIC}' header", 1)
    if head[1] != CANONICAL_VERSION:
        raise SchemaVersionMismatch(f"unsupported canonical version {head[1]!r}")

    meta: dict = {}
    keys: list[int] = []
    names: list[str | None] = []
    poses: list[list[float]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("@"):
            key, _, value = line[1:].partition(" ")
            try:
                if key == "frame_label":
                    meta["frame_label"] = value
                elif key == "source":
                    meta["source"] = Source(value.strip())
                elif key == "euler_unit":
                    meta["euler_unit"] = EulerUnit.parse(value)
            except ValueError:
                raise MalformedDocument(f"bad value for @{key}", line_no) from None
            continue
        parts = line.split()
        if len(parts) < 9:
            raise MalformedDocument(f"expected 9 fields, found {len(parts)}", line_no)
        try:
            key = int(parts[0])
            vals = [float(v) for v in parts[2:9]]
        except ValueError:
            raise MalformedDocument("non-numeric field", line_no) from None
        if key < 0 or not all(math.isfinite(v) for v in vals):
            raise MalformedDocument("negative frame key or non-finite value", line_no)
        q = np.array(vals[3:])
        norm = math.sqrt(float(q @ q))
        if norm <= geometry.QUAT_EPS:
            raise MalformedDocument("zero quaternion", line_no)
        if abs(norm - 1.0) > 1e-12 or not np.array_equal(geometry.canonicalize_quat(q), q):
            vals[3:] = list(geometry.normalize_quat(q))
        if keys and key <= keys[-1]:
            raise NonMonotonicFrames(f"line {line_no}: frame key {key} does not follow {keys[-1]}")
        keys.append(key)
        names.append(_decode_name(parts[1]))
        poses.append(vals)
    if not keys:
        raise EmptyTrajectory("canonical document has no samples")
    arr = np.array(poses, dtype=float)
    return Trajectory.from_arrays(keys, arr[:, :3], arr[:, 3:], names, **meta)


def read_canonical(stream) -> Trajectory:
    with _binary_source(stream) as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedDocument("document is not UTF-8", None) from None
    return loads_canonical(text)


@contextlib.contextmanager
def _binary_sink(sink) -> Iterator[BinaryIO]:
    if isinstance(sink, (str, os.PathLike)):
        buf = io.BytesIO()
        yield buf
        atomic_write_bytes(sink, buf.getvalue())
    else:
        yield sink


# --------------------------------------------------------------------------
# format dispatch
# --------------------------------------------------------------------------
FORMATS = ("auto", "colmap", "blender", "canonical")


def sniff_format(path: str | os.PathLike) -> str:
    with open(path, "rb") as fh:
        head = fh.read(4096)
    for raw in head.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith(CANONICAL_MAGIC.encode()):
            return "canonical"
        if line.replace(b" ", b"").lower().startswith(b"frame,x,y,z"):
            return "blender"
        return "colmap"
    return "colmap"


def load_trajectory(path, fmt: str = "auto", unit: EulerUnit | str = EulerUnit.RADIANS) -> Trajectory:
    if fmt == "auto":
        fmt = sniff_format(path)
    if fmt == "colmap":
        return parse_colmap_images(path)
    if fmt == "blender":
        return parse_blender_export(path, unit)
    if fmt == "canonical":
        return read_canonical(path)
    raise ValueError(f"unknown trajectory format {fmt!r}")


# --------------------------------------------------------------------------
# correspondences
# --------------------------------------------------------------------------
def match_correspondences(
    gt: Trajectory, est: Trajectory, key_mode: KeyMode | str = KeyMode.FRAME
) -> CorrespondenceSet:
    """Pair samples of ``gt`` and ``est``; pairs are sorted by ground-truth index."""
    key_mode = KeyMode(key_mode)
    if not gt.samples or not est.samples:
        raise EmptyTrajectory("both trajectories must be nonempty")
    if key_mode is KeyMode.ORDER:
        if len(gt) != len(est):
            raise LengthMismatch(f"order matching needs equal lengths ({len(gt)} vs {len(est)})")
        pairs = tuple((i, i) for i in range(len(gt)))
    else:
        if key_mode is KeyMode.FRAME:
            gt_keys: Iterable = (s.frame_key for s in gt.samples)
            est_keys: Iterable = (s.frame_key for s in est.samples)
        else:
            gt_keys = (s.image_name for s in gt.samples)
            est_keys = (s.image_name for s in est.samples)
        gt_keys, est_keys = list(gt_keys), list(est_keys)
        for side in (gt_keys, est_keys):
            named = [k for k in side if k is not None]
            if len(named) != len(set(named)):
                raise DuplicateImageName("image names must be unique for name matching")
        lookup = {k: j for j, k in enumerate(est_keys) if k is not None}
        pairs = tuple((i, lookup[k]) for i, k in enumerate(gt_keys) if k is not None and k in lookup)
    if not pairs:
        raise NoOverlap("trajectories share no frames")
    return CorrespondenceSet(pairs, key_mode)
