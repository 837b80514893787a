"""Ground-truth geotagging: local meters -> WGS84 -> JPEG EXIF GPS tags.

Coordinates are placed on an equirectangular tangent plane around a
:class:`GeoRef` anchor.  Signs are carried by the hemisphere reference tags
(N/S, E/W, altitude ref byte), never by negative rationals; the reader
nevertheless accepts negative rationals written by sloppy tools.

The EXIF writer keeps every non-GPS entry of an existing APP1 segment
(IFD0, Exif sub-IFD, interoperability IFD and the IFD1 thumbnail), replaces
the GPS IFD and copies all other JPEG segments and the entropy-coded scan
verbatim.  Offsets inside vendor MakerNote blobs are not relocated.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._fileio import atomic_write_bytes
from .errors import (
    CorruptExifSegment,
    LatitudeOutOfRange,
    NotAJpeg,
    OutOfRange,
    SegmentOverflow,
)
from .trajio import Trajectory

log = logging.getLogger(__name__)

EARTH_RADIUS = 6378137.0
SECONDS_DENOMINATOR = 10000
ALTITUDE_DENOMINATOR = 1000
DEFAULT_ANCHOR = (47.3769, 8.5417, 408.0)
DEFAULT_PATTERN = "frame_%04d.jpg"


# --------------------------------------------------------------------------
# local tangent plane
# --------------------------------------------------------------------------
_AXES = {"x": 0, "y": 1, "z": 2}


def _axis_matrix(axis_map: Sequence[str]) -> np.ndarray:
    if len(axis_map) != 3:
        raise ValueError("axis_map needs three entries (east, north, up)")
    m = np.zeros((3, 3))
    used = set()
    for row, token in enumerate(axis_map):
        token = token.strip().lower()
        sign = -1.0 if token.startswith("-") else 1.0
        name = token.lstrip("+-")
        if name not in _AXES or name in used:
            raise ValueError(f"bad axis_map entry {token!r}")
        used.add(name)
        m[row, _AXES[name]] = sign
    return m


@dataclass(frozen=True)
class GeoRef:
    """Anchor of the local frame: local origin sits at ``(lat0, lon0, alt0)``.

    ``axis_map`` names the local axis (optionally negated) that points east,
    north and up, e.g. ``("x", "y", "z")`` or ``("-y", "x", "z")``.
    """

    lat0: float = DEFAULT_ANCHOR[0]
    lon0: float = DEFAULT_ANCHOR[1]
    alt0: float = DEFAULT_ANCHOR[2]
    axis_map: tuple[str, str, str] = ("x", "y", "z")

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.lat0, self.lon0, self.alt0)):
            raise ValueError("GeoRef values must be finite")
        if not abs(self.lat0) < 89.9:
            raise ValueError("lat0 must satisfy |lat0| < 89.9 for the tangent plane")
        if not -180.0 <= self.lon0 <= 180.0:
            raise ValueError("lon0 must lie in [-180, 180]")
        _axis_matrix(self.axis_map)

    @property
    def enu_matrix(self) -> np.ndarray:
        return _axis_matrix(self.axis_map)


@dataclass(frozen=True)
class GpsFix:
    lat: float
    lon: float
    alt: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.lat, self.lon, self.alt)):
            raise ValueError("GpsFix values must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise LatitudeOutOfRange(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise OutOfRange(f"longitude {self.lon} outside [-180, 180]")


def _wrap_lon(lon: float) -> float:
    if -180.0 <= lon <= 180.0:
        return lon
    return (lon + 180.0) % 360.0 - 180.0


def local_to_wgs84(p, g: GeoRef) -> GpsFix:
    east, north, up = g.enu_matrix @ np.asarray(p, dtype=float)
    lat = g.lat0 + math.degrees(north / EARTH_RADIUS)
    if not -90.0 <= lat <= 90.0:
        raise LatitudeOutOfRange(f"point maps to latitude {lat:.6f}")
    lon = g.lon0 + math.degrees(east / (EARTH_RADIUS * math.cos(math.radians(g.lat0))))
    return GpsFix(lat, _wrap_lon(lon), g.alt0 + up)


def wgs84_to_local(fix: GpsFix, g: GeoRef) -> np.ndarray:
    """Inverse of :func:`local_to_wgs84` on the tangent plane."""
    north = math.radians(fix.lat - g.lat0) * EARTH_RADIUS
    dlon = (fix.lon - g.lon0 + 180.0) % 360.0 - 180.0
    east = math.radians(dlon) * EARTH_RADIUS * math.cos(math.radians(g.lat0))
    enu = np.array([east, north, fix.alt - g.alt0])
    return g.enu_matrix.T @ enu


# --------------------------------------------------------------------------
# degrees / minutes / seconds
# --------------------------------------------------------------------------
class Axis(str, enum.Enum):
    LAT = "lat"
    LON = "lon"


_LIMIT = {Axis.LAT: 90.0, Axis.LON: 180.0}
_HEMI = {Axis.LAT: ("N", "S"), Axis.LON: ("E", "W")}


@dataclass(frozen=True)
class DmsRational:
    degrees: int
    minutes: int
    seconds_num: int
    seconds_den: int = SECONDS_DENOMINATOR
    hemisphere: str = "N"

    @property
    def seconds(self) -> float:
        return self.seconds_num / self.seconds_den


def dms_encode(decimal_degrees: float, axis: Axis | str) -> DmsRational:
    """Split a signed angle into whole degrees, whole minutes and 1/10000 arc-seconds."""
    axis = Axis(axis)
    d = float(decimal_degrees)
    if not math.isfinite(d) or abs(d) > _LIMIT[axis]:
        raise OutOfRange(f"{d} outside +-{_LIMIT[axis]} for {axis.value}")
    hemi = _HEMI[axis][0] if d >= 0.0 else _HEMI[axis][1]
    # integer ten-thousandths of an arc-second; carries propagate through divmod
    units = round(abs(d) * 3600.0 * SECONDS_DENOMINATOR)
    deg, rem = divmod(units, 3600 * SECONDS_DENOMINATOR)
    minutes, sec = divmod(rem, 60 * SECONDS_DENOMINATOR)
    return DmsRational(int(deg), int(minutes), int(sec), SECONDS_DENOMINATOR, hemi)


def dms_decode(dms: DmsRational) -> float:
    """Signed decimal degrees; S and W give negative values."""
    if dms.seconds_den == 0:
        raise OutOfRange("zero seconds denominator")
    mag = dms.degrees + dms.minutes / 60.0 + dms.seconds_num / dms.seconds_den / 3600.0
    return -mag if dms.hemisphere.upper() in ("S", "W") else mag


# --------------------------------------------------------------------------
# JPEG segment handling
# --------------------------------------------------------------------------
EXIF_HEADER = b"Exif\x00\x00"
_STANDALONE = {0x01, *range(0xD0, 0xD8)}


@dataclass
class _Jpeg:
    segments: list[tuple[int, bytes]]  # (marker, full raw segment bytes)
    tail: bytes  # from SOS (or EOI) to end of file, copied verbatim


def _split_jpeg(data: bytes) -> _Jpeg:
    if len(data) < 4 or data[:2] != b"\xff\xd8":
        raise NotAJpeg("missing SOI marker")
    pos = 2
    segments: list[tuple[int, bytes]] = []
    while True:
        if pos >= len(data):
            raise NotAJpeg("no SOS/EOI marker before end of file")
        if data[pos] != 0xFF:
            raise NotAJpeg(f"expected marker at byte {pos}")
        start = pos
        while pos < len(data) and data[pos] == 0xFF:
            pos += 1
        if pos >= len(data):
            raise NotAJpeg("truncated marker")
        marker = data[pos]
        pos += 1
        if marker in (0xDA, 0xD9):
            return _Jpeg(segments, data[start:])
        if marker in _STANDALONE:
            segments.append((marker, data[start:pos]))
            continue
        if pos + 2 > len(data):
            raise NotAJpeg("truncated segment length")
        (length,) = struct.unpack(">H", data[pos:pos + 2])
        if length < 2 or pos + length > len(data):
            raise NotAJpeg(f"segment 0x{marker:02X} overruns the file")
        segments.append((marker, data[start:pos + length]))
        pos += length


def _segment_payload(raw: bytes) -> bytes:
    i = 0
    while raw[i] == 0xFF:
        i += 1
    return raw[i + 3:]


def _find_exif(jpeg: _Jpeg) -> int | None:
    for i, (marker, raw) in enumerate(jpeg.segments):
        if marker == 0xE1 and _segment_payload(raw).startswith(EXIF_HEADER):
            return i
    return None


# --------------------------------------------------------------------------
# TIFF / IFD codec
# --------------------------------------------------------------------------
_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8, 13: 4}
BYTE, ASCII, SHORT, LONG, RATIONAL, SRATIONAL = 1, 2, 3, 4, 5, 10
EXIF_IFD, GPS_IFD, INTEROP_IFD = 0x8769, 0x8825, 0xA005
_POINTERS = {EXIF_IFD, GPS_IFD, INTEROP_IFD}
THUMB_OFFSET, THUMB_LENGTH = 0x0201, 0x0202

GPS_VERSION_ID = 0x0000
GPS_LAT_REF, GPS_LAT, GPS_LON_REF, GPS_LON = 0x0001, 0x0002, 0x0003, 0x0004
GPS_ALT_REF, GPS_ALT = 0x0005, 0x0006


@dataclass
class _Entry:
    tag: int
    type: int
    count: int
    data: bytes  # raw value bytes in the file's byte order


@dataclass
class _Ifd:
    entries: dict[int, _Entry] = field(default_factory=dict)
    children: dict[int, "_Ifd"] = field(default_factory=dict)


@dataclass
class _Tiff:
    order: str  # struct prefix, '<' or '>'
    ifd0: _Ifd
    ifd1: _Ifd | None = None
    thumbnail: bytes | None = None


def _parse_tiff(buf: bytes) -> _Tiff:
    if len(buf) < 8:
        raise CorruptExifSegment("TIFF header truncated")
    if buf[:2] == b"II":
        order = "<"
    elif buf[:2] == b"MM":
        order = ">"
    else:
        raise CorruptExifSegment("bad TIFF byte-order mark")
    magic, ifd0_off = struct.unpack(order + "HI", buf[2:8])
    if magic != 42:
        raise CorruptExifSegment("bad TIFF magic")
    seen: set[int] = set()

    def read_ifd(off: int) -> tuple[_Ifd, int]:
        if off in seen or off < 8 or off + 2 > len(buf):
            raise CorruptExifSegment(f"invalid IFD offset {off}")
        seen.add(off)
        (n,) = struct.unpack(order + "H", buf[off:off + 2])
        end = off + 2 + 12 * n
        if end + 4 > len(buf):
            raise CorruptExifSegment("IFD runs past segment end")
        ifd = _Ifd()
        for k in range(n):
            e = off + 2 + 12 * k
            tag, typ, count = struct.unpack(order + "HHI", buf[e:e + 8])
            size = _TYPE_SIZES.get(typ)
            if size is None:
                log.warning("dropping EXIF tag 0x%04X with unknown type %d", tag, typ)
                continue
            nbytes = size * count
            if nbytes <= 4:
                data = buf[e + 8:e + 8 + nbytes]
            else:
                (voff,) = struct.unpack(order + "I", buf[e + 8:e + 12])
                if voff + nbytes > len(buf):
                    raise CorruptExifSegment(f"tag 0x{tag:04X} value runs past segment end")
                data = buf[voff:voff + nbytes]
            if tag in _POINTERS and typ in (LONG, 13) and count == 1:
                (child_off,) = struct.unpack(order + "I", data)
                ifd.children[tag], _ = read_ifd(child_off)
            else:
                ifd.entries[tag] = _Entry(tag, typ, count, bytes(data))
        (next_off,) = struct.unpack(order + "I", buf[end:end + 4])
        return ifd, next_off

    ifd0, next_off = read_ifd(ifd0_off)
    tiff = _Tiff(order, ifd0)
    if next_off:
        tiff.ifd1, _ = read_ifd(next_off)
        off_e = tiff.ifd1.entries.get(THUMB_OFFSET)
        len_e = tiff.ifd1.entries.get(THUMB_LENGTH)
        if off_e is not None and len_e is not None:
            t_off = _entry_ints(off_e, order)[0]
            t_len = _entry_ints(len_e, order)[0]
            if t_off + t_len > len(buf):
                raise CorruptExifSegment("thumbnail runs past segment end")
            tiff.thumbnail = buf[t_off:t_off + t_len]
    return tiff


def _entry_ints(entry: _Entry, order: str) -> list[int]:
    code = {BYTE: "B", SHORT: "H", LONG: "I", 13: "I"}.get(entry.type)
    if code is None:
        raise CorruptExifSegment(f"tag 0x{entry.tag:04X} is not an integer type")
    return list(struct.unpack(f"{order}{entry.count}{code}", entry.data))


def _serialize_tiff(tiff: _Tiff) -> bytes:
    order = tiff.order
    out = bytearray(b"II" if order == "<" else b"MM")
    out += struct.pack(order + "HI", 42, 8)

    def pad():
        if len(out) % 2:
            out.append(0)

    def write_ifd(ifd: _Ifd, thumbnail: bytes | None = None) -> tuple[int, int]:
        """Emit ``ifd``; returns (offset, position of its next-IFD field)."""
        pad()
        start = len(out)
        entries = dict(ifd.entries)
        for tag in ifd.children:
            entries[tag] = _Entry(tag, LONG, 1, b"\x00\x00\x00\x00")
        if thumbnail is not None:
            entries[THUMB_OFFSET] = _Entry(THUMB_OFFSET, LONG, 1, b"\x00\x00\x00\x00")
            entries[THUMB_LENGTH] = _Entry(THUMB_LENGTH, LONG, 1, struct.pack(order + "I", len(thumbnail)))
        tags = sorted(entries)
        out.extend(struct.pack(order + "H", len(tags)))
        slots = {}
        for tag in tags:
            slots[tag] = len(out)
            e = entries[tag]
            out.extend(struct.pack(order + "HHI", e.tag, e.type, e.count))
            out.extend(b"\x00\x00\x00\x00")
        next_pos = len(out)
        out.extend(b"\x00\x00\x00\x00")
        for tag in tags:
            e = entries[tag]
            if len(e.data) <= 4:
                out[slots[tag] + 8:slots[tag] + 8 + len(e.data)] = e.data
            else:
                pad()
                struct.pack_into(order + "I", out, slots[tag] + 8, len(out))
                out.extend(e.data)
        for tag in sorted(ifd.children):
            child_off, _ = write_ifd(ifd.children[tag])
            struct.pack_into(order + "I", out, slots[tag] + 8, child_off)
        if thumbnail is not None:
            pad()
            struct.pack_into(order + "I", out, slots[THUMB_OFFSET] + 8, len(out))
            out.extend(thumbnail)
        return start, next_pos

    _, next_pos = write_ifd(tiff.ifd0)
    if tiff.ifd1 is not None:
        ifd1 = _Ifd(
            {t: e for t, e in tiff.ifd1.entries.items() if t not in (THUMB_OFFSET, THUMB_LENGTH)},
            tiff.ifd1.children,
        )
        off1, _ = write_ifd(ifd1, tiff.thumbnail)
        struct.pack_into(order + "I", out, next_pos, off1)
    return bytes(out)


def _gps_ifd(fix: GpsFix, order: str) -> _Ifd:
    def rationals(values):
        flat = [v for pair in values for v in pair]
        return struct.pack(f"{order}{len(flat)}I", *flat)

    lat = dms_encode(fix.lat, Axis.LAT)
    lon = dms_encode(fix.lon, Axis.LON)
    alt_units = round(abs(fix.alt) * ALTITUDE_DENOMINATOR)
    if alt_units > 0xFFFFFFFF:
        raise OutOfRange(f"altitude {fix.alt} too large for a RATIONAL")
    ifd = _Ifd()
    ifd.entries[GPS_VERSION_ID] = _Entry(GPS_VERSION_ID, BYTE, 4, bytes([2, 3, 0, 0]))
    for ref_tag, val_tag, dms in ((GPS_LAT_REF, GPS_LAT, lat), (GPS_LON_REF, GPS_LON, lon)):
        ifd.entries[ref_tag] = _Entry(ref_tag, ASCII, 2, dms.hemisphere.encode() + b"\x00")
        data = rationals([(dms.degrees, 1), (dms.minutes, 1), (dms.seconds_num, dms.seconds_den)])
        ifd.entries[val_tag] = _Entry(val_tag, RATIONAL, 3, data)
    below = fix.alt < 0.0 and alt_units > 0
    ifd.entries[GPS_ALT_REF] = _Entry(GPS_ALT_REF, BYTE, 1, bytes([1 if below else 0]))
    ifd.entries[GPS_ALT] = _Entry(GPS_ALT, RATIONAL, 1, rationals([(alt_units, ALTITUDE_DENOMINATOR)]))
    return ifd


def write_gps_exif(jpeg: bytes, fix: GpsFix, byte_order: str = "little") -> bytes:
    """Return ``jpeg`` with its GPS IFD replaced by ``fix``.

    ``byte_order`` ("little"/"big") applies only when the image has no EXIF
    segment yet; an existing segment keeps its own byte order.
    """
    if byte_order not in ("little", "big"):
        raise ValueError("byte_order must be 'little' or 'big'")
    parsed = _split_jpeg(bytes(jpeg))
    idx = _find_exif(parsed)
    if idx is not None:
        tiff = _parse_tiff(_segment_payload(parsed.segments[idx][1])[len(EXIF_HEADER):])
    else:
        tiff = _Tiff("<" if byte_order == "little" else ">", _Ifd())
    tiff.ifd0.children[GPS_IFD] = _gps_ifd(fix, tiff.order)
    payload = EXIF_HEADER + _serialize_tiff(tiff)
    if len(payload) > 65533:
        raise SegmentOverflow(f"EXIF payload of {len(payload)} bytes exceeds 65533")
    segment = b"\xff\xe1" + struct.pack(">H", len(payload) + 2) + payload

    segments = [raw for _, raw in parsed.segments]
    if idx is not None:
        segments[idx] = segment
    else:
        insert_at = 1 if parsed.segments and parsed.segments[0][0] == 0xE0 else 0
        segments.insert(insert_at, segment)
    return b"\xff\xd8" + b"".join(segments) + parsed.tail


def _read_rationals(entry: _Entry, order: str) -> list[tuple[int, int]]:
    if entry.type not in (RATIONAL, SRATIONAL):
        raise CorruptExifSegment(f"tag 0x{entry.tag:04X} is not a rational")
    code = "i" if entry.type == SRATIONAL else "I"
    vals = struct.unpack(f"{order}{2 * entry.count}{code}", entry.data)
    pairs = []
    for num, den in zip(vals[::2], vals[1::2]):
        # unsigned fields with the top bit set come from writers that stored signed values
        if entry.type == RATIONAL and num >= 1 << 31:
            num -= 1 << 32
        if entry.type == RATIONAL and den >= 1 << 31:
            den -= 1 << 32
        if den == 0:
            raise CorruptExifSegment(f"zero denominator in tag 0x{entry.tag:04X}")
        pairs.append((num, den))
    return pairs


def _read_ref(entry: _Entry | None) -> str:
    if entry is None:
        return ""
    return entry.data.split(b"\x00", 1)[0].decode("ascii", "replace").strip().upper()


def _signed_angle(ref_entry: _Entry | None, val_entry: _Entry, order: str, negative_ref: str) -> float:
    parts = _read_rationals(val_entry, order)
    if not 1 <= len(parts) <= 3:
        raise CorruptExifSegment("GPS coordinate must have 1-3 rationals")
    values = [n / d for n, d in parts]
    raw_sign = -1.0 if any(v < 0 for v in values) else 1.0
    mag = sum(abs(v) / 60.0**k for k, v in enumerate(values))
    ref_sign = -1.0 if _read_ref(ref_entry) == negative_ref else 1.0
    if raw_sign < 0:
        log.warning("negative GPS rational combined with ref %r", _read_ref(ref_entry))
    return raw_sign * ref_sign * mag


def read_gps_exif(jpeg: bytes) -> GpsFix | None:
    """GPS position stored in the image, or ``None`` when there is none."""
    parsed = _split_jpeg(bytes(jpeg))
    idx = _find_exif(parsed)
    if idx is None:
        return None
    tiff = _parse_tiff(_segment_payload(parsed.segments[idx][1])[len(EXIF_HEADER):])
    gps = tiff.ifd0.children.get(GPS_IFD)
    if gps is None or GPS_LAT not in gps.entries or GPS_LON not in gps.entries:
        return None
    e = gps.entries
    lat = _signed_angle(e.get(GPS_LAT_REF), e[GPS_LAT], tiff.order, "S")
    lon = _signed_angle(e.get(GPS_LON_REF), e[GPS_LON], tiff.order, "W")
    alt = 0.0
    if GPS_ALT in e:
        (num, den), *_ = _read_rationals(e[GPS_ALT], tiff.order)
        alt = num / den
        ref = e.get(GPS_ALT_REF)
        if ref is not None and ref.data[:1] == b"\x01":
            alt = -alt
    return GpsFix(lat, lon, alt)


def exif_byte_order(jpeg: bytes) -> str | None:
    """``"little"``/``"big"`` for the image's EXIF TIFF header, ``None`` without EXIF."""
    parsed = _split_jpeg(bytes(jpeg))
    idx = _find_exif(parsed)
    if idx is None:
        return None
    mark = _segment_payload(parsed.segments[idx][1])[len(EXIF_HEADER):len(EXIF_HEADER) + 2]
    return {b"II": "little", b"MM": "big"}.get(mark)


def scan_bytes(jpeg: bytes) -> bytes:
    """Everything from the SOS marker on (entropy-coded data and EOI)."""
    return _split_jpeg(bytes(jpeg)).tail


# --------------------------------------------------------------------------
# directory batch
# --------------------------------------------------------------------------
GEOTAG_COLUMNS = ("frame_key", "filename", "status", "detail")


@dataclass(frozen=True)
class GeotagEntry:
    frame_key: int
    filename: str
    status: str  # written | missing | failed
    detail: str = ""


@dataclass(frozen=True)
class GeotagReport:
    entries: tuple[GeotagEntry, ...]

    def by_status(self, status: str) -> list[GeotagEntry]:
        return [e for e in self.entries if e.status == status]

    @property
    def written(self) -> list[GeotagEntry]:
        return self.by_status("written")

    @property
    def missing(self) -> list[GeotagEntry]:
        return self.by_status("missing")

    @property
    def failed(self) -> list[GeotagEntry]:
        return self.by_status("failed")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(GEOTAG_COLUMNS)
        for e in self.entries:
            writer.writerow([e.frame_key, e.filename, e.status, e.detail])
        return buf.getvalue()


def _geotag_one(path: Path, key: int, fix: GpsFix) -> GeotagEntry:
    if not path.is_file():
        return GeotagEntry(key, path.name, "missing", "image file not found")
    try:
        data = path.read_bytes()
        atomic_write_bytes(path, write_gps_exif(data, fix))
    except (OSError, NotAJpeg, CorruptExifSegment, SegmentOverflow, OutOfRange) as exc:
        return GeotagEntry(key, path.name, "failed", f"{type(exc).__name__}: {exc}")
    return GeotagEntry(key, path.name, "written", f"{fix.lat:.9f} {fix.lon:.9f} {fix.alt:.3f}")


def geotag_trajectory(
    image_dir: str | os.PathLike,
    traj: Trajectory,
    georef: GeoRef,
    name_pattern: str = DEFAULT_PATTERN,
    workers: int = 1,
) -> GeotagReport:
    """Write the GPS fix of every trajectory frame into ``image_dir/<pattern % frame_key>``.

    Per-file problems end up in the report; only a missing directory raises.
    """
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise FileNotFoundError(f"image directory {image_dir} does not exist")
    jobs = []
    for s in traj.samples:
        fix = local_to_wgs84(s.position, georef)
        jobs.append((image_dir / (name_pattern % s.frame_key), s.frame_key, fix))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda job: _geotag_one(*job), jobs))
    else:
        entries = [_geotag_one(*job) for job in jobs]
    entries.sort(key=lambda e: (e.frame_key, e.filename))
    return GeotagReport(tuple(entries))
