"""Per-axis RMS errors after similarity alignment, and sorted comparison tables."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .alignment import SimilarityTransform, apply_similarity, horn_align
from .errors import EmptyInput
from .trajio import KeyMode, Trajectory, match_correspondences

REPORT_COLUMNS = ("label", "n_pairs", "rms_x", "rms_y", "rms_z", "rms_avg", "rms_3d", "max_abs_residual")
RESIDUAL_COLUMNS = ("frame_key", "dx", "dy", "dz")


def rms(values) -> float:
    """Root mean square ``sqrt(sum(v_i^2) / n)``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("rms of an empty sequence")
    if not np.all(np.isfinite(v)):
        raise ValueError("rms input contains non-finite values")
    return math.sqrt(float(v @ v) / v.size)


@dataclass(frozen=True)
class AlignmentReport:
    n_pairs: int
    transform: SimilarityTransform
    rms_x: float
    rms_y: float
    rms_z: float
    rms_avg: float
    rms_3d: float
    max_abs_residual: float
    residuals: np.ndarray = field(repr=False, compare=False)
    frame_keys: np.ndarray = field(repr=False, compare=False)
    n_gt: int = 0
    n_est: int = 0

    @property
    def n_excluded_gt(self) -> int:
        """Ground-truth frames without a matching estimate (e.g. unregistered images)."""
        return self.n_gt - self.n_pairs

    @property
    def n_excluded_est(self) -> int:
        return self.n_est - self.n_pairs

    def metric_values(self) -> tuple[float, ...]:
        return (self.rms_x, self.rms_y, self.rms_z, self.rms_avg, self.rms_3d, self.max_abs_residual)


def evaluate(
    gt: Trajectory,
    est: Trajectory,
    key_mode: KeyMode | str = KeyMode.FRAME,
    with_scale: bool = True,
    scale_method: str = "symmetric",
) -> AlignmentReport:
    """Align ``est`` onto ``gt`` by position and measure the residuals in the gt frame."""
    corr = match_correspondences(gt, est, key_mode)
    gi, ei = corr.gt_indices, corr.est_indices
    ys = gt.positions()[gi]
    xs = est.positions()[ei]
    transform = horn_align(xs, ys, with_scale=with_scale, scale_method=scale_method)
    aligned = apply_similarity(transform, est).positions()[ei]
    residuals = ys - aligned
    rx, ry, rz = (rms(residuals[:, k]) for k in range(3))
    return AlignmentReport(
        n_pairs=len(corr),
        transform=transform,
        rms_x=rx,
        rms_y=ry,
        rms_z=rz,
        rms_avg=(rx + ry + rz) / 3.0,
        rms_3d=math.sqrt(float(np.sum(residuals * residuals)) / len(residuals)),
        max_abs_residual=float(np.max(np.abs(residuals))),
        residuals=residuals,
        frame_keys=gt.frame_keys[gi],
        n_gt=len(gt),
        n_est=len(est),
    )


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[tuple[str, AlignmentReport], ...]
    sorted: bool

    def labels(self) -> list[str]:
        return [label for label, _ in self.rows]


def compare(reports: Sequence[tuple[str, AlignmentReport]], sort: bool = True) -> ComparisonTable:
    """Tabulate reports, ascending by ``rms_avg`` when ``sort`` (ties keep input order)."""
    rows = tuple(reports)
    if not rows:
        raise EmptyInput("nothing to compare")
    if sort:
        rows = tuple(sorted(rows, key=lambda row: row[1].rms_avg))
    return ComparisonTable(rows, sort)


# --------------------------------------------------------------------------
# serialisation
# --------------------------------------------------------------------------
def _num(x: float) -> str:
    return format(float(x), ".17g")


def report_row(label: str, report: AlignmentReport) -> list[str]:
    return [label, str(report.n_pairs)] + [_num(v) for v in report.metric_values()]


def reports_csv(rows: Sequence[tuple[str, AlignmentReport]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for label, report in rows:
        writer.writerow(report_row(label, report))
    return buf.getvalue()


def table_csv(table: ComparisonTable) -> str:
    return reports_csv(table.rows)


def residuals_csv(report: AlignmentReport) -> str:
    lines = [",".join(RESIDUAL_COLUMNS)]
    for key, (dx, dy, dz) in zip(report.frame_keys, report.residuals):
        lines.append(f"{int(key)},{_num(dx)},{_num(dy)},{_num(dz)}")
    return "\n".join(lines) + "\n"


def report_text(label: str, report: AlignmentReport) -> str:
    """Structured ``key: value`` document with every report field."""
    t = report.transform
    lines = [
        f"label: {label}",
        f"n_pairs: {report.n_pairs}",
        f"n_gt: {report.n_gt}",
        f"n_est: {report.n_est}",
        f"n_excluded_gt: {report.n_excluded_gt}",
        f"n_excluded_est: {report.n_excluded_est}",
        f"transform: {t.to_line()}",
        f"scale: {_num(t.scale)}",
        "rotation: " + " ".join(_num(v) for v in t.rotation),
        "translation: " + " ".join(_num(v) for v in t.translation),
    ]
    for name, value in zip(REPORT_COLUMNS[2:], report.metric_values()):
        lines.append(f"{name}: {_num(value)}")
    return "\n".join(lines) + "\n"


def report_summary(label: str, report: AlignmentReport) -> str:
    """Short human-readable block for terminals."""
    return (
        f"{label}: {report.n_pairs} pairs ({report.n_excluded_gt} gt frames unmatched), "
        f"scale {report.transform.scale:.6g}\n"
        f"  RMS x {report.rms_x:.4f} m  y {report.rms_y:.4f} m  z {report.rms_z:.4f} m  "
        f"avg {report.rms_avg:.4f} m  3d {report.rms_3d:.4f} m  max|r| {report.max_abs_residual:.4f} m"
    )
