"""Command line interface: ``sfmval <subcommand> ...``.

Exit codes: 0 success, 1 data/validation error, 2 usage error (bad flags or
missing input paths).  Data goes to the requested files and stdout; logging
and warnings go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import __version__, _kernels
from ._fileio import atomic_write_text
from .alignment import apply_similarity, horn_align
from .errors import EmptyInput, SfmValError
from .geotag import DEFAULT_PATTERN, GeoRef, geotag_trajectory
from .metrics import compare, evaluate, report_summary, report_text, reports_csv, residuals_csv, table_csv
from .synth import (
    DEFAULT_SEED,
    CircuitParams,
    CounterRng,
    FixturePair,
    NoiseModel,
    OrientationMode,
    generate_circuit,
    reference_fixtures,
    perturb,
    random_similarity,
    write_manifest,
)
from .trajio import FORMATS, load_trajectory, match_correspondences, write_canonical

log = logging.getLogger("sfmval")


class UsageError(Exception):
    pass


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} {path!r} does not exist")
    return p


def _default_seed() -> int:
    env = os.environ.get("SFMVAL_SEED")
    if env is None or not env.strip():
        return DEFAULT_SEED
    try:
        return int(env, 0)
    except ValueError:
        raise UsageError(f"SFMVAL_SEED={env!r} is not an integer") from None


def _load(path: str, fmt: str, unit: str, what: str):
    traj = load_trajectory(_existing(path, what), fmt, unit)
    for w in traj.warnings:
        log.warning("%s: %s", path, w)
    return traj


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------
def cmd_convert(args) -> int:
    traj = _load(args.inp, args.format, args.unit, "input")
    write_canonical(traj, args.out)
    print(f"{len(traj)} samples written to {args.out}", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    gt = _load(args.gt, args.gt_format, args.unit, "ground-truth file")
    est = _load(args.est, args.est_format, args.unit, "estimate file")
    report = evaluate(gt, est, args.key, with_scale=not args.no_scale, scale_method=args.scale_method)
    label = args.label or Path(args.est).stem
    if args.report:
        atomic_write_text(args.report, reports_csv([(label, report)]))
    if args.residuals:
        atomic_write_text(args.residuals, residuals_csv(report))
    if args.report_text:
        atomic_write_text(args.report_text, report_text(label, report))
    print(report_summary(label, report))
    return 0


def cmd_align(args) -> int:
    gt = _load(args.gt, args.gt_format, args.unit, "ground-truth file")
    est = _load(args.est, args.est_format, args.unit, "estimate file")
    corr = match_correspondences(gt, est, args.key)
    transform = horn_align(
        est.positions()[corr.est_indices],
        gt.positions()[corr.gt_indices],
        with_scale=not args.no_scale,
        scale_method=args.scale_method,
    )
    if args.out_transform:
        atomic_write_text(args.out_transform, transform.to_line() + "\n")
    if args.out_traj:
        write_canonical(apply_similarity(transform, est, frame_label=gt.frame_label or "aligned"), args.out_traj)
    print(transform.to_line())
    return 0


def cmd_geotag(args) -> int:
    images = Path(args.images)
    if not images.is_dir():
        raise UsageError(f"image directory {args.images!r} does not exist")
    traj = _load(args.traj, args.format, args.unit, "trajectory file")
    georef = GeoRef(args.lat0, args.lon0, args.alt0, tuple(args.axis_map.split(",")))
    report = geotag_trajectory(images, traj, georef, args.pattern, workers=args.workers)
    if args.report:
        atomic_write_text(args.report, report.to_csv())
    print(
        f"written {len(report.written)}, missing {len(report.missing)}, failed {len(report.failed)}",
    )
    for e in report.missing + report.failed:
        print(f"  {e.frame_key} {e.filename}: {e.status} ({e.detail})")
    return 1 if report.failed else 0


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    out = Path(args.out)
    if args.preset == "paper":
        pairs = reference_fixtures(out, seed=seed, n_frames=args.frames)
    else:
        out.mkdir(parents=True, exist_ok=True)
        params = CircuitParams(
            extent_x=args.extent_x,
            extent_y=args.extent_y,
            n_frames=args.frames,
            height=args.height,
            orientation_mode=args.mode,
            tilt_deg=args.tilt,
            corner_radius=args.corner_radius,
        )
        gauge = random_similarity(CounterRng(seed, 4)) if args.gauge else None
        model = NoiseModel(tuple(args.sigma), tuple(args.drift), gauge, args.dropout, seed)
        gt = generate_circuit(params)
        est = perturb(gt, model)
        pair = FixturePair(args.label, out / f"{args.label}_gt.txt", out / f"{args.label}_est.txt", seed)
        write_canonical(gt, pair.gt_path)
        write_canonical(est, pair.est_path)
        pairs = [pair]
        write_manifest(pairs, out / "manifest.csv")
    for p in pairs:
        print(f"{p.label}: {p.gt_path.name} {p.est_path.name} seed={p.seed}")
    return 0


def read_manifest(path: Path) -> list[tuple[str, Path, Path]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"label", "gt_path", "est_path"} - set(reader.fieldnames or ())
        if missing:
            raise EmptyInput(f"manifest lacks columns {sorted(missing)}")
        for row in reader:
            gt = Path(row["gt_path"])
            est = Path(row["est_path"])
            rows.append(
                (row["label"], gt if gt.is_absolute() else path.parent / gt, est if est.is_absolute() else path.parent / est)
            )
    return rows


def cmd_compare(args) -> int:
    manifest = _existing(args.inputs, "manifest")
    entries = read_manifest(manifest)
    if not entries:
        raise EmptyInput("manifest lists no fixtures")
    reports = []
    for label, gt_path, est_path in entries:
        gt = _load(str(gt_path), "auto", args.unit, "ground-truth file")
        est = _load(str(est_path), "auto", args.unit, "estimate file")
        reports.append((label, evaluate(gt, est, args.key, with_scale=not args.no_scale)))
    table = compare(reports, sort=args.sorted)
    if args.out:
        atomic_write_text(args.out, table_csv(table))
    print(f"{'label':<32} {'n':>5} {'rms_x':>8} {'rms_y':>8} {'rms_z':>8} {'rms_avg':>8}")
    for label, r in table.rows:
        print(f"{label:<32} {r.n_pairs:>5} {r.rms_x:8.4f} {r.rms_y:8.4f} {r.rms_z:8.4f} {r.rms_avg:8.4f}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------
def _add_scale_flags(p):
    p.add_argument("--no-scale", action="store_true", help="rigid alignment (scale fixed to 1)")
    p.add_argument("--scale-method", choices=("symmetric", "asymmetric"), default="symmetric")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfmval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({_kernels.backend()})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a trajectory file to the canonical format")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=FORMATS, default="auto")
    p.add_argument("--unit", choices=("rad", "deg"), default="rad")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("evaluate", help="align an estimate to ground truth and report RMS errors")
    p.add_argument("--gt", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--key", choices=("frame", "name", "order"), default="frame")
    _add_scale_flags(p)
    p.add_argument("--report", help="CSV report path")
    p.add_argument("--residuals", help="per-pair residual table path")
    p.add_argument("--report-text", help="structured text report path")
    p.add_argument("--label")
    p.add_argument("--gt-format", choices=FORMATS, default="auto")
    p.add_argument("--est-format", choices=FORMATS, default="auto")
    p.add_argument("--unit", choices=("rad", "deg"), default="rad")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("align", help="estimate the similarity transform estimate -> ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--out-transform")
    p.add_argument("--out-traj")
    p.add_argument("--key", choices=("frame", "name", "order"), default="frame")
    _add_scale_flags(p)
    p.add_argument("--gt-format", choices=FORMATS, default="auto")
    p.add_argument("--est-format", choices=FORMATS, default="auto")
    p.add_argument("--unit", choices=("rad", "deg"), default="rad")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("geotag", help="write trajectory positions into image EXIF GPS tags")
    p.add_argument("--images", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--lat0", type=float, default=47.3769)
    p.add_argument("--lon0", type=float, default=8.5417)
    p.add_argument("--alt0", type=float, default=408.0)
    p.add_argument("--pattern", default=DEFAULT_PATTERN, help="printf-style file name for a frame key")
    p.add_argument("--axis-map", default="x,y,z", help="local axes pointing east,north,up")
    p.add_argument("--report", help="CSV report path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=FORMATS, default="auto")
    p.add_argument("--unit", choices=("rad", "deg"), default="rad")
    p.set_defaults(func=cmd_geotag)

    p = sub.add_parser("synth", help="generate synthetic ground-truth/estimate fixtures")
    p.add_argument("--preset", choices=("paper", "custom"), default="paper",
                   help="paper: the six reference fixtures; custom: one pair built from the flags below")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--frames", type=int, default=3000)
    p.add_argument("--label", default="custom")
    p.add_argument("--extent-x", type=float, default=100.0)
    p.add_argument("--extent-y", type=float, default=100.0)
    p.add_argument("--height", type=float, default=2.0)
    p.add_argument("--mode", choices=[m.value for m in OrientationMode], default="forward")
    p.add_argument("--tilt", type=float, default=30.0)
    p.add_argument("--corner-radius", type=float, default=5.0)
    p.add_argument("--sigma", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar=("SX", "SY", "SZ"))
    p.add_argument("--drift", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar=("DX", "DY", "DZ"))
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--gauge", action="store_true", help="apply a random similarity to the estimate")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare", help="evaluate every pair in a manifest and tabulate")
    p.add_argument("--inputs", required=True, help="manifest CSV: label,gt_path,est_path[,seed]")
    p.add_argument("--out", help="table CSV path")
    p.add_argument("--sorted", action="store_true", help="ascending by average RMS")
    p.add_argument("--key", choices=("frame", "name", "order"), default="frame")
    p.add_argument("--no-scale", action="store_true")
    p.add_argument("--unit", choices=("rad", "deg"), default="rad")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sfmval {args.command}: {exc}", file=sys.stderr)
        return 2
    except SfmValError as exc:
        print(f"sfmval {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"sfmval {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
