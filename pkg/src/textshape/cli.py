"""Batch command line: encode / decode / roundtrip / eval / render / netplan.

Exit status contract: 0 success, 1 input error, 2 threshold failure. Every
command is deterministic given its inputs, configuration and seed, and every
output directory receives the serialized run configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import evaluate, formats, netplan, render
from .detect import DecodeConfig, DecodeDiagnostics, PredictionRaster, add_distance_noise, decode
from .labels import RasterGrid, encode

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_THRESHOLD = 2


@dataclass
class RunConfig:
    stride: int = 1
    alpha: float = 0.06
    prob_threshold: float = 0.5
    iou_threshold: float = 0.5
    mode: str = "polygon"
    min_points: int = 8
    min_cells: int | None = None
    lam: float = 1.0
    dice_epsilon: float = 1.0
    smooth_l1_delta: float = 1.0
    seed: int = 0
    noise_sigma: float = 0.0

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        cfg = cls()
        for f in dataclasses.fields(cls):
            if hasattr(args, f.name):
                setattr(cfg, f.name, getattr(args, f.name))
        return cfg

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(
            prob_threshold=self.prob_threshold,
            alpha=self.alpha,
            min_points=self.min_points,
            min_cells=self.min_cells,
        )

    def dump(self, directory: Path) -> None:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "run_config.json").write_text(
            json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"
        )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--alpha", type=float, default=0.06)
    parser.add_argument("--prob-threshold", dest="prob_threshold", type=float, default=0.5)
    parser.add_argument("--iou-threshold", dest="iou_threshold", type=float, default=0.5)
    parser.add_argument("--mode", choices=("polygon", "quad"), default="polygon")
    parser.add_argument("--min-points", dest="min_points", type=int, default=8)
    parser.add_argument("--min-cells", dest="min_cells", type=int, default=None)
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0)
    parser.add_argument("--dice-epsilon", dest="dice_epsilon", type=float, default=1.0)
    parser.add_argument("--smooth-l1-delta", dest="smooth_l1_delta", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)


def _annotation_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.glob("*.txt") if p.is_file())


def cmd_encode(args) -> int:
    cfg = RunConfig.from_args(args)
    gt_dir = Path(args.gt_dir)
    out_dir = Path(args.out_dir)
    if not gt_dir.is_dir():
        print(f"error: {gt_dir} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    files = _annotation_files(gt_dir)
    failures = []
    written = instances = conflicts = 0
    cfg.dump(out_dir)
    for path in files:
        try:
            record = formats.read_annotation_file(path, args.format)
            grid = RasterGrid.for_image(*record.image_size, stride=cfg.stride)
            raster = encode(record.annotations, grid)
        except (formats.ParseError, ValueError) as exc:
            failures.append(f"{path}: {exc}")
            continue
        formats.write_raster(out_dir / f"{record.image_id}.msrr", raster)
        written += 1
        instances += raster.stats.instances
        conflicts += raster.stats.conflict_cells
    for failure in failures:
        print(f"error: {failure}", file=sys.stderr)
    print(f"encoded {written} files, {instances} instances, {conflicts} conflict cells")
    return EXIT_INPUT if failures else EXIT_OK


def cmd_decode(args) -> int:
    cfg = RunConfig.from_args(args)
    pred_dir = Path(args.pred_dir)
    out_dir = Path(args.out_dir)
    if not pred_dir.is_dir():
        print(f"error: {pred_dir} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    cfg.dump(out_dir)
    failures = []
    total = 0
    for path in sorted(pred_dir.glob("*.msrr")):
        try:
            raster = formats.read_raster(path)
        except formats.RasterFormatError as exc:
            failures.append(str(exc))
            continue
        pred = (
            raster
            if isinstance(raster, PredictionRaster)
            else PredictionRaster.from_label(raster)
        )
        if cfg.noise_sigma > 0:
            pred = add_distance_noise(pred, cfg.noise_sigma, cfg.seed)
        diag = DecodeDiagnostics()
        dets = decode(pred, cfg.decode_config(), diag)
        formats.write_detections(out_dir / f"{path.stem}.txt", dets)
        total += len(dets)
    for failure in failures:
        print(f"error: {failure}", file=sys.stderr)
    print(f"decoded {total} detections")
    return EXIT_INPUT if failures else EXIT_OK


def cmd_roundtrip(args) -> int:
    cfg = RunConfig.from_args(args)
    gt_dir = Path(args.gt_dir)
    report_path = Path(args.report)
    if not gt_dir.is_dir():
        print(f"error: {gt_dir} is not a directory", file=sys.stderr)
        return EXIT_INPUT

    rows = []
    gt_total = det_total = 0
    try:
        for path in _annotation_files(gt_dir):
            record = formats.read_annotation_file(path, args.format)
            grid = RasterGrid.for_image(*record.image_size, stride=cfg.stride)
            raster = encode(record.annotations, grid)
            pred = PredictionRaster.from_label(raster)
            if cfg.noise_sigma > 0:
                pred = add_distance_noise(pred, cfg.noise_sigma, cfg.seed)
            dets = decode(pred, cfg.decode_config())
            live = [a for a in record.annotations if not a.ignore]
            gt_total += len(live)
            det_total += len(dets)
            paired = evaluate.match(dets, live, iou_threshold=1e-6)
            by_gt = {gt: iou for _, gt, iou in paired.matches}
            for gi in range(len(live)):
                rows.append((record.image_id, gi, by_gt.get(gi, 0.0)))
    except (formats.ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    ious = np.array([iou for _, _, iou in rows]) if rows else np.zeros(0)
    mean_iou = float(ious.mean()) if len(ious) else 0.0
    min_iou = float(ious.min()) if len(ious) else 0.0
    lines = [f"{img},{gi},{iou:.4f}" for img, gi, iou in rows]
    lines.append(f"instances={len(rows)}")
    lines.append(f"detections={det_total}")
    lines.append(f"count_preserved={int(det_total == gt_total)}")
    lines.append(f"mean_iou={mean_iou:.4f}")
    lines.append(f"min_iou={min_iou:.4f}")
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text("".join(line + "\n" for line in lines))
    cfg.dump(report_path.parent)
    print(f"mean_iou={mean_iou:.4f} min_iou={min_iou:.4f} instances={len(rows)}")
    if mean_iou < args.min_mean_iou or min_iou < args.min_instance_iou:
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = RunConfig.from_args(args)
    det_dir = Path(args.det_dir)
    gt_dir = Path(args.gt_dir)
    try:
        dets = {p.stem: formats.read_detections(p) for p in _annotation_files(det_dir)}
        gts = {
            p.stem: formats.read_annotation_file(p, args.format).annotations
            for p in _annotation_files(gt_dir)
        }
        report = evaluate.evaluate_dataset(
            dets,
            gts,
            iou_threshold=cfg.iou_threshold,
            mode=cfg.mode,
            allow_missing=args.allow_missing,
        )
    except (formats.ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for line in evaluate.report_lines(report.overall):
        print(line)
    out = Path(args.report) if args.report else det_dir / "eval_report.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = evaluate.report_lines(report.overall)
    for image_id, rep in sorted(report.per_image.items()):
        lines.append(
            f"image {image_id}: tp={rep.tp} fp={rep.fp} fn={rep.fn} "
            f"ignored={rep.ignored_dets}"
        )
    for image_id in report.missing_detections:
        lines.append(f"missing detections: {image_id}")
    for image_id in report.missing_ground_truth:
        lines.append(f"missing ground truth: {image_id}")
    out.write_text("".join(line + "\n" for line in lines))
    cfg.dump(out.parent)
    return EXIT_OK


def cmd_render(args) -> int:
    gts = []
    dets = []
    try:
        if args.gt:
            gts = formats.read_annotation_file(args.gt, args.format).annotations
        if args.det:
            dets = formats.read_detections(args.det)
    except (formats.ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.quad:
        from .geom import min_area_rect

        for det in dets:
            det.quad = min_area_rect(det.polygon)
    svg = render.render_svg(gts, dets, with_quads=args.quad)
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_netplan(args) -> int:
    try:
        plan = netplan.shape_plan(args.height, args.width, args.channels)
    except netplan.ShapePlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(netplan.format_plan(plan))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textshape",
        description="Geometry codec and evaluation toolkit for boundary-regression text detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="annotation files -> MSRR label rasters")
    p.add_argument("gt_dir")
    p.add_argument("format", choices=formats.ANNOTATION_FORMATS)
    p.add_argument("out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="MSRR prediction rasters -> detection files")
    p.add_argument("pred_dir")
    p.add_argument("out_dir")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="encode -> decode -> per-instance IoU report")
    p.add_argument("gt_dir")
    p.add_argument("format", choices=formats.ANNOTATION_FORMATS)
    p.add_argument("report")
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.0)
    p.add_argument("--min-mean-iou", dest="min_mean_iou", type=float, default=0.85)
    p.add_argument("--min-instance-iou", dest="min_instance_iou", type=float, default=0.75)
    _add_common(p)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("det_dir")
    p.add_argument("gt_dir")
    p.add_argument("format", choices=formats.ANNOTATION_FORMATS)
    p.add_argument("--report", default=None)
    p.add_argument("--allow-missing", dest="allow_missing", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render ground truth and detections to SVG")
    p.add_argument("--gt", default=None)
    p.add_argument("--format", choices=formats.ANNOTATION_FORMATS, default="totaltext")
    p.add_argument("--det", default=None)
    p.add_argument("--quad", action="store_true")
    p.add_argument("out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("netplan", help="print the multi-scale fusion shape plan")
    p.add_argument("height", type=int)
    p.add_argument("width", type=int)
    p.add_argument("channels", type=int, nargs="?", default=2)
    p.set_defaults(func=cmd_netplan)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
