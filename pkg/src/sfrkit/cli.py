"""Command-line interface.

Subcommands map one-to-one onto the pipeline stages (degrade, chart,
harvest, measure, report) plus ``pipeline``, which chains them over a
work directory. Exit codes: 0 success, 2 usage, 3 data, 4 file I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .degrade import (BORDER_CONSTANT, BORDER_REFLECT101, BORDER_REPLICATE,
                      GaussianSpec, degrade_dataset, kernel_size)
from .errors import (EXIT_OK, DomainError, SfrkitError, StageError, UsageError,
                     exit_code_for)
from .esfr import measure_regions, read_measurements, write_measurements
from .harvest import HarvestCriteria, harvest_dataset, read_regions, write_regions
from .imgcore import REC709, LumaWeights, save_image
from .pipeline import RunConfig, run_pipeline
from .report import (WEIGHT_BY_IMAGE, WEIGHT_BY_REGION, aggregate, read_detections,
                     render_reports)
from .synthchart import ChartSpec, GaussianEdge, IdealStep, render_chart


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns the exit code."""

    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class DegradeCommand:
    spec: GaussianSpec
    src: Path
    dst: Path
    threads: int | None


@dataclass(frozen=True)
class ChartCommand:
    spec: ChartSpec
    out: Path
    depth: int


@dataclass(frozen=True)
class HarvestCommand:
    src: Path
    out: Path
    criteria: HarvestCriteria
    weights: LumaWeights
    gamma: float
    emit_rois: Path | None
    threads: int | None


@dataclass(frozen=True)
class MeasureCommand:
    regions: Path
    root: Path
    out: Path
    oversample: int
    threads: int | None


@dataclass(frozen=True)
class ReportCommand:
    measurements: list[tuple[str, Path]]
    detections: Path | None
    out: Path
    weighting: str


def _build_parser() -> _Parser:
    parser = _Parser(prog="sfrkit",
                     description="Slanted-edge sharpness measurement and reporting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="Gaussian-blur an image tree")
    p.add_argument("--sigma", type=float, required=True, help="blur standard deviation")
    p.add_argument("--kernel", type=int, default=None,
                   help="tap count override (default: derived from sigma)")
    p.add_argument("--border", default=BORDER_REFLECT101,
                   help="reflect101 | replicate | constant:<value> (default reflect101)")
    p.add_argument("--src", required=True, help="source image directory")
    p.add_argument("--dst", required=True, help="destination directory")
    _add_threads(p)

    p = sub.add_parser("chart", help="render a synthetic slanted-edge chart")
    p.add_argument("--profile", required=True, help="step | gauss:<sigma>")
    p.add_argument("--angle", type=float, default=5.0,
                   help="edge slant from vertical, degrees (default 5)")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument("--size", default="200x200", help="chart WxH in pixels (default 200x200)")
    p.add_argument("--low", type=float, default=0.15, help="dark-side level (default 0.15)")
    p.add_argument("--high", type=float, default=0.85, help="bright-side level (default 0.85)")
    p.add_argument("--supersample", type=int, default=16,
                   help="area-sampling factor for step edges (default 16)")
    p.add_argument("--depth", type=int, choices=(8, 16), default=16,
                   help="PNG bit depth (default 16, keeps the profile unquantized)")

    p = sub.add_parser("harvest", help="find measurable edge regions in a dataset")
    p.add_argument("--src", required=True, help="image directory")
    p.add_argument("--out", required=True, help="output regions.json path")
    _add_criteria(p)
    _add_luma(p)
    p.add_argument("--emit-rois", default=None, metavar="DIR",
                   help="also write each region crop as a PNG under DIR")
    _add_threads(p)

    p = sub.add_parser("measure", help="measure SFR curves for harvested regions")
    p.add_argument("--regions", required=True, help="regions.json from harvest")
    p.add_argument("--root", default=None,
                   help="directory source paths resolve against "
                        "(default: the regions file's directory)")
    p.add_argument("--out", required=True, help="output measurements.json path")
    p.add_argument("--oversample", type=int, choices=(4, 8), default=4,
                   help="bins per pixel (default 4)")
    _add_threads(p)

    p = sub.add_parser("report", help="aggregate measurements into reports")
    p.add_argument("--measurements", required=True,
                   help="comma-separated measurements.json paths, baseline first")
    p.add_argument("--labels", required=True,
                   help="comma-separated variant labels matching --measurements")
    p.add_argument("--detections", default=None, help="detection metrics JSON")
    p.add_argument("--out", required=True, help="report output directory")
    _add_weighting(p)

    p = sub.add_parser("pipeline", help="degrade + harvest + measure + report")
    p.add_argument("--src", required=True, help="source image directory")
    p.add_argument("--workdir", required=True, help="work directory for all artifacts")
    p.add_argument("--sigmas", default="1,2,3",
                   help="comma-separated blur sigmas, strictly increasing (default 1,2,3)")
    p.add_argument("--border", default=BORDER_REFLECT101,
                   help="reflect101 | replicate | constant:<value> (default reflect101)")
    p.add_argument("--oversample", type=int, choices=(4, 8), default=4,
                   help="bins per pixel (default 4)")
    p.add_argument("--detections", default=None, help="detection metrics JSON")
    _add_criteria(p)
    _add_luma(p)
    _add_weighting(p)
    _add_threads(p)
    return parser


def _add_threads(p):
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: SS_SFR_THREADS or CPU count)")


def _add_weighting(p):
    p.add_argument("--weighting", choices=(WEIGHT_BY_REGION, WEIGHT_BY_IMAGE),
                   default=WEIGHT_BY_REGION,
                   help="average per region or per image (default region)")


def _add_criteria(p):
    p.add_argument("--min-angle", type=float, default=None, help="minimum edge slant, degrees")
    p.add_argument("--max-angle", type=float, default=None, help="maximum edge slant, degrees")
    p.add_argument("--roi", default=None, metavar="WxL",
                   help="region size: across-edge x along-edge pixels (default 32x64)")
    p.add_argument("--min-contrast", type=float, default=None, help="minimum Michelson contrast")
    p.add_argument("--min-r2", type=float, default=None, help="minimum centroid line-fit r^2")
    p.add_argument("--max-regions", type=int, default=None, help="per-image region cap")


def _add_luma(p):
    p.add_argument("--luma", default=None, metavar="WR,WG,WB",
                   help="luma weights (default Rec.709: 0.2126,0.7152,0.0722)")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="power-law exponent applied before the luma dot product (default 1)")


def _usage(condition: bool, message: str) -> None:
    if not condition:
        raise UsageError(message)


def _parse_border(text: str) -> tuple[str, float]:
    if text in (BORDER_REFLECT101, BORDER_REPLICATE):
        return text, 0.0
    if text.startswith(BORDER_CONSTANT + ":"):
        try:
            value = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad constant border value in {text!r}")
        _usage(0.0 <= value <= 1.0, "constant border value must lie in [0, 1]")
        return BORDER_CONSTANT, value
    raise UsageError(f"unknown border policy {text!r}")


def _parse_pair(text: str, what: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    _usage(len(parts) == 2, f"{what} must look like <w>x<h>, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"{what} must hold integers, got {text!r}")


def _parse_profile(text: str):
    if text == "step":
        return IdealStep()
    if text.startswith("gauss:"):
        try:
            sigma = float(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad profile sigma in {text!r}")
        _usage(sigma > 0.0, "profile sigma must be positive")
        return GaussianEdge(sigma)
    raise UsageError(f"unknown profile {text!r}; expected step or gauss:<sigma>")


def _parse_luma(args) -> LumaWeights:
    if args.luma is None:
        return REC709
    parts = args.luma.split(",")
    _usage(len(parts) == 3, "--luma needs three comma-separated weights")
    try:
        weights = LumaWeights(*(float(p) for p in parts))
    except ValueError:
        raise UsageError(f"bad luma weights {args.luma!r}")
    except DomainError as exc:
        raise UsageError(str(exc))
    return weights


def _parse_criteria(args) -> HarvestCriteria:
    base = HarvestCriteria()
    roi_w, roi_l = (base.roi_width, base.roi_length)
    if args.roi is not None:
        roi_w, roi_l = _parse_pair(args.roi, "--roi")
    try:
        return HarvestCriteria(
            min_angle_deg=base.min_angle_deg if args.min_angle is None else args.min_angle,
            max_angle_deg=base.max_angle_deg if args.max_angle is None else args.max_angle,
            roi_width=roi_w, roi_length=roi_l,
            min_contrast=base.min_contrast if args.min_contrast is None else args.min_contrast,
            min_linefit_r2=base.min_linefit_r2 if args.min_r2 is None else args.min_r2,
            max_regions_per_image=(base.max_regions_per_image if args.max_regions is None
                                   else args.max_regions))
    except DomainError as exc:
        raise UsageError(str(exc))


def _parse_sigmas(text: str) -> tuple[float, ...]:
    try:
        sigmas = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"bad sigma list {text!r}")
    _usage(len(sigmas) >= 1, "at least one sigma is required")
    return sigmas


def parse_args(argv: list[str]) -> tuple[str, object]:
    """Parse and validate argv into (subcommand, typed command config)."""
    args = _build_parser().parse_args(argv)

    if args.command == "degrade":
        _usage(args.sigma > 0.0, "--sigma must be positive")
        border, value = _parse_border(args.border)
        size = kernel_size(args.sigma) if args.kernel is None else args.kernel
        try:
            spec = GaussianSpec(sigma=args.sigma, size=size, border=border,
                                border_value=value)
        except DomainError as exc:
            raise UsageError(str(exc))
        return args.command, DegradeCommand(spec=spec, src=Path(args.src),
                                            dst=Path(args.dst), threads=args.threads)

    if args.command == "chart":
        width, height = _parse_pair(args.size, "--size")
        try:
            spec = ChartSpec(width=width, height=height, edge_angle_deg=args.angle,
                             profile=_parse_profile(args.profile), low=args.low,
                             high=args.high, supersample=args.supersample)
        except DomainError as exc:
            raise UsageError(str(exc))
        _usage(Path(args.out).suffix.lower() == ".png", "--out must be a .png path")
        return args.command, ChartCommand(spec=spec, out=Path(args.out), depth=args.depth)

    if args.command == "harvest":
        return args.command, HarvestCommand(
            src=Path(args.src), out=Path(args.out), criteria=_parse_criteria(args),
            weights=_parse_luma(args), gamma=args.gamma,
            emit_rois=None if args.emit_rois is None else Path(args.emit_rois),
            threads=args.threads)

    if args.command == "measure":
        regions = Path(args.regions)
        root = Path(args.root) if args.root is not None else regions.parent
        return args.command, MeasureCommand(regions=regions, root=root,
                                            out=Path(args.out), oversample=args.oversample,
                                            threads=args.threads)

    if args.command == "report":
        paths = [Path(p) for p in args.measurements.split(",") if p]
        labels = [s for s in args.labels.split(",") if s]
        _usage(len(paths) >= 1, "at least one measurements file is required")
        _usage(len(paths) == len(labels),
               f"{len(paths)} measurement files but {len(labels)} labels")
        return args.command, ReportCommand(
            measurements=list(zip(labels, paths)),
            detections=None if args.detections is None else Path(args.detections),
            out=Path(args.out), weighting=args.weighting)

    border, value = _parse_border(args.border)
    cfg = RunConfig(
        src=Path(args.src), workdir=Path(args.workdir), sigmas=_parse_sigmas(args.sigmas),
        border=border, border_value=value, criteria=_parse_criteria(args),
        oversample=args.oversample, weights=_parse_luma(args), gamma=args.gamma,
        weighting=args.weighting,
        detections=None if args.detections is None else Path(args.detections),
        threads=args.threads)
    return args.command, cfg


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


def _run_degrade(cmd: DegradeCommand) -> int:
    report = degrade_dataset(cmd.src, cmd.dst, cmd.spec, workers=cmd.threads)
    print(report.to_json())
    return EXIT_OK


def _run_chart(cmd: ChartCommand) -> int:
    save_image(cmd.out, render_chart(cmd.spec), bit_depth=cmd.depth)
    _emit({"written": cmd.out.as_posix(), "width": cmd.spec.width,
           "height": cmd.spec.height})
    return EXIT_OK


def _run_harvest(cmd: HarvestCommand) -> int:
    regions, stats = harvest_dataset(cmd.src, cmd.criteria, cmd.weights, cmd.gamma,
                                     workers=cmd.threads)
    write_regions(cmd.out, regions, stats, cmd.criteria, cmd.weights, cmd.gamma)
    if cmd.emit_rois is not None:
        for i, region in enumerate(regions):
            stem = region.source.replace("/", "_").rsplit(".", 1)[0] or "image"
            name = (f"{i:04d}_{stem}_{region.origin[0]}_{region.origin[1]}"
                    f"_{region.orientation.value}.png")
            save_image(cmd.emit_rois / name, region.roi, bit_depth=16)
    _emit({"written": cmd.out.as_posix(), "regions": len(regions),
           "images_processed": stats.images_processed,
           "decode_failures": len(stats.decode_failures)})
    return EXIT_OK


def _run_measure(cmd: MeasureCommand) -> int:
    regions, _meta = read_regions(cmd.regions, cmd.root)
    measured = measure_regions(regions, cmd.oversample, workers=cmd.threads)
    write_measurements(cmd.out, measured)
    ok = sum(1 for m in measured if m.status == "ok")
    _emit({"written": cmd.out.as_posix(), "measured": len(measured),
           "ok": ok, "failed": len(measured) - ok})
    return EXIT_OK


def _run_report(cmd: ReportCommand) -> int:
    summaries = [aggregate(read_measurements(path), label, cmd.weighting)
                 for label, path in cmd.measurements]
    detections = read_detections(cmd.detections) if cmd.detections else None
    written = render_reports(summaries, cmd.out, detections)
    _emit({"written": [p.as_posix() for p in written]})
    return EXIT_OK


def _run_pipeline(cfg: RunConfig) -> int:
    result = run_pipeline(cfg)
    _emit({"status": "ok", "variants": result.variants,
           "report": [p.as_posix() for p in result.report_paths],
           "mtf50_mean": {s.variant: s.mtf50_mean for s in result.summaries}})
    return EXIT_OK


_HANDLERS = {
    "degrade": _run_degrade,
    "chart": _run_chart,
    "harvest": _run_harvest,
    "measure": _run_measure,
    "report": _run_report,
    "pipeline": _run_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, config = parse_args(argv)
        return _HANDLERS[command](config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except StageError as exc:
        _emit({"status": "error", "stage": exc.stage,
               "error": type(exc.cause).__name__, "message": str(exc.cause)})
        return exit_code_for(exc)
    except SfrkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def entrypoint() -> None:
    sys.exit(main())
