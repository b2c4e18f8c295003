"""End-to-end dataset run: degrade, harvest, measure, aggregate, report.

Every stage round-trips through files in the work directory, so a
pipeline run produces exactly what chaining the individual subcommands
would, and any intermediate artifact can be inspected or re-used.
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .degrade import BORDER_REFLECT101, GaussianSpec, degrade_dataset, list_images
from .errors import IoError, SfrkitError, StageError, UsageError
from .esfr import measure_regions, read_measurements, write_measurements
from .harvest import HarvestCriteria, harvest_dataset, read_regions, write_regions
from .imgcore import REC709, LumaWeights
from .report import (WEIGHT_BY_REGION, DatasetSummary, aggregate, read_detections,
                     render_reports)

REPORT_DIR = "report"
REGIONS_FILE = "regions.json"
MEASUREMENTS_FILE = "measurements.json"


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one pipeline run."""

    src: Path
    workdir: Path
    sigmas: tuple[float, ...] = (1.0, 2.0, 3.0)
    border: str = BORDER_REFLECT101
    border_value: float = 0.0
    criteria: HarvestCriteria = field(default_factory=HarvestCriteria)
    oversample: int = 4
    weights: LumaWeights = REC709
    gamma: float = 1.0
    weighting: str = WEIGHT_BY_REGION
    detections: Path | None = None
    threads: int | None = None

    def __post_init__(self):
        if not self.sigmas:
            raise UsageError("at least one sigma is required")
        if any(s <= 0 for s in self.sigmas):
            raise UsageError("sigma values must be positive")
        if any(b >= a for b, a in zip(self.sigmas, self.sigmas[1:])):
            raise UsageError("sigma values must be strictly increasing")
        if self.oversample not in (4, 8):
            raise UsageError("oversample must be 4 or 8")


def variant_label(sigma: float | None) -> str:
    return "baseline" if sigma is None else f"sigma{sigma:g}"


@dataclass
class PipelineResult:
    variants: list[str]
    summaries: list[DatasetSummary]
    report_paths: list[Path]
    workdir: Path


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Run every stage, wrapping failures with the stage name."""
    variants: list[tuple[str, float | None]] = [(variant_label(None), None)]
    variants += [(variant_label(s), s) for s in cfg.sigmas]

    def stage(name: str, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SfrkitError as exc:
            raise StageError(name, exc) from exc
        except OSError as exc:
            raise StageError(name, IoError(str(exc))) from exc

    def materialize(label: str, sigma: float | None) -> Path:
        dst = cfg.workdir / label
        if sigma is None:
            files = list_images(cfg.src)
            if not files:
                raise IoError(f"no decodable images under {cfg.src}")
            for rel in files:
                target = dst / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(cfg.src / rel, target)
        else:
            spec = GaussianSpec.from_sigma(sigma, border=cfg.border,
                                           border_value=cfg.border_value)
            degrade_dataset(cfg.src, dst, spec, workers=cfg.threads)
        return dst

    variant_dirs = {label: stage("degrade", materialize, label, sigma)
                    for label, sigma in variants}

    for label, _ in variants:
        vdir = variant_dirs[label]

        def harvest_stage():
            regions, stats = harvest_dataset(vdir, cfg.criteria, cfg.weights,
                                             cfg.gamma, workers=cfg.threads)
            write_regions(vdir / REGIONS_FILE, regions, stats, cfg.criteria,
                          cfg.weights, cfg.gamma)

        stage("harvest", harvest_stage)

        def measure_stage():
            regions, _meta = read_regions(vdir / REGIONS_FILE, vdir)
            measured = measure_regions(regions, cfg.oversample, workers=cfg.threads)
            write_measurements(vdir / MEASUREMENTS_FILE, measured)

        stage("measure", measure_stage)

    def aggregate_stage() -> list[DatasetSummary]:
        out = []
        for label, _ in variants:
            rows = read_measurements(variant_dirs[label] / MEASUREMENTS_FILE)
            out.append(aggregate(rows, label, cfg.weighting))
        return out

    summaries = stage("aggregate", aggregate_stage)

    def report_stage() -> list[Path]:
        detections = read_detections(cfg.detections) if cfg.detections else None
        return render_reports(summaries, cfg.workdir / REPORT_DIR, detections)

    report_paths = stage("report", report_stage)
    return PipelineResult(variants=[label for label, _ in variants],
                          summaries=summaries, report_paths=report_paths,
                          workdir=cfg.workdir)
