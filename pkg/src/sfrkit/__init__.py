"""Slanted-edge SFR toolkit.

Measures camera-system sharpness (MTF50, in cycles/pixel) from slanted
step edges found in arbitrary images, degrades datasets with calibrated
Gaussian blur, renders synthetic charts with known responses for
self-checking, and aggregates everything into dataset-level reports.
"""

from .degrade import (BORDER_CONSTANT, BORDER_REFLECT101, BORDER_REPLICATE,
                      DegradationReport, GaussianSpec, Kernel1D, blur,
                      degrade_dataset, gaussian_kernel_1d, kernel_size)
from .errors import (DecodeError, DegenerateEdgeError, DomainError, EdgeFitError,
                     EmptyInputError, IoError, NormalizationError, SfrkitError,
                     StageError, UsageError)
from .esfr import (EsfProfile, RegionMeasurement, SfrCurve, compute_esf, compute_sfr,
                   measure_region, measure_regions)
from .harvest import (EdgeRegion, HarvestCriteria, HarvestStats, Orientation,
                      harvest_dataset, harvest_edges)
from .imgcore import (REC709, GrayImage, LumaWeights, RgbImage, decode_image,
                      encode_image, load_gray, load_image, save_image, to_luma,
                      transpose)
from .pipeline import PipelineResult, RunConfig, run_pipeline
from .report import (DatasetSummary, DetectionRecord, aggregate, percent_delta,
                     read_detections, render_reports, robustness_deltas)
from .synthchart import (AnalyticSfr, ChartSpec, GaussianEdge, IdealStep,
                         analytic_sfr, render_chart)

__version__ = "0.1.0"

__all__ = [
    "AnalyticSfr", "BORDER_CONSTANT", "BORDER_REFLECT101", "BORDER_REPLICATE",
    "ChartSpec", "DatasetSummary", "DecodeError", "DegenerateEdgeError",
    "DegradationReport", "DetectionRecord", "DomainError", "EdgeFitError",
    "EdgeRegion", "EmptyInputError", "EsfProfile", "GaussianEdge", "GaussianSpec",
    "GrayImage", "HarvestCriteria", "HarvestStats", "IdealStep", "IoError",
    "Kernel1D", "LumaWeights", "NormalizationError", "Orientation",
    "PipelineResult", "REC709", "RegionMeasurement", "RgbImage", "RunConfig",
    "SfrCurve", "SfrkitError", "StageError", "UsageError", "aggregate",
    "analytic_sfr", "blur", "compute_esf", "compute_sfr", "decode_image",
    "degrade_dataset", "encode_image", "gaussian_kernel_1d", "harvest_dataset",
    "harvest_edges", "kernel_size", "load_gray", "load_image", "measure_region",
    "measure_regions", "percent_delta", "read_detections", "render_chart",
    "render_reports", "robustness_deltas", "run_pipeline", "save_image",
    "to_luma", "transpose",
]
