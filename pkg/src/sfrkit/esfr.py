"""Slanted-edge frequency response measurement.

The route from pixels to a response curve:

1. orient the region so its edge runs near-vertically;
2. locate the edge per scan line from gradient centroids and fit a
   straight line through them;
3. project every pixel onto the across-edge axis and average into bins
   of 1/oversample pixel, building a supersampled edge profile;
4. differentiate, apply a Hamming window centered on the line spread,
   take the DFT magnitude, normalize DC to 1, and undo the discrete
   derivative's high-frequency droop.

The slant is what makes step 3 work: each scan line samples the edge at
a different sub-pixel phase, so the bins recover detail past the pixel
pitch. An edge aligned to an axis (under one degree) leaves bins
starved and is rejected as degenerate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import parallel
from .errors import DegenerateEdgeError, DomainError, EdgeFitError, IoError, NormalizationError
from .harvest import EdgeRegion, Orientation, fit_edge_line

_VALID_OVERSAMPLE = (4, 8)
_MIN_LINES = 10
_MIN_FIT_R2 = 0.9
_MIN_ANGLE_DEG = 1.0
_MAX_EMPTY_FRACTION = 0.20
_CORRECTION_CAP = 10.0


@dataclass(frozen=True)
class EsfProfile:
    """Supersampled edge profile plus the fit that produced it."""

    bins: np.ndarray
    oversample: int
    fitted_angle_deg: float
    edge_offset_per_line: float

    def __post_init__(self):
        bins = np.array(self.bins, dtype=np.float64, copy=True)
        if bins.ndim != 1 or bins.size < 2 * self.oversample:
            raise DomainError("esf must hold at least two pixels worth of bins")
        if not np.all(np.isfinite(bins)):
            raise DomainError("esf bins must be finite")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)

    @property
    def roi_width(self) -> int:
        return self.bins.size // self.oversample


@dataclass(frozen=True)
class SfrCurve:
    """Response samples on the reporting grid, DC normalized to 1.

    ``mtf50`` is the lowest 0.5 crossing in cycles/pixel, or None when
    the curve never drops below 0.5 inside the reported band.
    """

    freqs: np.ndarray
    values: np.ndarray
    mtf50: float | None

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=np.float64, copy=True)
        values = np.array(self.values, dtype=np.float64, copy=True)
        if freqs.shape != values.shape or freqs.ndim != 1 or freqs.size < 2:
            raise DomainError("freqs and values must be matching 1-D arrays")
        if freqs[0] != 0.0 or np.any(np.diff(freqs) <= 0.0):
            raise DomainError("frequency grid must start at 0 and increase")
        if not np.all(np.isfinite(values)) or values.min() < 0.0:
            raise DomainError("response values must be finite and non-negative")
        if abs(values[0] - 1.0) > 1e-9:
            raise DomainError("response must be normalized to 1 at DC")
        freqs.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)


def compute_esf(region: EdgeRegion, oversample: int = 4) -> EsfProfile:
    """Build the supersampled edge profile for one region.

    Raises EdgeFitError when the centroid fit is untrustworthy (r2 below
    0.9, fewer than 10 usable lines, or more than 20% of bins left
    empty) and DegenerateEdgeError when the edge is within a degree of
    axis-aligned.
    """
    if oversample not in _VALID_OVERSAMPLE:
        raise DomainError(f"oversample must be one of {_VALID_OVERSAMPLE}")
    oriented = region.oriented_data()
    n_lines_total, width = oriented.shape

    slope, intercept, r2, n_lines = fit_edge_line(oriented)
    if n_lines < _MIN_LINES:
        raise EdgeFitError(f"only {n_lines} usable lines, need {_MIN_LINES}")
    if r2 < _MIN_FIT_R2:
        raise EdgeFitError(f"centroid fit r2={r2:.4f} below {_MIN_FIT_R2}")
    angle = float(np.degrees(np.arctan(abs(slope))))
    if angle < _MIN_ANGLE_DEG:
        raise DegenerateEdgeError(
            f"edge angle {angle:.3f} deg is too close to the axis; bins would alias")

    # Signed across-edge distance of every pixel center, quantized to
    # bins of 1/oversample pixel with the edge at the array midpoint.
    n_bins = width * oversample
    rows = np.arange(n_lines_total, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]
    distance = cols - (slope * rows + intercept)
    idx = np.floor((distance + width / 2.0) * oversample).astype(np.int64)
    keep = (idx >= 0) & (idx < n_bins)
    idx = idx[keep]
    samples = oriented[keep]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=samples, minlength=n_bins)

    empty = counts == 0
    if empty.mean() > _MAX_EMPTY_FRACTION:
        raise EdgeFitError(f"{int(empty.sum())} of {n_bins} bins empty; "
                           "edge geometry does not cover the window")
    esf = np.empty(n_bins, dtype=np.float64)
    filled = ~empty
    esf[filled] = sums[filled] / counts[filled]
    if empty.any():
        # Linear fill between populated neighbors; flat past the ends.
        positions = np.nonzero(filled)[0]
        esf[empty] = np.interp(np.nonzero(empty)[0], positions, esf[filled])
    return EsfProfile(bins=esf, oversample=oversample,
                      fitted_angle_deg=angle, edge_offset_per_line=float(slope))


def compute_sfr(esf: EsfProfile) -> SfrCurve:
    """Turn an edge profile into a normalized response curve.

    Reported frequencies run 0..1 cycles/pixel in steps of 1/roi_width.
    The division by sin(x)/x (x = 2*pi*f*bin_pitch, capped at 10x)
    removes the attenuation introduced by the finite-difference
    derivative, so a perfect system would measure flat at 1.
    """
    bins = esf.bins
    n_bins = bins.size
    lsf = np.gradient(bins)
    weight = np.abs(lsf)
    total = float(weight.sum())
    if total < 1e-12:
        raise NormalizationError("flat edge profile carries no line spread")

    centroid = float((weight * np.arange(n_bins)).sum() / total)
    half_span = max(centroid, (n_bins - 1) - centroid)
    window = 0.54 + 0.46 * np.cos(np.pi * (np.arange(n_bins) - centroid) / half_span)

    spectrum = np.abs(np.fft.rfft(lsf * window))
    if spectrum[0] < 1e-12:
        raise NormalizationError("spectrum has no DC component to normalize against")
    spectrum = spectrum / spectrum[0]

    width = esf.roi_width
    k = np.arange(width + 1)
    freqs = k / float(width)
    x = 2.0 * np.pi * freqs / esf.oversample
    correction = np.ones_like(x)
    nonzero = x > 0.0
    correction[nonzero] = np.minimum(x[nonzero] / np.sin(x[nonzero]), _CORRECTION_CAP)
    values = spectrum[: width + 1] * correction
    return SfrCurve(freqs=freqs, values=values, mtf50=_lowest_half_crossing(freqs, values))


def _lowest_half_crossing(freqs: np.ndarray, values: np.ndarray) -> float | None:
    if values[0] < 0.5:
        return None
    for i in range(values.size - 1):
        if values[i] >= 0.5 > values[i + 1]:
            span = values[i] - values[i + 1]
            t = (values[i] - 0.5) / span
            return float(freqs[i] + t * (freqs[i + 1] - freqs[i]))
    return None


STATUS_OK = "ok"
_STATUS_BY_ERROR = {
    EdgeFitError: "edge_fit_error",
    DegenerateEdgeError: "degenerate_edge_error",
    NormalizationError: "normalization_error",
}


@dataclass(frozen=True)
class RegionMeasurement:
    """Measurement outcome for one region; failures keep their reason."""

    source: str
    origin: tuple[int, int]
    orientation: Orientation
    angle_deg: float
    status: str
    curve: SfrCurve | None = None
    detail: str = ""

    @property
    def mtf50(self) -> float | None:
        return self.curve.mtf50 if self.curve is not None else None

    def to_dict(self) -> dict:
        sfr = []
        if self.curve is not None:
            sfr = [{"f": float(f), "m": float(m)}
                   for f, m in zip(self.curve.freqs, self.curve.values)]
        return {
            "source": self.source,
            "origin": list(self.origin),
            "orientation": self.orientation.value,
            "angle_deg": self.angle_deg,
            "mtf50": self.mtf50,
            "sfr": sfr,
            "status": self.status,
            "detail": self.detail,
        }


def measure_region(region: EdgeRegion, oversample: int = 4) -> RegionMeasurement:
    """Measure one region, mapping fit failures to status tags."""
    base = {"source": region.source, "origin": region.origin,
            "orientation": region.orientation, "angle_deg": region.angle_deg}
    try:
        curve = compute_sfr(compute_esf(region, oversample))
    except tuple(_STATUS_BY_ERROR) as exc:
        return RegionMeasurement(status=_STATUS_BY_ERROR[type(exc)], detail=str(exc), **base)
    return RegionMeasurement(status=STATUS_OK, curve=curve, **base)


def measure_regions(regions: list[EdgeRegion], oversample: int = 4,
                    workers: int | None = None) -> list[RegionMeasurement]:
    """Measure a batch, collated by (source, origin) regardless of the
    worker count."""
    ordered = sorted(regions, key=lambda r: (r.source, r.origin[1], r.origin[0],
                                             r.orientation.value))
    return parallel.map_ordered(lambda r: measure_region(r, oversample), ordered, workers)


def write_measurements(path: str | Path, measurements: list[RegionMeasurement]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [m.to_dict() for m in measurements]
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_measurements(path: str | Path) -> list[dict]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed measurements file {path}: {exc}") from exc
    if not isinstance(payload, list):
        raise DomainError(f"measurements file {path} must hold an array")
    return payload
