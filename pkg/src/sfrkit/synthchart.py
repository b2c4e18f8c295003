"""Synthetic slanted-edge charts with closed-form frequency responses.

Two edge profiles are supported:

* IdealStep: a hard step, area-sampled against the square pixel
  aperture. Its response is the aperture's |sinc(f)|.
* GaussianEdge: an error-function transition of width sigma, point
  sampled at pixel centers. Its response is exp(-2 pi^2 sigma^2 f^2).

Both make trustworthy references for checking the measuring side of the
toolkit: render a chart, measure it, compare against ``analytic_sfr``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf

from .errors import DomainError
from .imgcore import GrayImage


@dataclass(frozen=True)
class IdealStep:
    """Hard step edge; pixel values are aperture coverage fractions."""


@dataclass(frozen=True)
class GaussianEdge:
    """Smooth edge: low + (high - low) * Phi(d / sigma), point sampled."""

    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0.0:
            raise DomainError(f"edge sigma must be positive, got {self.sigma!r}")


EdgeProfile = Union[IdealStep, GaussianEdge]


@dataclass(frozen=True)
class ChartSpec:
    """Geometry and levels for one rendered chart.

    ``edge_angle_deg`` is measured from vertical, so small angles give a
    near-vertical edge. The edge line always passes through the image
    center.
    """

    width: int = 200
    height: int = 200
    edge_angle_deg: float = 5.0
    profile: EdgeProfile = IdealStep()
    low: float = 0.15
    high: float = 0.85
    supersample: int = 16

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise DomainError("chart must be at least 8x8 pixels")
        if not (0.0 <= self.low < self.high <= 1.0):
            raise DomainError(f"levels must satisfy 0 <= low < high <= 1, "
                              f"got low={self.low!r} high={self.high!r}")
        if self.supersample < 1:
            raise DomainError("supersample factor must be >= 1")
        if not np.isfinite(self.edge_angle_deg):
            raise DomainError("edge angle must be finite")


def _signed_distance(spec: ChartSpec) -> np.ndarray:
    """Perpendicular distance from each pixel center to the edge line."""
    theta = np.deg2rad(spec.edge_angle_deg)
    cx = (spec.width - 1) / 2.0
    cy = (spec.height - 1) / 2.0
    xs = np.arange(spec.width, dtype=np.float64) - cx
    ys = np.arange(spec.height, dtype=np.float64) - cy
    xx, yy = np.meshgrid(xs, ys)
    return np.cos(theta) * xx + np.sin(theta) * yy


def render_chart(spec: ChartSpec) -> GrayImage:
    """Rasterize the chart described by ``spec``."""
    d = _signed_distance(spec)
    if isinstance(spec.profile, GaussianEdge):
        phi = 0.5 * (1.0 + erf(d / (spec.profile.sigma * np.sqrt(2.0))))
        values = spec.low + (spec.high - spec.low) * phi
        return GrayImage(np.clip(values, 0.0, 1.0))

    # Ideal step: average s*s point samples per pixel. The distance field
    # is affine, so each subsample offset just shifts d by a constant.
    s = spec.supersample
    theta = np.deg2rad(spec.edge_angle_deg)
    offsets = (np.arange(s, dtype=np.float64) + 0.5) / s - 0.5
    covered = np.zeros_like(d)
    for dy in offsets:
        for dx in offsets:
            shifted = d + np.cos(theta) * dx + np.sin(theta) * dy
            covered += (shifted > 0.0) + 0.5 * (shifted == 0.0)
    coverage = covered / (s * s)
    values = spec.low + (spec.high - spec.low) * coverage
    return GrayImage(np.clip(values, 0.0, 1.0))


@dataclass(frozen=True)
class AnalyticSfr:
    """Closed-form frequency response of a chart's edge profile.

    ``modulation`` maps frequency in cycles/pixel to contrast in [0, 1],
    with modulation(0) = 1. ``mtf50`` solves modulation(f) = 0.5.
    """

    modulation: Callable[[np.ndarray], np.ndarray]
    mtf50: float


def analytic_sfr(spec: ChartSpec) -> AnalyticSfr:
    """Reference response for the chart's profile, independent of any
    measured estimate."""
    if isinstance(spec.profile, GaussianEdge):
        sigma = spec.profile.sigma
        two_pi2_s2 = 2.0 * np.pi ** 2 * sigma ** 2

        def gaussian(f):
            return np.exp(-two_pi2_s2 * np.square(np.asarray(f, dtype=np.float64)))

        return AnalyticSfr(modulation=gaussian,
                           mtf50=float(np.sqrt(np.log(2.0) / two_pi2_s2)))

    def box(f):
        return np.abs(np.sinc(np.asarray(f, dtype=np.float64)))

    # |sinc| first reaches 0.5 a little past 0.6 cy/px.
    crossing = float(brentq(lambda f: np.sinc(f) - 0.5, 0.5, 0.7, xtol=1e-12))
    return AnalyticSfr(modulation=box, mtf50=crossing)
