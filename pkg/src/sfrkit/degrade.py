"""Gaussian blur degradation: kernel construction, separable convolution,
and batch processing of image trees.

The kernel is the sampled isotropic Gaussian

    G(x, y) = 1 / (2 pi sigma^2) * exp(-(x^2 + y^2) / (2 sigma^2))

evaluated at integer offsets and renormalized to unit sum. Because G
factors into identical 1-D profiles, both passes of the separable
convolution share one tap vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import parallel
from .errors import DecodeError, DomainError, IoError, SfrkitError
from .imgcore import IMAGE_SUFFIXES, GrayImage, RgbImage, decode_image, encode_image

BORDER_REFLECT101 = "reflect101"
BORDER_REPLICATE = "replicate"
BORDER_CONSTANT = "constant"

_PAD_MODES = {
    BORDER_REFLECT101: {"mode": "reflect"},
    BORDER_REPLICATE: {"mode": "edge"},
}

_INTEGER_TOL = 1e-9


def kernel_size(sigma: float) -> int:
    """Default kernel sizing rule.

    Integer sigma uses 6*sigma + 1 taps, which keeps three standard
    deviations on each side of the center tap. Fractional sigma rounds
    the three-sigma radius up instead: 2*ceil(3*sigma) + 1.
    """
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    nearest = round(sigma)
    if abs(sigma - nearest) <= _INTEGER_TOL:
        return 6 * int(nearest) + 1
    return 2 * int(np.ceil(3.0 * sigma)) + 1


@dataclass(frozen=True)
class GaussianSpec:
    """Blur parameters: sigma, kernel width, and border handling."""

    sigma: float
    size: int
    border: str = BORDER_REFLECT101
    border_value: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if self.size < 3 or self.size % 2 == 0:
            raise DomainError(f"kernel size must be an odd integer >= 3, got {self.size!r}")
        if self.border not in (BORDER_REFLECT101, BORDER_REPLICATE, BORDER_CONSTANT):
            raise DomainError(f"unknown border policy: {self.border!r}")
        if not 0.0 <= self.border_value <= 1.0:
            raise DomainError("constant border value must lie in [0, 1]")

    @classmethod
    def from_sigma(cls, sigma: float, border: str = BORDER_REFLECT101,
                   border_value: float = 0.0) -> "GaussianSpec":
        return cls(sigma=sigma, size=kernel_size(sigma), border=border,
                   border_value=border_value)


@dataclass(frozen=True)
class Kernel1D:
    """Normalized symmetric tap vector for one separable pass."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64, copy=True)
        if taps.ndim != 1 or taps.size < 3 or taps.size % 2 == 0:
            raise DomainError("kernel taps must form an odd-length 1-D vector")
        if taps.min() <= 0.0:
            raise DomainError("kernel taps must be strictly positive")
        if abs(taps.sum() - 1.0) > 1e-12:
            raise DomainError("kernel taps must sum to 1")
        if not np.allclose(taps, taps[::-1], rtol=0.0, atol=0.0):
            raise DomainError("kernel taps must be symmetric")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def size(self) -> int:
        return self.taps.size


def gaussian_kernel_1d(spec: GaussianSpec) -> Kernel1D:
    """Point-sample the 1-D Gaussian at integer offsets and normalize."""
    half = spec.size // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    raw = np.exp(-(offsets ** 2) / (2.0 * spec.sigma ** 2))
    return Kernel1D(raw / raw.sum())


def _pad_kwargs(spec: GaussianSpec) -> dict:
    if spec.border == BORDER_CONSTANT:
        return {"mode": "constant", "constant_values": spec.border_value}
    return _PAD_MODES[spec.border]


def _convolve_axis(data: np.ndarray, taps: np.ndarray, axis: int, spec: GaussianSpec) -> np.ndarray:
    half = taps.size // 2
    pad = [(0, 0)] * data.ndim
    pad[axis] = (half, half)
    padded = np.pad(data, pad, **_pad_kwargs(spec))
    out = np.zeros_like(data)
    view = [slice(None)] * data.ndim
    for j, t in enumerate(taps):
        view[axis] = slice(j, j + data.shape[axis])
        out += t * padded[tuple(view)]
    return np.clip(out, 0.0, 1.0)


def blur(img: GrayImage | RgbImage, spec: GaussianSpec):
    """Separable Gaussian blur: horizontal pass, then vertical pass.

    Color images are blurred per channel. The border policy applies to
    each pass independently and output samples are clamped to [0, 1].
    """
    if img.width < spec.size or img.height < spec.size:
        raise DomainError(
            f"image {img.width}x{img.height} is smaller than the {spec.size}-tap kernel")
    taps = gaussian_kernel_1d(spec).taps
    out = _convolve_axis(img.data, taps, axis=1, spec=spec)
    out = _convolve_axis(out, taps, axis=0, spec=spec)
    return GrayImage(out) if isinstance(img, GrayImage) else RgbImage(out)


@dataclass
class DegradationReport:
    """Per-run accounting for a batch blur."""

    processed: int = 0
    failed: int = 0
    failures: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "processed": self.processed,
            "failed": self.failed,
            "failures": self.failures,
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def list_images(root: Path) -> list[Path]:
    """Relative paths of candidate images under ``root``, sorted."""
    if not root.is_dir():
        raise IoError(f"not a readable directory: {root}")
    found = [p.relative_to(root) for p in root.rglob("*")
             if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(found, key=lambda p: p.as_posix())


def degrade_dataset(src_dir: str | Path, dst_dir: str | Path, spec: GaussianSpec,
                    workers: int | None = None) -> DegradationReport:
    """Blur every decodable image under ``src_dir`` into ``dst_dir``.

    Output files keep their relative path and format. Per-file failures
    (undecodable or too-small images) are recorded in the report rather
    than raised; the caller decides whether a nonzero failure count is
    fatal.
    """
    src = Path(src_dir)
    dst = Path(dst_dir)
    candidates = list_images(src)
    if not candidates:
        raise IoError(f"no decodable images under {src}")

    def process(rel: Path) -> dict | None:
        try:
            img = decode_image((src / rel).read_bytes())
            blurred = blur(img, spec)
            out_path = dst / rel
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_bytes(encode_image(blurred, format=rel.suffix))
            return None
        except (DecodeError, DomainError, SfrkitError, OSError) as exc:
            return {"path": rel.as_posix(), "reason": str(exc)}

    report = DegradationReport()
    for failure in parallel.map_ordered(process, candidates, workers):
        if failure is None:
            report.processed += 1
        else:
            report.failed += 1
            report.failures.append(failure)
    return report
