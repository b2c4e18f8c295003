"""Image containers, PNG/JPEG codec glue, and color-to-luminance conversion.

All containers hold float64 samples in [0, 1]. Arrays are copied on
construction and marked read-only, so instances can be shared freely
between worker threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, DomainError, IoError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _frozen_array(data, shape_kind: str) -> np.ndarray:
    arr = np.array(data, dtype=np.float64, copy=True, order="C")
    if shape_kind == "gray" and arr.ndim != 2:
        raise DomainError("gray image data must be a 2-D array")
    if shape_kind == "rgb" and (arr.ndim != 3 or arr.shape[2] != 3):
        raise DomainError("rgb image data must be an (h, w, 3) array")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DomainError("image dimensions must be positive")
    if not np.all(np.isfinite(arr)):
        raise DomainError("image samples must be finite")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError("image samples must lie in [0, 1]")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GrayImage:
    """Single-channel raster; ``data`` is (height, width), row-major."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(self.data, "gray"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class RgbImage:
    """Three-channel raster; ``data`` is (height, width, 3), row-major."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_array(self.data, "rgb"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class LumaWeights:
    """Channel weights for the RGB-to-luminance dot product."""

    wr: float
    wg: float
    wb: float

    def __post_init__(self):
        w = (self.wr, self.wg, self.wb)
        if any(not np.isfinite(v) or v < 0.0 for v in w):
            raise DomainError("luma weights must be finite and non-negative")
        if abs(sum(w) - 1.0) > 1e-9:
            raise DomainError("luma weights must sum to 1")


REC709 = LumaWeights(0.2126, 0.7152, 0.0722)


def decode_image(data: bytes) -> RgbImage:
    """Decode a PNG or JPEG byte stream into a normalized RgbImage.

    8-bit samples map to v/255, 16-bit PNG samples to v/65535. Grayscale
    sources are replicated across the three channels. Anything else
    (other containers, exotic bit depths, truncated streams) raises
    DecodeError.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in ("PNG", "JPEG"):
                raise DecodeError(f"unsupported format: {im.format}")
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64)
                if arr.max(initial=0.0) > 65535.0:
                    raise DecodeError(f"unsupported bit depth for mode {mode}")
                arr = arr / 65535.0
                arr = np.repeat(arr[:, :, np.newaxis], 3, axis=2)
            else:
                if mode not in ("RGB", "L"):
                    im = im.convert("RGB")
                arr = np.asarray(im, dtype=np.float64) / 255.0
                if arr.ndim == 2:
                    arr = np.repeat(arr[:, :, np.newaxis], 3, axis=2)
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    return RgbImage(np.clip(arr, 0.0, 1.0))


def encode_image(img: GrayImage | RgbImage, format: str = "png", bit_depth: int = 8) -> bytes:
    """Encode to PNG (8- or 16-bit) or JPEG (8-bit) bytes.

    16-bit output is only supported for single-channel PNG; that is the
    path synthetic charts use to avoid quantizing their edge profile.
    """
    fmt = format.lower().lstrip(".")
    if fmt in ("jpg", "jpeg"):
        if bit_depth != 8:
            raise DomainError("jpeg output is 8-bit only")
        pil = Image.fromarray(_to_uint8(img), mode="RGB" if isinstance(img, RgbImage) else "L")
        buf = io.BytesIO()
        pil.save(buf, format="JPEG", quality=95)
        return buf.getvalue()
    if fmt != "png":
        raise DomainError(f"unsupported output format: {format}")
    if bit_depth == 8:
        pil = Image.fromarray(_to_uint8(img), mode="RGB" if isinstance(img, RgbImage) else "L")
    elif bit_depth == 16:
        if not isinstance(img, GrayImage):
            raise DomainError("16-bit output is limited to gray images")
        samples = np.rint(img.data * 65535.0).astype(np.uint16)
        pil = Image.fromarray(samples)  # uint16 -> mode I;16
    else:
        raise DomainError(f"unsupported bit depth: {bit_depth}")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def _to_uint8(img: GrayImage | RgbImage) -> np.ndarray:
    return np.rint(img.data * 255.0).astype(np.uint8)


def load_image(path: str | Path) -> RgbImage:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return decode_image(raw)


def save_image(path: str | Path, img: GrayImage | RgbImage, bit_depth: int = 8) -> None:
    path = Path(path)
    data = encode_image(img, format=path.suffix.lstrip(".") or "png", bit_depth=bit_depth)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def to_luma(img: RgbImage, weights: LumaWeights = REC709, gamma: float = 1.0) -> GrayImage:
    """Weighted channel sum, optionally applying a power-law exponent first.

    No transfer-function linearization happens unless a gamma other than
    1.0 is passed; sources are treated as already being in the working
    space.
    """
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise DomainError("gamma must be a positive finite exponent")
    data = img.data
    if gamma != 1.0:
        data = np.power(data, gamma)
    luma = data[:, :, 0] * weights.wr + data[:, :, 1] * weights.wg + data[:, :, 2] * weights.wb
    return GrayImage(np.clip(luma, 0.0, 1.0))


def load_gray(path: str | Path, weights: LumaWeights = REC709, gamma: float = 1.0) -> GrayImage:
    return to_luma(load_image(path), weights, gamma)


def transpose(img: GrayImage | RgbImage):
    """Swap the image axes. Applying it twice returns the original."""
    if isinstance(img, GrayImage):
        return GrayImage(img.data.T)
    return RgbImage(np.transpose(img.data, (1, 0, 2)))
