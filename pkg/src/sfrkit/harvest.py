"""Slanted-edge region harvesting from arbitrary grayscale images.

The detector looks for long, clean, slightly slanted step edges: strong
gradient ridges whose direction stays consistent, whose per-line
centroids sit on a straight line, and whose flanks are uniform. Each
accepted site becomes an EdgeRegion carrying the pixel window later fed
to the measurement stage.

Near-vertical edges produce ``Orientation.VERTICAL`` regions (they
modulate horizontally and probe horizontal resolution); near-horizontal
edges are handled by transposing, so both paths share one code route.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import parallel
from .errors import DecodeError, DomainError, IoError
from .imgcore import REC709, GrayImage, LumaWeights, load_gray

_STRONG_FRACTION = 0.25   # gradient magnitude cut, relative to image max
_BLANK_FLOOR = 1e-6       # below this max gradient an image counts as blank
_MIN_LINE_FRACTION = 0.8  # fraction of window lines that must carry signal


class Orientation(str, Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"

    def flipped(self) -> "Orientation":
        return Orientation.HORIZONTAL if self is Orientation.VERTICAL else Orientation.VERTICAL


@dataclass(frozen=True)
class HarvestCriteria:
    """Acceptance thresholds for candidate edges. All are configurable
    and all are recorded in harvest output metadata."""

    min_angle_deg: float = 2.0
    max_angle_deg: float = 43.0
    roi_width: int = 32
    roi_length: int = 64
    min_contrast: float = 0.20
    min_linefit_r2: float = 0.95
    max_regions_per_image: int = 50

    def __post_init__(self):
        if not 0.0 < self.min_angle_deg < self.max_angle_deg <= 44.0:
            raise DomainError("angle band must satisfy 0 < min < max <= 44 degrees")
        if self.roi_width < 16 or self.roi_length < self.roi_width:
            raise DomainError("roi must satisfy 16 <= roi_width <= roi_length")
        if not 0.0 < self.min_contrast < 1.0:
            raise DomainError("min_contrast must lie in (0, 1)")
        if not 0.0 < self.min_linefit_r2 < 1.0:
            raise DomainError("min_linefit_r2 must lie in (0, 1)")
        if self.max_regions_per_image < 1:
            raise DomainError("max_regions_per_image must be >= 1")

    def to_dict(self) -> dict:
        return {
            "min_angle_deg": self.min_angle_deg,
            "max_angle_deg": self.max_angle_deg,
            "roi_width": self.roi_width,
            "roi_length": self.roi_length,
            "min_contrast": self.min_contrast,
            "min_linefit_r2": self.min_linefit_r2,
            "max_regions_per_image": self.max_regions_per_image,
        }


@dataclass(frozen=True)
class EdgeRegion:
    """One harvested edge site.

    ``roi`` is the unrotated crop from the source image: vertical
    regions are roi_length tall and roi_width wide, horizontal regions
    the transpose of that. ``origin`` is the crop's top-left corner in
    (x, y) image coordinates and ``angle_deg`` the edge slant from the
    nearest image axis.
    """

    orientation: Orientation
    roi: GrayImage
    origin: tuple[int, int]
    angle_deg: float
    contrast: float
    linefit_r2: float
    source: str = ""

    def oriented_data(self) -> np.ndarray:
        """ROI pixels with the edge running near-vertically (each row
        crosses the edge once)."""
        if self.orientation is Orientation.VERTICAL:
            return self.roi.data
        return self.roi.data.T

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "origin": list(self.origin),
            "width": self.roi.width,
            "height": self.roi.height,
            "orientation": self.orientation.value,
            "angle_deg": self.angle_deg,
            "contrast": self.contrast,
            "r2": self.linefit_r2,
        }


def fit_edge_line(oriented: np.ndarray) -> tuple[float, float, float, int]:
    """Fit the edge trajectory across a near-vertical-edge window.

    Per row, the absolute central-difference profile is reduced to its
    centroid; a least-squares line x = slope * row + intercept is fit
    through the centroids. Returns (slope, intercept, r2, n_lines) where
    n_lines counts rows that carried any gradient signal.
    """
    deriv = 0.5 * (oriented[:, 2:] - oriented[:, :-2])
    weights = np.abs(deriv)
    totals = weights.sum(axis=1)
    valid = totals > 1e-12
    n_lines = int(valid.sum())
    if n_lines < 2:
        return 0.0, float(oriented.shape[1] / 2.0), 0.0, n_lines
    xs = np.arange(1, oriented.shape[1] - 1, dtype=np.float64)
    centroids = (weights[valid] * xs).sum(axis=1) / totals[valid]
    rows = np.nonzero(valid)[0].astype(np.float64)
    slope, intercept = np.polyfit(rows, centroids, 1)
    predicted = slope * rows + intercept
    ss_res = float(np.sum((centroids - predicted) ** 2))
    ss_tot = float(np.sum((centroids - centroids.mean()) ** 2))
    if ss_tot <= 1e-12:
        r2 = 1.0 if ss_res <= 1e-12 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(max(0.0, min(1.0, r2))), n_lines


def _flank_stats(oriented: np.ndarray, slope: float,
                 intercept: float) -> tuple[float, float, float, float] | None:
    """(low, high, left_std, right_std) for the window's two edge sides.

    Pixels are classified by signed distance from the fitted edge line,
    not by window column: splitting on raw columns would register the
    slant-induced drift of the transition as texture and reject clean
    but steeper edges. Levels come from the far quarter on each side;
    returns None when either far band is empty (edge badly off-center).
    """
    h, w = oriented.shape
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    dx = cols - (slope * rows + intercept)
    quarter = w / 4.0
    far_left = oriented[dx <= -quarter]
    far_right = oriented[dx >= quarter]
    if far_left.size == 0 or far_right.size == 0:
        return None
    lo, hi = sorted((float(far_left.mean()), float(far_right.mean())))
    left = oriented[dx < 0.0]
    right = oriented[dx >= 0.0]
    return lo, hi, float(left.std()), float(right.std())


def _candidate_windows(oriented_img: np.ndarray, mask: np.ndarray,
                       criteria: HarvestCriteria, rejections: Counter) -> list[dict]:
    """Scan one signed gradient-direction class for edge windows.

    ``oriented_img`` is arranged so candidate edges run near-vertically;
    coordinates in the result are in that oriented frame.
    """
    height, width = oriented_img.shape
    win_w, win_l = criteria.roi_width, criteria.roi_length
    if height < win_l or width < win_w:
        return []
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    found = []
    for index, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        if sl[0].stop - sl[0].start < win_l:
            rejections["short_segment"] += 1
            continue
        ys, xs = np.nonzero(labels[sl] == index)
        cy = float(ys.mean()) + sl[0].start
        cx = float(xs.mean()) + sl[1].start
        x0 = int(np.clip(round(cx) - win_w // 2, 0, width - win_w))
        y0 = int(np.clip(round(cy) - win_l // 2, 0, height - win_l))
        window = oriented_img[y0:y0 + win_l, x0:x0 + win_w]

        slope, intercept, r2, n_lines = fit_edge_line(window)
        if n_lines < _MIN_LINE_FRACTION * win_l:
            rejections["fit"] += 1
            continue
        angle = float(np.degrees(np.arctan(abs(slope))))
        if not criteria.min_angle_deg <= angle <= criteria.max_angle_deg:
            rejections["angle"] += 1
            continue
        if r2 < criteria.min_linefit_r2:
            rejections["linefit"] += 1
            continue
        flanks = _flank_stats(window, slope, intercept)
        if flanks is None:
            rejections["flank"] += 1
            continue
        lo, hi, std_left, std_right = flanks
        step = hi - lo
        contrast = step / (hi + lo) if hi + lo > 0.0 else 0.0
        if contrast < criteria.min_contrast:
            rejections["contrast"] += 1
            continue
        if std_left >= 0.25 * step or std_right >= 0.25 * step:
            rejections["flank"] += 1
            continue
        found.append({"x0": x0, "y0": y0, "angle": angle, "r2": r2,
                      "contrast": contrast, "window": window})
    return found


def _overlap_fraction(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    """Intersection area of two (x, y, w, h) rectangles over one window area."""
    ix = max(0, min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0]))
    iy = max(0, min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1]))
    return (ix * iy) / (a[2] * a[3])


def harvest_edges(img: GrayImage, criteria: HarvestCriteria = HarvestCriteria(),
                  *, rejections: Counter | None = None) -> list[EdgeRegion]:
    """Find measurable slanted-edge regions in one image.

    Returns regions sorted by descending contrast, deduplicated so no
    two windows overlap by more than a quarter of their area, and capped
    at ``criteria.max_regions_per_image``. Pass a Counter as
    ``rejections`` to collect per-reason rejection tallies.
    """
    if rejections is None:
        rejections = Counter()
    if img.height < criteria.roi_length or img.width < criteria.roi_length:
        return []
    g = img.data
    gx = np.zeros_like(g)
    gy = np.zeros_like(g)
    gx[:, 1:-1] = 0.5 * (g[:, 2:] - g[:, :-2])
    gy[1:-1, :] = 0.5 * (g[2:, :] - g[:-2, :])
    mag = np.hypot(gx, gy)
    top = float(mag.max())
    if top < _BLANK_FLOOR:
        return []
    strong = mag >= _STRONG_FRACTION * top
    ax, ay = np.abs(gx), np.abs(gy)

    candidates: list[dict] = []
    # Split by dominant axis, then by gradient sign so anti-parallel edge
    # pairs (thin bars) never merge into one segment. A 45-degree tie
    # belongs to neither class, which keeps transposition symmetric.
    for sign_mask in (gx > 0, gx < 0):
        for cand in _candidate_windows(g, strong & (ax > ay) & sign_mask, criteria, rejections):
            cand["orientation"] = Orientation.VERTICAL
            candidates.append(cand)
    gt = g.T
    for sign_mask in (gy > 0, gy < 0):
        oriented_mask = (strong & (ay > ax) & sign_mask).T
        for cand in _candidate_windows(gt, oriented_mask, criteria, rejections):
            cand["orientation"] = Orientation.HORIZONTAL
            candidates.append(cand)

    regions = []
    for cand in candidates:
        if cand["orientation"] is Orientation.VERTICAL:
            origin = (cand["x0"], cand["y0"])
            roi = GrayImage(cand["window"])
        else:
            # Oriented coordinates live in the transposed frame.
            origin = (cand["y0"], cand["x0"])
            roi = GrayImage(cand["window"].T)
        regions.append(EdgeRegion(
            orientation=cand["orientation"], roi=roi, origin=origin,
            angle_deg=cand["angle"], contrast=cand["contrast"], linefit_r2=cand["r2"]))

    regions.sort(key=_region_order)
    kept: list[EdgeRegion] = []
    for region in regions:
        rect = (region.origin[0], region.origin[1], region.roi.width, region.roi.height)
        if any(_overlap_fraction(rect, (k.origin[0], k.origin[1], k.roi.width, k.roi.height)) > 0.25
               for k in kept):
            rejections["overlap"] += 1
            continue
        if len(kept) >= criteria.max_regions_per_image:
            rejections["capacity"] += 1
            continue
        kept.append(region)
    return kept


def _region_order(region: EdgeRegion):
    return (-region.contrast, region.origin[1], region.origin[0], region.orientation.value)


@dataclass
class HarvestStats:
    """Batch accounting for harvest_dataset."""

    images_processed: int = 0
    decode_failures: list[dict] = field(default_factory=list)
    regions_per_image: dict[str, int] = field(default_factory=dict)
    rejections: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {
            "images_processed": self.images_processed,
            "decode_failures": self.decode_failures,
            "regions_per_image": self.regions_per_image,
            "rejections": dict(sorted(self.rejections.items())),
        }


def harvest_dataset(src_dir: str | Path, criteria: HarvestCriteria = HarvestCriteria(),
                    weights: LumaWeights = REC709, gamma: float = 1.0,
                    workers: int | None = None) -> tuple[list[EdgeRegion], HarvestStats]:
    """Harvest every decodable image under ``src_dir``.

    Regions come back ordered by (relative path, descending contrast);
    region ``source`` fields hold the path relative to ``src_dir``.
    Undecodable files are tallied, not raised.
    """
    from .degrade import list_images  # local import: avoids a module cycle

    src = Path(src_dir)
    files = list_images(src)

    def process(rel: Path):
        name = rel.as_posix()
        local = Counter()
        try:
            gray = load_gray(src / rel, weights, gamma)
        except (DecodeError, IoError) as exc:
            return name, None, local, str(exc)
        found = harvest_edges(gray, criteria, rejections=local)
        found = [EdgeRegion(orientation=r.orientation, roi=r.roi, origin=r.origin,
                            angle_deg=r.angle_deg, contrast=r.contrast,
                            linefit_r2=r.linefit_r2, source=name)
                 for r in found]
        return name, found, local, None

    stats = HarvestStats()
    regions: list[EdgeRegion] = []
    for name, found, local, error in parallel.map_ordered(process, files, workers):
        stats.rejections.update(local)
        if error is not None:
            stats.decode_failures.append({"path": name, "reason": error})
            continue
        stats.images_processed += 1
        stats.regions_per_image[name] = len(found)
        regions.extend(found)
    return regions, stats


def write_regions(path: str | Path, regions: list[EdgeRegion], stats: HarvestStats,
                  criteria: HarvestCriteria, weights: LumaWeights = REC709,
                  gamma: float = 1.0) -> None:
    """Serialize a harvest run; geometry plus the settings that shaped it."""
    payload = {
        "criteria": criteria.to_dict(),
        "luma": {"wr": weights.wr, "wg": weights.wg, "wb": weights.wb, "gamma": gamma},
        "stats": stats.to_dict(),
        "regions": [r.to_dict() for r in regions],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_regions(path: str | Path, root: str | Path) -> tuple[list[EdgeRegion], dict]:
    """Load a regions file, re-cropping each ROI from its source image.

    ``root`` is the directory the recorded relative source paths resolve
    against. Returns (regions, metadata).
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DecodeError(f"malformed regions file {path}: {exc}") from exc
    luma = payload.get("luma", {})
    weights = LumaWeights(luma.get("wr", REC709.wr), luma.get("wg", REC709.wg),
                          luma.get("wb", REC709.wb))
    gamma = luma.get("gamma", 1.0)
    root = Path(root)
    cache: dict[str, GrayImage] = {}
    regions = []
    for entry in payload.get("regions", []):
        name = entry["source"]
        if name not in cache:
            cache[name] = load_gray(root / name, weights, gamma)
        gray = cache[name]
        x0, y0 = entry["origin"]
        w, h = entry["width"], entry["height"]
        if y0 + h > gray.height or x0 + w > gray.width:
            raise DomainError(f"region at {entry['origin']} exceeds {name} bounds")
        regions.append(EdgeRegion(
            orientation=Orientation(entry["orientation"]),
            roi=GrayImage(gray.data[y0:y0 + h, x0:x0 + w]),
            origin=(int(x0), int(y0)),
            angle_deg=float(entry["angle_deg"]),
            contrast=float(entry["contrast"]),
            linefit_r2=float(entry["r2"]),
            source=name))
    return regions, payload
