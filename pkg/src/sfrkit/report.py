"""Dataset-level aggregation and report rendering.

Vertical-edge regions probe horizontal resolution and feed the HMTF50
column; horizontal-edge regions feed VMTF50. Variant summaries, percent
changes against the first (baseline) variant, and optional detection
metrics are rendered as a CSV table, a JSON summary, and one hand-built
SVG scatter per detection model.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .degrade import kernel_size
from .errors import DomainError, EmptyInputError, IoError
from .esfr import STATUS_OK, RegionMeasurement
from .harvest import Orientation

WEIGHT_BY_REGION = "region"
WEIGHT_BY_IMAGE = "image"


@dataclass(frozen=True)
class DatasetSummary:
    """Sharpness of one dataset variant, split by edge orientation."""

    variant: str
    hmtf50_mean: float | None
    vmtf50_mean: float | None
    mtf50_mean: float
    n_h: int
    n_v: int
    n_absent: int

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "hmtf50_mean": self.hmtf50_mean,
            "vmtf50_mean": self.vmtf50_mean,
            "mtf50_mean": self.mtf50_mean,
            "n_h": self.n_h,
            "n_v": self.n_v,
            "n_absent": self.n_absent,
        }


def _measurement_row(m) -> tuple[str, tuple, str, str, float | None]:
    """Normalize a RegionMeasurement or a parsed JSON row to
    (source, origin, orientation value, status, mtf50)."""
    if isinstance(m, RegionMeasurement):
        return (m.source, tuple(m.origin), m.orientation.value, m.status, m.mtf50)
    return (m.get("source", ""), tuple(m.get("origin", ())),
            str(m.get("orientation", "")), m.get("status", STATUS_OK), m.get("mtf50"))


def aggregate(measurements, variant: str, weighting: str = WEIGHT_BY_REGION) -> DatasetSummary:
    """Collapse region measurements into one DatasetSummary.

    ``weighting`` selects whether every region counts equally or every
    source image counts equally (regions averaged per image first).
    Raises EmptyInputError when nothing usable is present.
    """
    if weighting not in (WEIGHT_BY_REGION, WEIGHT_BY_IMAGE):
        raise DomainError(f"unknown weighting: {weighting!r}")
    # None mtf50 (no half-power crossing) must not break the ordering.
    rows = sorted((_measurement_row(m) for m in measurements),
                  key=lambda r: (r[:4], r[4] is not None, r[4] or 0.0))
    per_orientation: dict[str, list[tuple[str, float]]] = {
        Orientation.VERTICAL.value: [], Orientation.HORIZONTAL.value: []}
    n_absent = 0
    for source, _origin, orientation, status, mtf50 in rows:
        if status != STATUS_OK:
            continue
        if mtf50 is None:
            n_absent += 1
            continue
        if orientation in per_orientation:
            per_orientation[orientation].append((source, float(mtf50)))

    def mean_of(pairs: list[tuple[str, float]]) -> float | None:
        if not pairs:
            return None
        if weighting == WEIGHT_BY_REGION:
            return math.fsum(v for _, v in pairs) / len(pairs)
        by_image: dict[str, list[float]] = {}
        for source, value in pairs:
            by_image.setdefault(source, []).append(value)
        means = [math.fsum(vs) / len(vs) for _, vs in sorted(by_image.items())]
        return math.fsum(means) / len(means)

    h_pairs = per_orientation[Orientation.VERTICAL.value]
    v_pairs = per_orientation[Orientation.HORIZONTAL.value]
    hmean = mean_of(h_pairs)
    vmean = mean_of(v_pairs)
    if hmean is None and vmean is None:
        raise EmptyInputError(f"variant {variant!r} has no measurable regions")
    if hmean is not None and vmean is not None:
        overall = (hmean + vmean) / 2.0
    else:
        overall = hmean if hmean is not None else vmean
    return DatasetSummary(variant=variant, hmtf50_mean=hmean, vmtf50_mean=vmean,
                          mtf50_mean=float(overall), n_h=len(h_pairs), n_v=len(v_pairs),
                          n_absent=n_absent)


def percent_delta(baseline: DatasetSummary, variant: DatasetSummary) -> dict[str, float | None]:
    """Percent change of each column against the baseline summary."""

    def delta(b: float | None, v: float | None) -> float | None:
        if b is None or v is None:
            return None
        if b == 0.0:
            raise DomainError("baseline value is zero; percent change is undefined")
        return 100.0 * (v - b) / b

    return {
        "hmtf50": delta(baseline.hmtf50_mean, variant.hmtf50_mean),
        "vmtf50": delta(baseline.vmtf50_mean, variant.vmtf50_mean),
        "mtf50_mean": delta(baseline.mtf50_mean, variant.mtf50_mean),
    }


@dataclass(frozen=True)
class DetectionRecord:
    """Detection quality of one model on one dataset variant."""

    model: str
    variant: str
    map_50_95: float
    map_50: float
    map_75: float
    map_s: float
    map_m: float
    map_l: float

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "variant": self.variant,
            "map_50_95": self.map_50_95,
            "map_50": self.map_50,
            "map_75": self.map_75,
            "map_s": self.map_s,
            "map_m": self.map_m,
            "map_l": self.map_l,
        }


def read_detections(path: str | Path) -> list[DetectionRecord]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed detection metrics {path}: {exc}") from exc
    if not isinstance(payload, list):
        raise DomainError("detection metrics must be a JSON array")
    records = []
    for i, row in enumerate(payload):
        try:
            records.append(DetectionRecord(
                model=str(row["model"]), variant=str(row["variant"]),
                map_50_95=float(row["map_50_95"]), map_50=float(row["map_50"]),
                map_75=float(row["map_75"]), map_s=float(row["map_s"]),
                map_m=float(row["map_m"]), map_l=float(row["map_l"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"detection record {i} is invalid: {exc}") from exc
    return records


def robustness_deltas(records: list[DetectionRecord]) -> list[dict]:
    """Per-model spread of map_50_95 across variants: 100*(max-min)/max.

    Every model must appear under at least two variants.
    """
    by_model: dict[str, list[float]] = {}
    for record in records:
        by_model.setdefault(record.model, []).append(record.map_50_95)
    if not by_model:
        raise DomainError("no detection records to compare")
    out = []
    for model, values in sorted(by_model.items()):
        if len(values) < 2:
            raise DomainError(f"model {model!r} needs at least 2 variants, has {len(values)}")
        top, bottom = max(values), min(values)
        if top == 0.0:
            raise DomainError(f"model {model!r} has zero max map_50_95")
        out.append({"model": model, "delta_pct": 100.0 * (top - bottom) / top,
                    "map_max": top, "map_min": bottom, "n_variants": len(values)})
    return out


def _variant_sigma_kernel(label: str) -> tuple[str, str]:
    match = re.fullmatch(r"sigma([0-9]+(?:\.[0-9]+)?)", label)
    if not match:
        return label, "-"
    text = match.group(1)
    sigma = float(text)
    k = kernel_size(sigma)
    pretty = str(int(sigma)) if sigma == int(sigma) else text
    return pretty, f"{k}x{k}"


def _fmt_cy(value: float | None) -> str:
    return "-" if value is None else f"{value:.3f}"


def _fmt_pct(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def render_reports(summaries: list[DatasetSummary], out_dir: str | Path,
                   detections: list[DetectionRecord] | None = None) -> list[Path]:
    """Write table1.csv, summary.json, and per-model SVG scatter plots.

    The first summary is the baseline all percent columns compare
    against. Returns the paths written, in a fixed order.
    """
    if not summaries:
        raise EmptyInputError("no variant summaries to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc

    baseline = summaries[0]
    deltas = [None] + [percent_delta(baseline, s) for s in summaries[1:]]
    written: list[Path] = []

    csv_path = out / "table1.csv"
    with csv_path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["sigma", "kernel", "HMTF50", "H%", "VMTF50", "V%",
                         "MTF50mean", "mean%"])
        for summary, delta in zip(summaries, deltas):
            sigma, kernel = _variant_sigma_kernel(summary.variant)
            writer.writerow([
                sigma, kernel,
                _fmt_cy(summary.hmtf50_mean), _fmt_pct(delta["hmtf50"] if delta else None),
                _fmt_cy(summary.vmtf50_mean), _fmt_pct(delta["vmtf50"] if delta else None),
                _fmt_cy(summary.mtf50_mean), _fmt_pct(delta["mtf50_mean"] if delta else None),
            ])
    written.append(csv_path)

    variants_payload = []
    for summary, delta in zip(summaries, deltas):
        row = summary.to_dict()
        row["pct_vs_baseline"] = delta
        sigma, kernel = _variant_sigma_kernel(summary.variant)
        row["display"] = {
            "sigma": sigma, "kernel": kernel,
            "hmtf50": _fmt_cy(summary.hmtf50_mean),
            "vmtf50": _fmt_cy(summary.vmtf50_mean),
            "mtf50_mean": _fmt_cy(summary.mtf50_mean),
            "pct": {
                "hmtf50": _fmt_pct(delta["hmtf50"] if delta else None),
                "vmtf50": _fmt_pct(delta["vmtf50"] if delta else None),
                "mtf50_mean": _fmt_pct(delta["mtf50_mean"] if delta else None),
            },
        }
        variants_payload.append(row)
    summary_payload: dict = {"variants": variants_payload}
    if detections:
        summary_payload["detections"] = [r.to_dict() for r in detections]
        summary_payload["robustness"] = robustness_deltas(detections)
    json_path = out / "summary.json"
    json_path.write_text(json.dumps(summary_payload, sort_keys=True, indent=2) + "\n")
    written.append(json_path)

    if detections:
        mean_by_variant = {s.variant: s.mtf50_mean for s in summaries}
        by_model: dict[str, list[tuple[float, float]]] = {}
        for record in detections:
            if record.variant in mean_by_variant:
                by_model.setdefault(record.model, []).append(
                    (mean_by_variant[record.variant], record.map_50_95))
        for model, points in sorted(by_model.items()):
            svg_path = out / f"{_slug(model)}.svg"
            svg_path.write_text(_svg_scatter(model, sorted(points)))
            written.append(svg_path)
    return written


def _slug(name: str) -> str:
    text = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    return text or "model"


def _xml_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _svg_scatter(model: str, points: list[tuple[float, float]]) -> str:
    """Self-contained 640x480 scatter of detection quality vs sharpness.

    Points arrive sorted by x. Each circle carries its data values as
    attributes so reports stay machine-checkable.
    """
    width, height = 640, 480
    left, right, top, bottom = 80, 620, 50, 420
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_min, x_max = 0.0, (max(xs) * 1.1 if xs else 1.0)
    if x_max <= x_min:
        x_max = x_min + 1.0
    y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    y_pad = max((y_hi - y_lo) * 0.15, 0.5)
    y_min, y_max = y_lo - y_pad, y_hi + y_pad

    def sx(v: float) -> float:
        return left + (v - x_min) / (x_max - x_min) * (right - left)

    def sy(v: float) -> float:
        return bottom - (v - y_min) / (y_max - y_min) * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{(left + right) / 2:.1f}" y="28" text-anchor="middle" '
        f'font-family="sans-serif" font-size="18">{_xml_escape(model)}</text>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for i in range(5):
        fx = x_min + (x_max - x_min) * i / 4
        px = sx(fx)
        parts.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 6}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{bottom + 22}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{fx:.3f}</text>')
        fy = y_min + (y_max - y_min) * i / 4
        py = sy(fy)
        parts.append(f'<line x1="{left - 6}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{left - 10}" y="{py + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="12">{fy:.1f}</text>')
    parts.append(f'<text x="{(left + right) / 2:.1f}" y="{height - 14}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="14">MTF50 mean (cycles/pixel)</text>')
    parts.append(f'<text x="20" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="14" '
                 f'transform="rotate(-90 20 {(top + bottom) / 2:.1f})">mAP@[.5:.95]</text>')
    if len(points) > 1:
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
        parts.append(f'<polyline points="{path}" fill="none" stroke="#4477aa" '
                     f'stroke-width="1.5"/>')
    for x, y in points:
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="5" fill="#4477aa" '
                     f'data-mtf50="{x:.6g}" data-map="{y:.6g}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
