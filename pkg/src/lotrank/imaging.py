"""Image chips, usable-data masks, and the per-lot quality-control pipeline.

QC runs three stages in order: full footprint coverage, footprint free of
cloud-like mask classes, and footprint brightness consistency measured as the
total variation distance between each chip's luminance histogram and the
median image's histogram. Each rejected chip carries the first failing stage
as its single rejection reason.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date as Date

import numpy as np

from .geomath import PolygonGeom, points_in_polygon_grid

DEFAULT_TV_THRESHOLD = 0.2
DEFAULT_HISTOGRAM_BINS = 64
MIN_CHIPS_FOR_MEDIAN = 3


class MaskClass(enum.IntEnum):
    CLEAR = 0
    SNOW = 1
    SHADOW = 2
    LIGHT_HAZE = 3
    HEAVY_HAZE = 4
    CLOUD = 5
    NODATA = 255


DEFAULT_REJECT_CLASSES = frozenset({MaskClass.CLOUD, MaskClass.HEAVY_HAZE, MaskClass.SHADOW})


class RejectReason(enum.Enum):
    COVERAGE = "coverage"
    CLOUD = "cloud"
    BRIGHTNESS = "brightness"


@dataclass(frozen=True)
class GeoTransform:
    """Lon/lat of the center of pixel (row 0, col 0) plus per-pixel degree steps."""

    origin_lon: float
    origin_lat: float
    dlon: float
    dlat: float

    def pixel_lons(self, width: int) -> np.ndarray:
        return self.origin_lon + self.dlon * np.arange(width)

    def pixel_lats(self, height: int) -> np.ndarray:
        return self.origin_lat + self.dlat * np.arange(height)


@dataclass
class ImageChip:
    lot_id: str
    capture_date: Date | None
    pixels: np.ndarray  # (bands, height, width) float32 reflectance in [0, 1]
    gsd_m: float
    geotransform: GeoTransform

    def __post_init__(self):
        if self.pixels.ndim != 3:
            raise ValueError(f"pixels must be (bands, H, W), got shape {self.pixels.shape}")
        if self.bands not in (4, 8):
            raise ValueError(f"band count must be 4 or 8, got {self.bands}")
        if self.gsd_m <= 0:
            raise ValueError("gsd_m must be positive")
        if not np.isfinite(self.pixels).all():
            raise ValueError("chip contains non-finite pixels")

    @property
    def bands(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]


def validate_mask(mask: np.ndarray, chip: ImageChip) -> None:
    if mask.shape != (chip.height, chip.width):
        raise ValueError(f"mask shape {mask.shape} does not match chip {chip.pixels.shape[1:]}")
    codes = {int(c) for c in MaskClass}
    bad = set(np.unique(mask).tolist()) - codes
    if bad:
        raise ValueError(f"mask contains unknown class codes {sorted(bad)}")


@dataclass
class LotImageStack:
    """Chips and masks of one lot, sorted by strictly increasing capture date."""

    lot_id: str
    items: list[tuple[ImageChip, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        dates = [chip.capture_date for chip, _ in self.items]
        if any(d is None for d in dates):
            raise ValueError("stack chips need capture dates")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("stack dates must be strictly increasing")
        shapes = {(chip.bands, chip.height, chip.width, chip.gsd_m) for chip, _ in self.items}
        if len(shapes) > 1:
            raise ValueError(f"stack chips disagree on shape/gsd: {sorted(shapes)}")
        for chip, mask in self.items:
            validate_mask(mask, chip)

    def __len__(self) -> int:
        return len(self.items)

    def dates(self) -> list[Date]:
        return [chip.capture_date for chip, _ in self.items]


def rasterize_footprint(polygon: PolygonGeom, geotransform: GeoTransform, height: int, width: int) -> np.ndarray:
    """Bool (H, W) grid of pixel centers inside the polygon (even-odd rule)."""
    footprint = points_in_polygon_grid(
        geotransform.pixel_lons(width), geotransform.pixel_lats(height), polygon
    )
    if not footprint.any():
        raise ValueError("polygon does not cover any pixel center")
    return footprint


def coverage_ok(chip: ImageChip, mask: np.ndarray, footprint: np.ndarray) -> bool:
    """True iff no footprint pixel is NoData."""
    validate_mask(mask, chip)
    return not bool(((mask == MaskClass.NODATA) & footprint).any())


def cloud_free(
    chip: ImageChip,
    mask: np.ndarray,
    footprint: np.ndarray,
    reject_classes: frozenset[MaskClass] = DEFAULT_REJECT_CLASSES,
) -> bool:
    """True iff no footprint pixel carries a rejected mask class."""
    validate_mask(mask, chip)
    rejected = np.isin(mask, [int(c) for c in reject_classes])
    return not bool((rejected & footprint).any())


def median_image(chips: list[ImageChip]) -> ImageChip:
    """Per-pixel, per-band median chip; even counts average the two middle values."""
    if len(chips) < MIN_CHIPS_FOR_MEDIAN:
        raise ValueError(f"median needs >= {MIN_CHIPS_FOR_MEDIAN} chips, got {len(chips)}")
    stacked = np.stack([chip.pixels for chip in chips])
    median = np.median(stacked, axis=0).astype(np.float32)
    first = chips[0]
    return ImageChip(
        lot_id=first.lot_id,
        capture_date=None,
        pixels=median,
        gsd_m=first.gsd_m,
        geotransform=first.geotransform,
    )


def luminance_histogram(chip: ImageChip, footprint: np.ndarray, bins: int = DEFAULT_HISTOGRAM_BINS) -> np.ndarray:
    """Normalized histogram of footprint luminance (per-pixel band mean).

    Equal-width bins over [0, 1); values >= 1 clamp into the top bin.
    """
    if not footprint.any():
        raise ValueError("empty footprint")
    luminance = chip.pixels.mean(axis=0, dtype=np.float64)[footprint]
    idx = np.clip((luminance * bins).astype(np.int64), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    return counts / counts.sum()


def histogram_distance(h1: np.ndarray, h2: np.ndarray) -> float:
    """Total variation distance between two histograms: 0.5 * L1."""
    if h1.shape != h2.shape:
        raise ValueError(f"histogram bin counts differ: {h1.shape} vs {h2.shape}")
    return 0.5 * float(np.abs(np.asarray(h1, dtype=np.float64) - np.asarray(h2, dtype=np.float64)).sum())


@dataclass(frozen=True)
class QcRejection:
    date: Date
    reason: RejectReason


@dataclass
class QcResult:
    kept: LotImageStack
    rejections: list[QcRejection]
    brightness_skipped: bool = False


def qc_pipeline(
    stack: LotImageStack,
    polygon: PolygonGeom,
    tv_threshold: float = DEFAULT_TV_THRESHOLD,
    reject_classes: frozenset[MaskClass] = DEFAULT_REJECT_CLASSES,
    bins: int = DEFAULT_HISTOGRAM_BINS,
) -> QcResult:
    """Coverage, cloud, and brightness filters over one lot's stack.

    The brightness stage compares each survivor's luminance histogram against
    the histogram of the median image over coverage+cloud survivors; with
    fewer than three survivors the stage is skipped and flagged.
    """
    if len(stack) == 0:
        raise ValueError("empty stack")
    first_chip = stack.items[0][0]
    footprint = rasterize_footprint(polygon, first_chip.geotransform, first_chip.height, first_chip.width)

    rejections: list[QcRejection] = []
    survivors: list[tuple[ImageChip, np.ndarray]] = []
    for chip, mask in stack.items:
        if not coverage_ok(chip, mask, footprint):
            rejections.append(QcRejection(chip.capture_date, RejectReason.COVERAGE))
        elif not cloud_free(chip, mask, footprint, reject_classes):
            rejections.append(QcRejection(chip.capture_date, RejectReason.CLOUD))
        else:
            survivors.append((chip, mask))

    brightness_skipped = False
    if len(survivors) < MIN_CHIPS_FOR_MEDIAN:
        brightness_skipped = True
        kept = survivors
    else:
        median = median_image([chip for chip, _ in survivors])
        median_hist = luminance_histogram(median, footprint, bins)
        kept = []
        for chip, mask in survivors:
            tv = histogram_distance(luminance_histogram(chip, footprint, bins), median_hist)
            if tv > tv_threshold:
                rejections.append(QcRejection(chip.capture_date, RejectReason.BRIGHTNESS))
            else:
                kept.append((chip, mask))

    rejections.sort(key=lambda r: r.date)
    return QcResult(
        kept=LotImageStack(lot_id=stack.lot_id, items=kept),
        rejections=rejections,
        brightness_skipped=brightness_skipped,
    )


def normalize_chip(chip: ImageChip, band_means: np.ndarray, band_stds: np.ndarray) -> np.ndarray:
    """(value - band mean) / band std per band; returns a float32 (B, H, W) tensor."""
    means = np.asarray(band_means, dtype=np.float32).reshape(-1, 1, 1)
    stds = np.asarray(band_stds, dtype=np.float32).reshape(-1, 1, 1)
    if means.shape[0] != chip.bands or stds.shape[0] != chip.bands:
        raise ValueError("band statistics do not match chip band count")
    if not (stds > 0).all():
        raise ValueError("band stds must be positive")
    return (chip.pixels - means) / stds


def compute_band_stats(chips_with_footprints) -> tuple[np.ndarray, np.ndarray]:
    """Per-band mean and population std over footprint pixels of training chips."""
    total = None
    total_sq = None
    count = 0
    for chip, footprint in chips_with_footprints:
        values = chip.pixels[:, footprint].astype(np.float64)  # (B, n_px)
        if total is None:
            total = values.sum(axis=1)
            total_sq = (values**2).sum(axis=1)
        else:
            total += values.sum(axis=1)
            total_sq += (values**2).sum(axis=1)
        count += values.shape[1]
    if count == 0:
        raise ValueError("no footprint pixels to compute statistics from")
    means = total / count
    variance = np.maximum(total_sq / count - means**2, 0.0)
    return means, np.sqrt(variance)
