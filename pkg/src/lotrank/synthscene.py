"""Synthetic 3 m parking-lot chips with known occupancy, the verification bed.

A lot is a rectangle of 3 m x 6 m parking slots. Occupied slots get a 2 m x
5 m car whose reflectance comes from a dark/bright mixture; the scene is
rendered on a 0.5 m grid, box-averaged to 3 m pixels, brightness-jittered,
and corrupted with per-pixel Gaussian noise. Everything is driven by
splitmix64 streams, so a config plus seed reproduces pixel-identical chips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

import numpy as np

from .chipstore import write_chip
from .geodata import ParkingLot, SizeClass, classify_size, parking_collection_to_geojson
from .geomath import GeoPoint, PolygonGeom, meters_per_degree
from .imaging import GeoTransform, ImageChip
from .ioutil import atomic_write_text, dump_json
from .rng import SplitMix64, derive_seed

EPOCH_SATURDAY = Date(2023, 6, 3)

# Area sampling bands per class, kept clear of the 5,000/10,000 sqm boundaries
# so geometry snapping can never flip a lot's class. Large stays within a
# 64 px chip at 3 m GSD.
SIZE_BANDS_SQM: dict[SizeClass, tuple[float, float]] = {
    SizeClass.SMALL: (2_000.0, 4_700.0),
    SizeClass.MEDIUM: (5_500.0, 9_500.0),
    SizeClass.LARGE: (11_500.0, 21_000.0),
}
ASPECT_RANGE = (0.65, 1.55)

DEFAULT_RHO_SAT = (0.6, 0.95)
DEFAULT_RHO_SUN = (0.0, 0.25)


@dataclass(frozen=True)
class SceneConfig:
    width_m: float
    height_m: float
    occupancy: float
    seed: int
    bands: int = 4
    mu_bg: float = 0.35
    car_dark: tuple[float, float] = (0.08, 0.18)
    car_bright: tuple[float, float] = (0.45, 0.70)
    p_dark: float = 0.7
    noise_sigma: float = 0.02
    jitter_range: tuple[float, float] = (0.95, 1.05)
    native_gsd: float = 0.5
    output_gsd: float = 3.0
    car_w_m: float = 2.0
    car_l_m: float = 5.0
    slot_w_m: float = 3.0
    slot_l_m: float = 6.0

    def __post_init__(self):
        if not 0.0 <= self.occupancy <= 1.0:
            raise ValueError(f"occupancy must be in [0, 1], got {self.occupancy}")
        factor = self.output_gsd / self.native_gsd
        if abs(factor - round(factor)) > 1e-9:
            raise ValueError("native GSD must divide output GSD")
        for lo, hi in (self.car_dark, self.car_bright):
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError("car reflectance ranges must sit inside [0, 1]")
        if not 0.0 <= self.mu_bg <= 1.0:
            raise ValueError("background reflectance must sit inside [0, 1]")

    @property
    def downsample(self) -> int:
        return round(self.output_gsd / self.native_gsd)


@dataclass(frozen=True)
class GroundTruth:
    occupancy: float
    car_count: int
    n_slots: int


@dataclass
class SeriesRecord:
    date: Date
    occupancy: float
    chip: ImageChip


@dataclass
class SyntheticSeries:
    lot_id: str
    size_class: SizeClass
    width_m: float
    height_m: float
    n_slots: int
    polygon: PolygonGeom
    epsilon: float
    records: list[SeriesRecord] = field(default_factory=list)
    flipped_weekends: list[bool] = field(default_factory=list)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _snap(meters: float, grid: float) -> float:
    return round(meters / grid) * grid


def slot_grid(config: SceneConfig) -> tuple[int, int]:
    """(columns, rows) of whole slots that fit in the lot rectangle."""
    return int(config.width_m // config.slot_w_m), int(config.height_m // config.slot_l_m)


def _render_arrays(config: SceneConfig) -> tuple[np.ndarray, np.ndarray, GroundTruth]:
    """(native float64 scene, 3 m bands before clamping, ground truth).

    The chip has a one-output-pixel background margin around the lot
    rectangle; lot dimensions are snapped to the native grid upstream.
    """
    rng = SplitMix64(config.seed)
    down = config.downsample
    out_w = math.ceil(config.width_m / config.output_gsd) + 2
    out_h = math.ceil(config.height_m / config.output_gsd) + 2
    native = np.full((out_h * down, out_w * down), config.mu_bg, dtype=np.float64)

    n_cols, n_rows = slot_grid(config)
    n_slots = n_cols * n_rows
    car_count = _round_half_up(config.occupancy * n_slots)

    # Draw order is pinned: full slot permutation, per-slot car reflectance,
    # jitter, then noise. Same seed => nested occupied sets across occupancies.
    permutation = rng.sample_indices(n_slots, n_slots) if n_slots else []
    choices = rng.uniform_array(n_slots) if n_slots else np.empty(0)
    values = rng.uniform_array(n_slots) if n_slots else np.empty(0)
    dark_lo, dark_hi = config.car_dark
    bright_lo, bright_hi = config.car_bright
    car_values = np.where(
        choices < config.p_dark,
        dark_lo + (dark_hi - dark_lo) * values,
        bright_lo + (bright_hi - bright_lo) * values,
    )

    slot_w_px = round(config.slot_w_m / config.native_gsd)
    slot_l_px = round(config.slot_l_m / config.native_gsd)
    car_w_px = round(config.car_w_m / config.native_gsd)
    car_l_px = round(config.car_l_m / config.native_gsd)
    off_x = down + (slot_w_px - car_w_px) // 2
    off_y = down + (slot_l_px - car_l_px) // 2
    for slot in permutation[:car_count]:
        r, c = divmod(slot, n_cols)
        row0 = off_y + r * slot_l_px
        col0 = off_x + c * slot_w_px
        native[row0 : row0 + car_l_px, col0 : col0 + car_w_px] = car_values[slot]

    jitter = rng.uniform(*config.jitter_range)
    base = native.reshape(out_h, down, out_w, down).mean(axis=(1, 3)) * jitter
    bands = np.broadcast_to(base, (config.bands, out_h, out_w)).copy()
    if config.noise_sigma > 0.0:
        noise = rng.normal_array(config.bands * out_h * out_w, sigma=config.noise_sigma)
        bands += noise.reshape(config.bands, out_h, out_w)
    truth = GroundTruth(occupancy=config.occupancy, car_count=car_count, n_slots=n_slots)
    return native, bands, truth


def lot_polygon(config: SceneConfig, anchor_lon: float, anchor_lat: float) -> PolygonGeom:
    """Lot rectangle in lon/lat; the anchor is the chip's top-left corner."""
    m_lat, m_lon = meters_per_degree(anchor_lat)
    margin = config.output_gsd

    def corner(x_m: float, y_m: float) -> GeoPoint:
        return GeoPoint(anchor_lon + x_m / m_lon, anchor_lat - y_m / m_lat)

    w, h = config.width_m, config.height_m
    return PolygonGeom(
        exterior=[
            corner(margin, margin),
            corner(margin + w, margin),
            corner(margin + w, margin + h),
            corner(margin, margin + h),
        ]
    )


def chip_geotransform(config: SceneConfig, anchor_lon: float, anchor_lat: float) -> GeoTransform:
    m_lat, m_lon = meters_per_degree(anchor_lat)
    half = config.output_gsd / 2.0
    return GeoTransform(
        origin_lon=anchor_lon + half / m_lon,
        origin_lat=anchor_lat - half / m_lat,
        dlon=config.output_gsd / m_lon,
        dlat=-config.output_gsd / m_lat,
    )


def render_lot(
    config: SceneConfig,
    lot_id: str = "synth",
    capture_date: Date | None = None,
    anchor_lon: float = 8.0,
    anchor_lat: float = 50.0,
) -> tuple[ImageChip, GroundTruth]:
    """Render one chip; deterministic in (config, anchor)."""
    _, bands, truth = _render_arrays(config)
    chip = ImageChip(
        lot_id=lot_id,
        capture_date=capture_date,
        pixels=np.clip(bands, 0.0, 1.0).astype(np.float32),
        gsd_m=config.output_gsd,
        geotransform=chip_geotransform(config, anchor_lon, anchor_lat),
    )
    return chip, truth


def occupancy_contrast(chip_lo: ImageChip, chip_hi: ImageChip, footprint: np.ndarray, mu_bg: float = 0.35) -> float:
    """Mean absolute luminance deviation from background, high-occupancy minus low."""

    def mad(chip: ImageChip) -> float:
        luminance = chip.pixels.mean(axis=0, dtype=np.float64)[footprint]
        return float(np.abs(luminance - mu_bg).mean())

    return mad(chip_hi) - mad(chip_lo)


def sample_geometry(size_class: SizeClass, rng: SplitMix64, native_gsd: float = 0.5) -> tuple[float, float]:
    """Lot rectangle (width_m, height_m) for a size class, snapped to the native grid."""
    area = rng.uniform(*SIZE_BANDS_SQM[size_class])
    aspect = rng.uniform(*ASPECT_RANGE)
    width = _snap(math.sqrt(area * aspect), native_gsd)
    height = _snap(area / width, native_gsd)
    return width, height


def gen_weekend_series(
    size_class: SizeClass,
    n_weekends: int,
    epsilon: float = 0.0,
    seed: int = 0,
    lot_id: str = "synth-000",
    rho_sat: tuple[float, float] = DEFAULT_RHO_SAT,
    rho_sun: tuple[float, float] = DEFAULT_RHO_SUN,
    anchor_lon: float = 8.0,
    anchor_lat: float = 50.0,
    **scene_overrides,
) -> SyntheticSeries:
    """Saturday/Sunday chips for one lot with an epsilon chance per weekend of
    swapping the two occupancies (the weak-label corruption knob)."""
    if n_weekends < 1:
        raise ValueError("need at least one weekend")
    if not 0.0 <= epsilon < 0.5:
        raise ValueError(f"epsilon must be in [0, 0.5), got {epsilon}")
    rng = SplitMix64(seed)
    width_m, height_m = sample_geometry(size_class, rng)

    records: list[SeriesRecord] = []
    flipped: list[bool] = []
    base_config = None
    for w in range(n_weekends):
        rho_saturday = rng.uniform(*rho_sat)
        rho_sunday = rng.uniform(*rho_sun)
        flip = rng.uniform() < epsilon
        if flip:
            rho_saturday, rho_sunday = rho_sunday, rho_saturday
        flipped.append(flip)
        saturday = EPOCH_SATURDAY + timedelta(weeks=w)
        for day_offset, rho in ((0, rho_saturday), (1, rho_sunday)):
            config = SceneConfig(
                width_m=width_m,
                height_m=height_m,
                occupancy=rho,
                seed=derive_seed(seed, 2 * w + day_offset + 1),
                **scene_overrides,
            )
            base_config = config
            chip, _ = render_lot(
                config, lot_id=lot_id, capture_date=saturday + timedelta(days=day_offset),
                anchor_lon=anchor_lon, anchor_lat=anchor_lat,
            )
            records.append(SeriesRecord(date=chip.capture_date, occupancy=rho, chip=chip))

    n_cols, n_rows = slot_grid(base_config)
    return SyntheticSeries(
        lot_id=lot_id,
        size_class=size_class,
        width_m=width_m,
        height_m=height_m,
        n_slots=n_cols * n_rows,
        polygon=lot_polygon(base_config, anchor_lon, anchor_lat),
        epsilon=epsilon,
        records=records,
        flipped_weekends=flipped,
    )


def gen_period_series(
    size_class: SizeClass,
    n_pre: int,
    n_post: int,
    seed: int = 0,
    lot_id: str = "synth-shift",
    rho_pre: tuple[float, float] = DEFAULT_RHO_SAT,
    rho_post: tuple[float, float] = DEFAULT_RHO_SUN,
    start_date: Date = Date(2023, 4, 1),
    anchor_lon: float = 32.5,
    anchor_lat: float = 15.5,
    **scene_overrides,
) -> SyntheticSeries:
    """Consecutive-date series with a sharp occupancy drop after n_pre dates,
    the harness for the pre/post ranking analysis."""
    if n_pre < 1 or n_post < 1:
        raise ValueError("need at least one date in each period")
    rng = SplitMix64(seed)
    width_m, height_m = sample_geometry(size_class, rng)
    records: list[SeriesRecord] = []
    config = None
    for i in range(n_pre + n_post):
        rho = rng.uniform(*(rho_pre if i < n_pre else rho_post))
        config = SceneConfig(
            width_m=width_m, height_m=height_m, occupancy=rho,
            seed=derive_seed(seed, i + 1), **scene_overrides,
        )
        chip, _ = render_lot(
            config, lot_id=lot_id, capture_date=start_date + timedelta(days=i),
            anchor_lon=anchor_lon, anchor_lat=anchor_lat,
        )
        records.append(SeriesRecord(date=chip.capture_date, occupancy=rho, chip=chip))

    n_cols, n_rows = slot_grid(config)
    return SyntheticSeries(
        lot_id=lot_id,
        size_class=size_class,
        width_m=width_m,
        height_m=height_m,
        n_slots=n_cols * n_rows,
        polygon=lot_polygon(config, anchor_lon, anchor_lat),
        epsilon=0.0,
        records=records,
        flipped_weekends=[],
    )


def gen_benchmark(
    out_dir: Path | str,
    lots_per_class: int,
    n_weekends: int,
    epsilon: float,
    seed: int,
    **scene_overrides,
) -> dict:
    """Write a full synthetic dataset: chip store, lots.geojson, manifest.

    Per-lot seeds are the benchmark seed mixed with a global lot index via
    splitmix64. Output is byte-identical for identical arguments.
    """
    out_dir = Path(out_dir)
    lot_entries = []
    chip_entries = []
    lots: list[ParkingLot] = []
    lot_counter = 0
    for size_class in (SizeClass.LARGE, SizeClass.MEDIUM, SizeClass.SMALL):
        for k in range(lots_per_class):
            lot_id = f"synth-{size_class.value}-{k:03d}"
            # Spread lots across distinct anchors so spatial queries stay meaningful.
            anchor_lon = 8.0 + 0.02 * (lot_counter % 40)
            anchor_lat = 48.0 + 0.02 * (lot_counter // 40)
            series = gen_weekend_series(
                size_class,
                n_weekends,
                epsilon=epsilon,
                seed=derive_seed(seed, lot_counter),
                lot_id=lot_id,
                anchor_lon=anchor_lon,
                anchor_lat=anchor_lat,
                **scene_overrides,
            )
            tags = {"amenity": "parking", "parking": "surface", "access": "customers"}
            lot = ParkingLot.from_geometry(lot_id, series.polygon, tags)
            if lot.size_class != size_class:
                raise AssertionError(f"{lot_id}: sampled area {lot.area_sqm} left class {size_class}")
            lots.append(lot)
            lot_entries.append(
                {
                    "lot_id": lot_id,
                    "size_class": size_class.value,
                    "width_m": series.width_m,
                    "height_m": series.height_m,
                    "n_slots": series.n_slots,
                    "area_sqm": lot.area_sqm,
                    "flipped_weekends": series.flipped_weekends,
                }
            )
            for w, record in enumerate(series.records):
                mask = np.zeros((record.chip.height, record.chip.width), dtype=np.uint8)
                write_chip(out_dir, record.chip, mask)
                chip_entries.append(
                    {
                        "lot_id": lot_id,
                        "date": record.date.isoformat(),
                        "rho_true": record.occupancy,
                        "weekend": w // 2,
                        "flipped": series.flipped_weekends[w // 2],
                    }
                )
            lot_counter += 1

    manifest = {
        "seed": seed,
        "epsilon": epsilon,
        "n_weekends": n_weekends,
        "lots_per_class": lots_per_class,
        "lots": lot_entries,
        "chips": chip_entries,
    }
    atomic_write_text(out_dir / "synth_manifest.json", dump_json(manifest) + "\n")
    (out_dir / "lots.geojson").parent.mkdir(parents=True, exist_ok=True)
    from .ioutil import atomic_write_bytes

    atomic_write_bytes(out_dir / "lots.geojson", parking_collection_to_geojson(lots))
    return manifest
