"""Turning a normalized chip into the fixed-size model input tensor.

The footprint bounding box is cropped out, out-of-footprint pixels are zeroed,
the crop is padded bottom/right to a square with the pad value (zero equals
the per-band training mean after normalization), and the square is resampled
to side x side with bilinear interpolation.
"""

from __future__ import annotations

import numpy as np

DEFAULT_SIDE = 64


def footprint_bbox(footprint: np.ndarray) -> tuple[int, int, int, int]:
    """(row0, row1, col0, col1), half-open, of the true region."""
    rows = np.flatnonzero(footprint.any(axis=1))
    cols = np.flatnonzero(footprint.any(axis=0))
    if rows.size == 0:
        raise ValueError("empty footprint")
    return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1


def bilinear_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample (B, H, W) to (B, out_h, out_w); output pixel centers map to
    input coordinates (i + 0.5) * scale - 0.5, clamped to the valid range."""
    b, h, w = src.shape
    if (h, w) == (out_h, out_w):
        return src.copy()
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[None, :, None]
    wx = (xs - x0)[None, None, :]
    v00 = src[:, y0[:, None], x0[None, :]]
    v01 = src[:, y0[:, None], x1[None, :]]
    v10 = src[:, y1[:, None], x0[None, :]]
    v11 = src[:, y1[:, None], x1[None, :]]
    out = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11)
    return out.astype(src.dtype)


def prepare_input(
    pixels: np.ndarray,
    footprint: np.ndarray,
    side: int = DEFAULT_SIDE,
    pad_value: float | np.ndarray = 0.0,
) -> np.ndarray:
    """Normalized (B, H, W) chip pixels -> (B, side, side) model input."""
    r0, r1, c0, c1 = footprint_bbox(footprint)
    crop = np.where(footprint[r0:r1, c0:c1], pixels[:, r0:r1, c0:c1], 0).astype(np.float32)
    b, hh, ww = crop.shape
    square = max(hh, ww)
    if hh != square or ww != square:
        padded = np.empty((b, square, square), dtype=np.float32)
        padded[:] = np.broadcast_to(np.asarray(pad_value, dtype=np.float32).reshape(-1, 1, 1), (b, 1, 1))
        padded[:, :hh, :ww] = crop
        crop = padded
    return bilinear_resize(crop, side, side)
