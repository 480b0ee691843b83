"""Independent reference implementations used to derive expected test values.

These deliberately avoid the package's own code paths: brute-force loops,
alternative algorithms, and the plain meters-per-degree constants. Keeping
them here means every derived expectation in the tests has a second route.
"""

from __future__ import annotations

import math

import numpy as np

# Meters per degree at the equator, the constants behind every hand-built
# coordinate offset in the fixtures.
M_PER_DEG_LAT_EQ = 110_574.0
M_PER_DEG_LON_EQ = 111_320.0


def brute_force_auc(scores, labels) -> float:
    """O(n^2) positive/negative pair counting; ties count one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def winding_number_inside(x: float, y: float, ring) -> bool:
    """Nonzero winding test, an algorithm independent of ray crossing."""
    wn = 0
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        if y0 <= y:
            if y1 > y and _is_left(x0, y0, x1, y1, x, y) > 0:
                wn += 1
        elif y1 <= y and _is_left(x0, y0, x1, y1, x, y) < 0:
            wn -= 1
    return wn != 0


def _is_left(x0, y0, x1, y1, px, py) -> float:
    return (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)


def polygon_inside_with_holes(x: float, y: float, exterior, holes=()) -> bool:
    inside = winding_number_inside(x, y, exterior)
    for hole in holes:
        if winding_number_inside(x, y, hole):
            inside = not inside
    return inside


def naive_conv2d(x, w, b, stride: int, pad: int):
    """Six-loop convolution over a single image (C, H, W) in float64."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    c_in, h, wd = x.shape
    o, _, kh, kw = w.shape
    xp = np.zeros((c_in, h + 2 * pad, wd + 2 * pad))
    xp[:, pad : pad + h, pad : pad + wd] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((o, oh, ow))
    for oc in range(o):
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for ic in range(c_in):
                    for di in range(kh):
                        for dj in range(kw):
                            acc += w[oc, ic, di, dj] * xp[ic, i * stride + di, j * stride + dj]
                out[oc, i, j] = acc + b[oc]
    return out


def bilinear_sample(src, y: float, x: float) -> float:
    """Single bilinear lookup with clamped coordinates, float64."""
    h, w = src.shape
    y = min(max(y, 0.0), h - 1.0)
    x = min(max(x, 0.0), w - 1.0)
    y0, x0 = int(math.floor(y)), int(math.floor(x))
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    wy, wx = y - y0, x - x0
    return float(
        (1 - wy) * ((1 - wx) * src[y0, x0] + wx * src[y0, x1])
        + wy * ((1 - wx) * src[y1, x0] + wx * src[y1, x1])
    )


def histogram_by_loop(values, bins: int) -> np.ndarray:
    """Per-pixel binning oracle for luminance histograms."""
    counts = np.zeros(bins, dtype=np.float64)
    for v in values:
        idx = int(v * bins)
        idx = min(max(idx, 0), bins - 1)
        counts[idx] += 1
    return counts / counts.sum()


def tv_distance_by_loop(p, q) -> float:
    return 0.5 * sum(abs(a - b) for a, b in zip(p, q))
