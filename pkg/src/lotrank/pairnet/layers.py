"""Forward and backward passes for the network building blocks.

Everything is plain numpy, preserves the input dtype (float32 for training,
float64 for gradient checks), and is deterministic single-threaded. The
convolution is im2col + batched matmul so BLAS does the heavy lifting.
"""

from __future__ import annotations

import numpy as np


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 2, pad: int = 1):
    """x: (N, C, H, W); w: (O, C, kh, kw); b: (O,). Returns (out, cache)."""
    n, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=x.dtype)
    for di in range(kh):
        for dj in range(kw):
            cols[:, :, di, dj] = xp[:, :, di : di + stride * oh : stride, dj : dj + stride * ow : stride]
    cols2 = cols.reshape(n, c * kh * kw, oh * ow)
    out = np.matmul(w.reshape(o, -1), cols2).reshape(n, o, oh, ow) + b[None, :, None, None]
    cache = (x.shape, cols2, w, stride, pad, oh, ow)
    return out, cache


def conv2d_backward(dout: np.ndarray, cache):
    """Returns (dx, dw, db) for conv2d_forward."""
    x_shape, cols2, w, stride, pad, oh, ow = cache
    n, c, h, wd = x_shape
    o, _, kh, kw = w.shape
    dout2 = dout.reshape(n, o, oh * ow)
    db = dout.sum(axis=(0, 2, 3))
    dw = np.matmul(dout2, cols2.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
    dcols = np.matmul(w.reshape(o, -1).T, dout2).reshape(n, c, kh, kw, oh, ow)
    dxp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad), dtype=dout.dtype)
    for di in range(kh):
        for dj in range(kw):
            dxp[:, :, di : di + stride * oh : stride, dj : dj + stride * ow : stride] += dcols[:, :, di, dj]
    return dxp[:, :, pad : pad + h, pad : pad + wd], dw, db


def tanh_forward(x: np.ndarray):
    out = np.tanh(x)
    return out, out


def tanh_backward(dout: np.ndarray, cache) -> np.ndarray:
    return dout * (1 - cache * cache)


def global_avgpool_forward(x: np.ndarray):
    """(N, C, H, W) -> (N, C) spatial mean."""
    n, c, h, w = x.shape
    return x.mean(axis=(2, 3)), (n, c, h, w)


def global_avgpool_backward(dout: np.ndarray, cache) -> np.ndarray:
    n, c, h, w = cache
    return np.broadcast_to(dout[:, :, None, None] / (h * w), (n, c, h, w)).astype(dout.dtype, copy=True)


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: (N, D_in); w: (D_out, D_in); b: (D_out,)."""
    return x @ w.T + b, (x, w)


def linear_backward(dout: np.ndarray, cache):
    x, w = cache
    return dout @ w, dout.T @ x, dout.sum(axis=0)
