"""Vectorized numpy kernels.

Reference implementations for the accelerated versions in
``numba_impl``.  The arithmetic here is written with the exact same
operation order as the loop versions so both backends produce
bit-identical float64 results; keep the two files in sync when touching
either.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def over_region(canvas: np.ndarray, src: np.ndarray, x0: int, y0: int) -> None:
    """Premultiplied source-over of src onto canvas at (x0, y0), in place.

    src must already be clipped to the canvas by the caller.
    """
    h, w = src.shape[0], src.shape[1]
    dst = canvas[y0 : y0 + h, x0 : x0 + w]
    one_minus = 1.0 - src[:, :, 3:4]
    dst[...] = src + dst * one_minus


def warp_bilinear(
    src: np.ndarray,
    ia: float,
    ib: float,
    ic: float,
    id_: float,
    ie: float,
    if_: float,
    dx0: int,
    dy0: int,
    out_h: int,
    out_w: int,
    opacity: float,
) -> np.ndarray:
    """Inverse-map a premultiplied RGBA tile through an affine transform.

    (ia..if_) map a canvas point (px, py) to source coordinates; sampling
    is bilinear at pixel centers with transparent black outside the
    source.  The result is scaled by opacity and covers the canvas rect
    starting at (dx0, dy0) with shape (out_h, out_w).
    """
    h, w = src.shape[0], src.shape[1]
    jj, ii = np.meshgrid(
        np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64)
    )
    px = (dx0 + jj) + 0.5
    py = (dy0 + ii) + 0.5
    u = ia * px + ib * py + ic
    v = id_ * px + ie * py + if_
    sx = u - 0.5
    sy = v - 0.5
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0i = x0.astype(np.int64)
    y0i = y0.astype(np.int64)

    def tap(xi: np.ndarray, yi: np.ndarray) -> np.ndarray:
        valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        xs = np.clip(xi, 0, w - 1)
        ys = np.clip(yi, 0, h - 1)
        return np.where(valid[:, :, None], src[ys, xs], 0.0)

    p00 = tap(x0i, y0i)
    p01 = tap(x0i + 1, y0i)
    p10 = tap(x0i, y0i + 1)
    p11 = tap(x0i + 1, y0i + 1)
    w00 = ((1.0 - fx) * (1.0 - fy))[:, :, None]
    w01 = (fx * (1.0 - fy))[:, :, None]
    w10 = ((1.0 - fx) * fy)[:, :, None]
    w11 = (fx * fy)[:, :, None]
    acc = w00 * p00 + w01 * p01 + w10 * p10 + w11 * p11
    return acc * opacity


def diffusion_fill(
    values: np.ndarray, mask: np.ndarray, max_iter: int, tol: float
) -> int:
    """Jacobi-relax masked pixels toward their 4-neighbor average, in place.

    Neighbors are accumulated in up, down, left, right order and divided
    by the in-bounds neighbor count.  Stops when the largest per-step
    change over the mask drops below tol.  Returns the iteration count.
    """
    m = mask.astype(bool)
    if not m.any():
        return 0
    h, w = values.shape[0], values.shape[1]
    prev = values.astype(np.float64, copy=True)
    m3 = m[:, :, None]
    iters = 0
    for _ in range(max_iter):
        acc = np.zeros_like(prev)
        cnt = np.zeros((h, w, 1), dtype=np.float64)
        acc[1:] += prev[:-1]
        cnt[1:] += 1.0
        acc[:-1] += prev[1:]
        cnt[:-1] += 1.0
        acc[:, 1:] += prev[:, :-1]
        cnt[:, 1:] += 1.0
        acc[:, :-1] += prev[:, 1:]
        cnt[:, :-1] += 1.0
        new = np.where(m3, acc / cnt, prev)
        delta = float(np.abs(new - prev)[m].max())
        prev = new
        iters += 1
        if delta < tol:
            break
    values[...] = prev
    return iters


def rgb_to_ycbcr(rgb: np.ndarray) -> np.ndarray:
    """Full-range BT.601 conversion of an (h, w, 3) uint8 raster."""
    r = rgb[:, :, 0].astype(np.float64)
    g = rgb[:, :, 1].astype(np.float64)
    b = rgb[:, :, 2].astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 + 0.5 * (b - y) / 0.886
    cr = 128.0 + 0.5 * (r - y) / 0.701
    out = np.empty(rgb.shape, dtype=np.uint8)
    out[:, :, 0] = np.clip(np.floor(y + 0.5), 0.0, 255.0).astype(np.uint8)
    out[:, :, 1] = np.clip(np.floor(cb + 0.5), 0.0, 255.0).astype(np.uint8)
    out[:, :, 2] = np.clip(np.floor(cr + 0.5), 0.0, 255.0).astype(np.uint8)
    return out
