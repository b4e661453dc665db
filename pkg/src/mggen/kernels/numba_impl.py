"""Numba-compiled kernels, loop twins of ``numpy_impl``.

Every expression mirrors the numpy version operation for operation so
float64 results match bit for bit across backends.  Importing this
module requires numba; the package falls back to numpy_impl when it is
missing.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def over_region(canvas, src, x0, y0):
    h, w = src.shape[0], src.shape[1]
    for i in range(h):
        for j in range(w):
            one_minus = 1.0 - src[i, j, 3]
            for ch in range(4):
                canvas[y0 + i, x0 + j, ch] = (
                    src[i, j, ch] + canvas[y0 + i, x0 + j, ch] * one_minus
                )


@njit(cache=True, nogil=True)
def warp_bilinear(src, ia, ib, ic, id_, ie, if_, dx0, dy0, out_h, out_w, opacity):
    h, w = src.shape[0], src.shape[1]
    out = np.zeros((out_h, out_w, 4), dtype=np.float64)
    for i in range(out_h):
        py = (dy0 + float(i)) + 0.5
        for j in range(out_w):
            px = (dx0 + float(j)) + 0.5
            u = ia * px + ib * py + ic
            v = id_ * px + ie * py + if_
            sx = u - 0.5
            sy = v - 0.5
            x0f = math.floor(sx)
            y0f = math.floor(sy)
            fx = sx - x0f
            fy = sy - y0f
            x0 = int(x0f)
            y0 = int(y0f)
            w00 = (1.0 - fx) * (1.0 - fy)
            w01 = fx * (1.0 - fy)
            w10 = (1.0 - fx) * fy
            w11 = fx * fy
            for ch in range(4):
                p00 = src[y0, x0, ch] if 0 <= x0 < w and 0 <= y0 < h else 0.0
                p01 = src[y0, x0 + 1, ch] if 0 <= x0 + 1 < w and 0 <= y0 < h else 0.0
                p10 = src[y0 + 1, x0, ch] if 0 <= x0 < w and 0 <= y0 + 1 < h else 0.0
                p11 = (
                    src[y0 + 1, x0 + 1, ch]
                    if 0 <= x0 + 1 < w and 0 <= y0 + 1 < h
                    else 0.0
                )
                acc = w00 * p00 + w01 * p01 + w10 * p10 + w11 * p11
                out[i, j, ch] = acc * opacity
    return out


@njit(cache=True, nogil=True)
def _diffusion_sweep(prev, new, mask):
    h, w, c = prev.shape
    delta = 0.0
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                for ch in range(c):
                    new[i, j, ch] = prev[i, j, ch]
                continue
            n = 0.0
            if i > 0:
                n += 1.0
            if i < h - 1:
                n += 1.0
            if j > 0:
                n += 1.0
            if j < w - 1:
                n += 1.0
            for ch in range(c):
                acc = 0.0
                if i > 0:
                    acc += prev[i - 1, j, ch]
                if i < h - 1:
                    acc += prev[i + 1, j, ch]
                if j > 0:
                    acc += prev[i, j - 1, ch]
                if j < w - 1:
                    acc += prev[i, j + 1, ch]
                val = acc / n
                d = abs(val - prev[i, j, ch])
                if d > delta:
                    delta = d
                new[i, j, ch] = val
    return delta


def diffusion_fill(values: np.ndarray, mask: np.ndarray, max_iter: int, tol: float) -> int:
    m = np.ascontiguousarray(mask.astype(np.bool_))
    if not m.any():
        return 0
    prev = values.astype(np.float64, copy=True)
    new = np.empty_like(prev)
    iters = 0
    for _ in range(max_iter):
        delta = _diffusion_sweep(prev, new, m)
        prev, new = new, prev
        iters += 1
        if delta < tol:
            break
    values[...] = prev
    return iters


@njit(cache=True, nogil=True)
def rgb_to_ycbcr(rgb):
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty((h, w, 3), dtype=np.uint8)
    for i in range(h):
        for j in range(w):
            r = float(rgb[i, j, 0])
            g = float(rgb[i, j, 1])
            b = float(rgb[i, j, 2])
            y = 0.299 * r + 0.587 * g + 0.114 * b
            cb = 128.0 + 0.5 * (b - y) / 0.886
            cr = 128.0 + 0.5 * (r - y) / 0.701
            out[i, j, 0] = np.uint8(min(max(math.floor(y + 0.5), 0.0), 255.0))
            out[i, j, 1] = np.uint8(min(max(math.floor(cb + 0.5), 0.0), 255.0))
            out[i, j, 2] = np.uint8(min(max(math.floor(cr + 0.5), 0.0), 255.0))
    return out
