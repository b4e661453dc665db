"""Rasterization of a document under animation states.

All blending happens premultiplied in float64 and is quantized exactly
once per frame (round half up on the 255 scale).  Layer transforms are
scale about the bbox center, then rotation about the same center
(degrees, clockwise positive since y grows down), then translation.
Resampling is inverse-mapped bilinear with transparent black outside
the source; the untransformed case (no rotation, unit scale, integral
translation) takes an exact copy path so static frames reproduce layer
pixels bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from . import kernels
from .document import LayeredDocument, LayerImage
from .timeline import IDENTITY, PropertyState, Timeline, frame_times, sample

ENCODE_FORMATS = ("png_seq", "y4m")


class EmptySequence(Exception):
    """Encoding was asked for zero frames."""


@dataclass
class Frame:
    t_ms: float
    pixels: np.ndarray = field(repr=False)  # (h, w, 4) uint8


@dataclass
class FrameSequence:
    fps: int
    frames: list[Frame] = field(default_factory=list)


def premultiply(pixels: np.ndarray) -> np.ndarray:
    """Straight-alpha RGBA8 to premultiplied float64 in [0, 1]."""
    a = pixels[:, :, 3].astype(np.float64) / 255.0
    out = np.empty(pixels.shape, dtype=np.float64)
    out[:, :, :3] = pixels[:, :, :3].astype(np.float64) / 255.0 * a[:, :, None]
    out[:, :, 3] = a
    return out


def quantize_frame(canvas: np.ndarray) -> np.ndarray:
    """Premultiplied float64 canvas to straight RGBA8, one rounding step.

    Where the rounded alpha is 255 the premultiplied color already is
    the straight color and is quantized directly; genuinely transparent
    pixels get unpremultiplied first.
    """
    a = canvas[:, :, 3]
    a8 = np.clip(np.floor(a * 255.0 + 0.5), 0.0, 255.0)
    direct = np.clip(np.floor(canvas[:, :, :3] * 255.0 + 0.5), 0.0, 255.0)
    out = np.empty(canvas.shape, dtype=np.uint8)
    if np.all(a8 >= 255.0):
        out[:, :, :3] = direct.astype(np.uint8)
    else:
        safe_a = np.where(a > 0.0, a, 1.0)[:, :, None]
        divided = np.clip(np.floor(canvas[:, :, :3] / safe_a * 255.0 + 0.5), 0.0, 255.0)
        out[:, :, :3] = np.where(a8[:, :, None] >= 255.0, direct, divided).astype(np.uint8)
    out[:, :, 3] = a8.astype(np.uint8)
    return out


def _is_integral(v: float) -> bool:
    return float(v).is_integer()


def place_layer(
    layer: LayerImage, state: PropertyState, canvas_size: tuple[int, int]
) -> tuple[np.ndarray, int, int] | None:
    """Transform a layer, returning a premultiplied tile and its canvas spot.

    The result is (tile, x0, y0) with tile already clipped to the
    canvas, or None when the layer lands fully outside or is invisible.
    """
    width, height = canvas_size
    if state.opacity <= 0.0:
        return None
    r = layer.bbox
    plain = state.rotate == 0.0 and state.scale == 1.0
    if plain and _is_integral(state.tx) and _is_integral(state.ty):
        dest = r._replace(x=r.x + int(state.tx), y=r.y + int(state.ty))
        clipped = dest.clamp(width, height)
        if clipped is None:
            return None
        tile = premultiply(layer.pixels)
        if state.opacity != 1.0:
            tile = tile * state.opacity
        sub = tile[
            clipped.y - dest.y : clipped.y - dest.y + clipped.h,
            clipped.x - dest.x : clipped.x - dest.x + clipped.w,
        ]
        return np.ascontiguousarray(sub), clipped.x, clipped.y

    cx = r.x + r.w / 2.0
    cy = r.y + r.h / 2.0
    theta = math.radians(state.rotate)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    s = state.scale

    # forward corners bound the destination rect; one pixel of slack
    # covers bilinear bleed past the geometric edge
    xs = []
    ys = []
    for px, py in ((r.x, r.y), (r.x2, r.y), (r.x, r.y2), (r.x2, r.y2)):
        dx = s * (px - cx)
        dy = s * (py - cy)
        xs.append(cos_t * dx - sin_t * dy + cx + state.tx)
        ys.append(sin_t * dx + cos_t * dy + cy + state.ty)
    dest = (
        math.floor(min(xs)) - 1,
        math.floor(min(ys)) - 1,
        math.ceil(max(xs)) + 1,
        math.ceil(max(ys)) + 1,
    )
    x0 = max(dest[0], 0)
    y0 = max(dest[1], 0)
    x1 = min(dest[2], width)
    y1 = min(dest[3], height)
    if x1 <= x0 or y1 <= y0:
        return None

    # inverse affine: canvas point -> source pixel coordinates
    inv_s = 1.0 / s
    ia = inv_s * cos_t
    ib = inv_s * sin_t
    id_ = -inv_s * sin_t
    ie = inv_s * cos_t
    ox = cx + state.tx
    oy = cy + state.ty
    ic = -(ia * ox + ib * oy) + cx - r.x
    if_ = -(id_ * ox + ie * oy) + cy - r.y

    src = premultiply(layer.pixels)
    tile = kernels.active().warp_bilinear(
        src, ia, ib, ic, id_, ie, if_, x0, y0, y1 - y0, x1 - x0, float(state.opacity)
    )
    return tile, x0, y0


def over(top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
    """Premultiplied source-over of two equal-shape RGBA float64 rasters."""
    if top.shape != bottom.shape:
        raise ValueError(f"shape mismatch: {top.shape} vs {bottom.shape}")
    out = bottom.copy()
    kernels.active().over_region(out, top, 0, 0)
    return out


def composite(
    doc: LayeredDocument,
    states: dict[int, PropertyState] | None = None,
    t_ms: float = 0.0,
) -> Frame:
    """Paint all layers under the given per-index states into one frame."""
    states = states or {}
    canvas = np.zeros((doc.height, doc.width, 4), dtype=np.float64)
    backend = kernels.active()
    for i, layer in enumerate(doc.layers):
        placed = place_layer(layer, states.get(i, IDENTITY), doc.canvas)
        if placed is None:
            continue
        tile, x0, y0 = placed
        backend.over_region(canvas, tile, x0, y0)
    return Frame(t_ms=t_ms, pixels=quantize_frame(canvas))


def render(
    doc: LayeredDocument,
    timeline: Timeline,
    fps: int = 25,
    workers: int | None = None,
) -> FrameSequence:
    """Rasterize the whole timeline at fps into an in-memory sequence.

    workers > 1 renders frames on a thread pool; output order and
    content do not depend on the worker count.
    """
    times = frame_times(timeline, fps)
    if workers is None:
        workers = min(4, os.cpu_count() or 1)

    def one(t: float) -> Frame:
        return composite(doc, sample(timeline, t), t_ms=t)

    if workers <= 1 or len(times) <= 1:
        frames = [one(t) for t in times]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(one, times))
    return FrameSequence(fps=fps, frames=frames)


def _write_y4m(seq: FrameSequence, path: str) -> None:
    if not float(seq.fps).is_integer() or seq.fps < 1:
        raise ValueError(f"y4m needs a positive integer fps, got {seq.fps}")
    h, w = seq.frames[0].pixels.shape[:2]
    backend = kernels.active()
    with open(path, "wb") as fh:
        fh.write(f"YUV4MPEG2 W{w} H{h} F{int(seq.fps)}:1 Ip A1:1 C444\n".encode("ascii"))
        for frame in seq.frames:
            if frame.pixels.shape[:2] != (h, w):
                raise ValueError("frame dimensions changed mid-sequence")
            ycbcr = backend.rgb_to_ycbcr(np.ascontiguousarray(frame.pixels[:, :, :3]))
            fh.write(b"FRAME\n")
            fh.write(ycbcr[:, :, 0].tobytes())
            fh.write(ycbcr[:, :, 1].tobytes())
            fh.write(ycbcr[:, :, 2].tobytes())


def encode(seq: FrameSequence, fmt: str, out_path: str) -> list[str]:
    """Write a frame sequence to disk, returning the paths written.

    png_seq treats out_path as a directory of frame_00000.png files;
    y4m writes one uncompressed 4:4:4 stream (full-range BT.601).
    """
    if fmt not in ENCODE_FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {ENCODE_FORMATS}")
    if not seq.frames:
        raise EmptySequence("no frames to encode")
    if fmt == "png_seq":
        os.makedirs(out_path, exist_ok=True)
        paths = []
        for k, frame in enumerate(seq.frames):
            p = os.path.join(out_path, f"frame_{k:05d}.png")
            Image.fromarray(frame.pixels, "RGBA").save(p, format="PNG")
            paths.append(p)
        return paths
    _write_y4m(seq, out_path)
    return [out_path]
