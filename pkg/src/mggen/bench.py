"""Rendering benchmark comparing the kernel backends.

Builds a synthetic document and script pair (no perception clients
involved), renders it once per backend, and reports wall time.  The
same scene builder doubles as a determinism probe in the tests: both
backends must produce byte-identical frames.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .animdsl import Absolute, Entry, Script, parse, print_script, validate
from .compositor import composite, render
from .document import LayeredDocument, LayerImage, LayerKind, new_document
from .geometry import Rect
from .timeline import compile_script, sample


def _background(width: int, height: int, rng: np.random.Generator) -> LayerImage:
    top = rng.integers(40, 216, size=3)
    bottom = rng.integers(40, 216, size=3)
    t = np.linspace(0.0, 1.0, height)[:, None]
    ramp = top[None, :] * (1.0 - t) + bottom[None, :] * t
    pixels = np.empty((height, width, 4), dtype=np.uint8)
    pixels[:, :, :3] = np.clip(ramp, 0, 255).astype(np.uint8)[:, None, :]
    pixels[:, :, 3] = 255
    return LayerImage("layer_0", LayerKind.BACKGROUND, Rect(0, 0, width, height), pixels)


def _ellipse_mask(h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    return ((xx - cx) / (w / 2.0)) ** 2 + ((yy - cy) / (h / 2.0)) ** 2 <= 1.0


def make_scene(
    width: int = 1280,
    height: int = 720,
    n_layers: int = 8,
    duration_ms: int = 5000,
    seed: int = 7,
) -> tuple[LayeredDocument, str]:
    """A document of n_layers cutouts plus a script ending at duration_ms."""
    rng = np.random.default_rng(seed)
    doc = new_document(width, height, _background(width, height, rng))
    cols = max(1, int(np.ceil(np.sqrt(n_layers))))
    rows = max(1, int(np.ceil(n_layers / cols)))
    cell_w = width // cols
    cell_h = height // rows
    for i in range(n_layers):
        cx = (i % cols) * cell_w
        cy = (i // cols) * cell_h
        w = int(rng.integers(max(8, cell_w // 2), max(9, cell_w - 4)))
        h = int(rng.integers(max(8, cell_h // 2), max(9, cell_h - 4)))
        x = cx + int(rng.integers(0, max(1, cell_w - w)))
        y = cy + int(rng.integers(0, max(1, cell_h - h)))
        pixels = np.zeros((h, w, 4), dtype=np.uint8)
        pixels[:, :, :3] = rng.integers(0, 256, size=3, dtype=np.uint8)
        if i % 2:
            pixels[:, :, 3] = np.where(_ellipse_mask(h, w), 255, 0).astype(np.uint8)
            kind = LayerKind.NONRECTANGULAR
        else:
            pixels[:, :, 3] = 255
            kind = LayerKind.RECTANGULAR
        doc.add_layer(LayerImage(f"layer_{i + 1}", kind, Rect(x, y, w, h), pixels))

    entry_dur = 700
    span = max(0, duration_ms - entry_dur)
    entries = []
    for i, layer in enumerate(doc.layers[1:]):
        start = round(i * span / max(1, n_layers - 1))
        r = layer.bbox
        variant = i % 4
        if variant == 0:
            tracks = {"translateX": (float(-(r.x + r.w)), 0.0)}
            easing = "easeOutCubic"
        elif variant == 1:
            tracks = {"rotate": (-180.0, 0.0), "opacity": (0.0, 1.0)}
            easing = "easeOutCubic"
        elif variant == 2:
            tracks = {"scale": (0.3, 1.0), "opacity": (0.0, 1.0)}
            easing = "easeOutBack"
        else:
            tracks = {"opacity": (0.0, 1.0)}
            easing = "linear"
        entries.append(
            Entry(
                target=layer.id,
                tracks=tracks,
                duration=float(entry_dur),
                easing=easing,
                offset=Absolute(start),
            )
        )
    text = print_script(Script(loop=False, autoplay=True, entries=entries))
    return doc, text


@dataclass
class BenchResult:
    backend: str
    frames: int
    seconds: float
    workers: int

    @property
    def ms_per_frame(self) -> float:
        return 1000.0 * self.seconds / max(1, self.frames)


def run(
    width: int = 1280,
    height: int = 720,
    n_layers: int = 8,
    duration_ms: int = 5000,
    fps: int = 25,
    backends: tuple[str, ...] = ("numba", "numpy"),
    workers: int = 1,
    seed: int = 7,
) -> list[BenchResult]:
    """Render the scene once per backend and time it.

    The first frame is rendered before the clock starts so JIT
    compilation does not count.  The active backend is restored
    afterwards.
    """
    doc, text = make_scene(width, height, n_layers, duration_ms, seed)
    timeline = compile_script(validate(parse(text), doc))
    previous = kernels.active_name()
    results = []
    try:
        for name in backends:
            try:
                kernels.set_backend(name)
            except ImportError:
                continue
            # one frame mid-animation warms up every kernel (and the JIT)
            composite(doc, sample(timeline, timeline.total_duration / 2.0))
            t0 = time.perf_counter()
            seq = render(doc, timeline, fps=fps, workers=workers)
            dt = time.perf_counter() - t0
            results.append(
                BenchResult(backend=name, frames=len(seq.frames), seconds=dt, workers=workers)
            )
    finally:
        kernels.set_backend(previous)
    return results


def format_report(results: list[BenchResult]) -> str:
    lines = [f"{'backend':<8} {'workers':>7} {'frames':>7} {'seconds':>9} {'ms/frame':>9}"]
    for r in results:
        lines.append(
            f"{r.backend:<8} {r.workers:>7} {r.frames:>7} {r.seconds:>9.3f} {r.ms_per_frame:>9.2f}"
        )
    if len(results) == 2 and results[1].seconds > 0:
        lines.append(
            f"speedup {results[0].backend} vs {results[1].backend}: "
            f"{results[1].seconds / max(results[0].seconds, 1e-9):.2f}x"
        )
    return "\n".join(lines)
