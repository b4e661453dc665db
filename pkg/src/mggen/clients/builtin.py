"""Self-contained client implementations.

These need no network and no model weights, so any image can go through
the full pipeline out of the box.  The null recognizers simply find
nothing; the segmenters are classic thresholding; the inpainter fills
by diffusion.  They are honest baselines, not replacements for real
perception backends.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import distance_transform_edt, median_filter

from .. import kernels
from ..geometry import Rect
from .base import (
    Captioner,
    ClientError,
    DegenerateInpaint,
    Detection,
    Inpainter,
    LayerDetector,
    MaskSegmenter,
    OcrClient,
    StrokeSegmenter,
    TextBox,
)


class NullOcr(OcrClient):
    """Finds no text; lets the pipeline run without a recognizer."""

    def recognize(self, image: np.ndarray) -> list[TextBox]:
        return []


class NullDetector(LayerDetector):
    """Finds no elements; the whole image becomes background."""

    def detect(self, image: np.ndarray) -> list[Detection]:
        return []


def _luminance(image: np.ndarray) -> np.ndarray:
    f = image.astype(np.float64)
    return 0.299 * f[:, :, 0] + 0.587 * f[:, :, 1] + 0.114 * f[:, :, 2]


def otsu_threshold(values: np.ndarray) -> float:
    """Threshold maximizing between-class variance over a 0..255 range."""
    hist, edges = np.histogram(values, bins=256, range=(0.0, 255.0))
    total = hist.sum()
    if total == 0:
        return 0.0
    mids = (edges[:-1] + edges[1:]) / 2.0
    weight1 = np.cumsum(hist)
    weight2 = total - weight1
    csum = np.cumsum(hist * mids)
    mean1 = np.divide(csum, weight1, out=np.zeros(256), where=weight1 > 0)
    mean2 = np.divide(csum[-1] - csum, weight2, out=np.zeros(256), where=weight2 > 0)
    variance = weight1 * weight2 * (mean1 - mean2) ** 2
    return float(mids[int(np.argmax(variance))])


class ThresholdStrokeSegmenter(StrokeSegmenter):
    """Marks pixels that stand out from their local median as strokes.

    Text strokes are thin, so a median filter wide enough to straddle
    them recovers an approximate background; Otsu on the absolute
    difference separates stroke from background.
    """

    def __init__(self, window: int = 31):
        if window < 3 or window % 2 == 0:
            raise ValueError("window must be an odd integer >= 3")
        self.window = window

    def segment(self, image: np.ndarray) -> np.ndarray:
        lum = _luminance(image)
        local = median_filter(lum, size=self.window, mode="nearest")
        diff = np.abs(lum - local)
        if float(diff.max()) < 1.0:
            return np.zeros(diff.shape, dtype=bool)
        t = otsu_threshold(np.clip(diff, 0.0, 255.0))
        return diff > max(t, 1.0)


class BorderContrastSegmenter(MaskSegmenter):
    """Keeps pixels that differ from the color along the bbox border.

    The border ring is assumed to show mostly background; the element
    mask is Otsu on the distance to the ring's median color.
    """

    def segment(self, image: np.ndarray, bbox: Rect) -> np.ndarray:
        crop = image[bbox.y : bbox.y2, bbox.x : bbox.x2].astype(np.float64)
        ring = np.concatenate(
            [
                crop[0, :, :],
                crop[-1, :, :],
                crop[:, 0, :],
                crop[:, -1, :],
            ]
        )
        bg = np.median(ring, axis=0)
        dist = np.sqrt(((crop - bg) ** 2).sum(axis=2))
        if float(dist.max()) < 1.0:
            return np.ones(crop.shape[:2], dtype=bool)
        t = otsu_threshold(np.clip(dist, 0.0, 255.0))
        return dist > t


class DiffusionInpainter(Inpainter):
    """Fills masked pixels by nearest-pixel seeding plus Jacobi smoothing.

    Each masked pixel starts from the closest unmasked pixel's color and
    relaxes toward the average of its neighbors until the largest step
    falls under tol (on the 0..255 scale) or max_iter sweeps have run.
    Unmasked pixels pass through untouched.
    """

    def __init__(self, max_iter: int = 500, tol: float = 0.5):
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        self.max_iter = max_iter
        self.tol = tol

    def inpaint(self, image: np.ndarray, mask: np.ndarray) -> np.ndarray:
        m = np.asarray(mask, dtype=bool)
        if m.shape != image.shape[:2]:
            raise ClientError(
                "inpaint", f"mask shape {m.shape} does not match image {image.shape[:2]}"
            )
        if not m.any():
            return image.copy()
        if m.all():
            raise DegenerateInpaint()
        values = image.astype(np.float64)
        # seed every hole from its nearest known pixel
        _, (iy, ix) = distance_transform_edt(m, return_indices=True)
        values[m] = values[iy[m], ix[m]]
        kernels.active().diffusion_fill(values, m, self.max_iter, self.tol)
        out = image.copy()
        quant = np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)
        out[m] = quant[m]
        return out


class SwatchCaptioner(Captioner):
    """Labels a cutout by size and dominant color, nothing smarter."""

    _NAMED = (
        ("black", (0, 0, 0)),
        ("white", (255, 255, 255)),
        ("gray", (128, 128, 128)),
        ("red", (220, 50, 47)),
        ("orange", (230, 126, 34)),
        ("yellow", (241, 196, 15)),
        ("green", (39, 174, 96)),
        ("teal", (26, 188, 156)),
        ("blue", (41, 128, 185)),
        ("purple", (142, 68, 173)),
        ("pink", (231, 84, 128)),
        ("brown", (121, 85, 72)),
    )

    def caption(self, pixels: np.ndarray) -> str:
        h, w = pixels.shape[:2]
        alpha = pixels[:, :, 3]
        if alpha.any():
            visible = pixels[:, :, :3][alpha > 0].astype(np.float64)
            mean = visible.mean(axis=0)
        else:
            mean = np.zeros(3)
        best = min(
            self._NAMED,
            key=lambda named: float(((mean - np.array(named[1], dtype=np.float64)) ** 2).sum()),
        )
        return f"{best[0]} element, {w}x{h} px"
