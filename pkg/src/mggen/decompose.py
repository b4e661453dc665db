"""Image to layered document.

The pipeline peels a flat raster apart in three passes: recognized text
becomes cutout layers grouped around OCR boxes, detected design
elements become rectangular or free-form cutouts, and whatever the
removed regions leave behind is inpainted into an opaque background.
Each perception step goes through a client slot, so accuracy depends
entirely on the configured backends; the pipeline itself is
deterministic given deterministic clients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation

from .clients.base import (
    ClientError,
    ClientSet,
    Detection,
    Inpainter,
    TextBox,
)
from .document import LayeredDocument, LayerImage, LayerKind, new_document
from .geometry import Rect

log = logging.getLogger(__name__)


class ImageTooSmall(Exception):
    pass


@dataclass(frozen=True)
class DecomposeConfig:
    min_size: int = 16  # smallest usable image edge
    box_pad: int = 1  # margin added around OCR boxes before grouping
    dilate_radius: int = 2  # growth of inpainting masks past the cutouts

    def __post_init__(self) -> None:
        if self.min_size < 1 or self.box_pad < 0 or self.dilate_radius < 0:
            raise ValueError(f"bad decompose config {self}")


def _tagged(stage: str, fn, *args):
    """Run one client call, folding unexpected failures into ClientError."""
    try:
        return fn(*args)
    except ClientError:
        raise
    except Exception as exc:
        raise ClientError(stage, f"{type(exc).__name__}: {exc}") from exc


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0 or not mask.any():
        return mask
    size = 2 * radius + 1
    return binary_dilation(mask, structure=np.ones((size, size), dtype=bool))


def cut_layer(image: np.ndarray, bbox: Rect, mask: np.ndarray) -> np.ndarray:
    """RGBA cutout of bbox with alpha 255 exactly on the mask."""
    crop = image[bbox.y : bbox.y2, bbox.x : bbox.x2]
    out = np.zeros((bbox.h, bbox.w, 4), dtype=np.uint8)
    out[:, :, :3] = crop
    out[:, :, 3] = np.where(mask, 255, 0).astype(np.uint8)
    return out


def group_stroke_mask(mask: np.ndarray, boxes: list[TextBox]) -> list[np.ndarray]:
    """Split a stroke mask among text boxes by containment.

    Every stroke pixel belongs to at most one box: the smallest box (by
    area, then lowest index) containing it.  Returns one box-local
    boolean mask per input box, in input order.
    """
    h, w = mask.shape
    owner = np.full((h, w), -1, dtype=np.int32)
    # paint in falling priority so the winning box paints last
    for i in sorted(range(len(boxes)), key=lambda k: (boxes[k].bbox.area, k), reverse=True):
        c = boxes[i].bbox.clamp(w, h)
        if c is not None:
            owner[c.y : c.y2, c.x : c.x2] = i
    out: list[np.ndarray] = []
    for i, tb in enumerate(boxes):
        r = tb.bbox
        local = np.zeros((r.h, r.w), dtype=bool)
        c = r.clamp(w, h)
        if c is not None:
            grabbed = (owner[c.y : c.y2, c.x : c.x2] == i) & mask[c.y : c.y2, c.x : c.x2]
            local[c.y - r.y : c.y - r.y + c.h, c.x - r.x : c.x - r.x + c.w] = grabbed
        out.append(local)
    return out


def extract_text_layers(
    image: np.ndarray,
    ocr,
    strokes,
    inpainter: Inpainter,
    config: DecomposeConfig = DecomposeConfig(),
) -> tuple[list[LayerImage], np.ndarray]:
    """Cut recognized text out of the image.

    Returns the text layers (provisional ids layer_1..) and the image
    with all stroke pixels inpainted away.  Boxes whose share of the
    stroke mask is empty are skipped with a warning.
    """
    h, w = image.shape[:2]
    boxes: list[TextBox] = _tagged("ocr", ocr.recognize, image)
    if not boxes:
        return [], image.copy()
    for tb in boxes:
        if not tb.bbox.within(w, h) or tb.bbox.w < 1 or tb.bbox.h < 1:
            raise ClientError("ocr", f"box {tuple(tb.bbox)} outside image {w}x{h}")
    mask = np.asarray(_tagged("stroke", strokes.segment, image), dtype=bool)
    if mask.shape != (h, w):
        raise ClientError("stroke", f"mask shape {mask.shape} does not match image {h, w}")

    padded = [
        TextBox(tb.text, tb.bbox.pad(config.box_pad).clamp(w, h) or tb.bbox) for tb in boxes
    ]
    groups = group_stroke_mask(mask, padded)

    layers: list[LayerImage] = []
    removal = np.zeros((h, w), dtype=bool)
    n = 0
    for tb, local in zip(padded, groups):
        if not local.any():
            log.warning("text box %r matched no stroke pixels, skipped", tb.text)
            continue
        n += 1
        layers.append(
            LayerImage(
                id=f"layer_{n}",
                kind=LayerKind.TEXT,
                bbox=tb.bbox,
                pixels=cut_layer(image, tb.bbox, local),
                caption=tb.text,
            )
        )
        removal[tb.bbox.y : tb.bbox.y2, tb.bbox.x : tb.bbox.x2] |= local
    if not layers:
        return [], image.copy()

    fill = _dilate(removal, config.dilate_radius)
    cleaned = _tagged("inpaint", inpainter.inpaint, image, fill)
    if cleaned.shape != image.shape:
        raise ClientError("inpaint", f"inpainted shape {cleaned.shape} mismatch")
    return layers, cleaned


def extract_nontext_layers(
    image: np.ndarray,
    detector,
    segmenter,
    captioner=None,
    config: DecomposeConfig = DecomposeConfig(),
) -> list[LayerImage]:
    """Cut detected design elements out of a (text-free) image.

    Rectangular detections take their whole bbox; free-form ones get a
    segmentation mask.  Captions come from the captioner when present.
    """
    h, w = image.shape[:2]
    detections: list[Detection] = _tagged("detect", detector.detect, image)
    layers: list[LayerImage] = []
    n = 0
    for det in detections:
        r = det.bbox
        if not r.within(w, h) or r.w < 1 or r.h < 1:
            raise ClientError("detect", f"detection {tuple(r)} outside image {w}x{h}")
        if det.rectangular:
            local = np.ones((r.h, r.w), dtype=bool)
            kind = LayerKind.RECTANGULAR
        else:
            local = np.asarray(_tagged("segment", segmenter.segment, image, r), dtype=bool)
            if local.shape != (r.h, r.w):
                raise ClientError(
                    "segment",
                    f"mask shape {local.shape} does not match bbox {r.w}x{r.h}",
                )
            kind = LayerKind.NONRECTANGULAR
        if not local.any():
            log.warning("detection at %s segmented to nothing, skipped", tuple(r))
            continue
        pixels = cut_layer(image, r, local)
        caption = _tagged("caption", captioner.caption, pixels) if captioner else ""
        n += 1
        layers.append(
            LayerImage(
                id=f"layer_{n}",
                kind=kind,
                bbox=r,
                pixels=pixels,
                caption=caption,
            )
        )
    return layers


def extract_background(
    image: np.ndarray,
    masks: list[tuple[Rect, np.ndarray]],
    inpainter: Inpainter,
    config: DecomposeConfig = DecomposeConfig(),
) -> LayerImage:
    """Inpaint away the given cutouts, leaving an opaque background layer.

    masks pairs each cutout bbox with its box-local boolean mask.  With
    no cutouts at all the image itself is the background.
    """
    h, w = image.shape[:2]
    union = np.zeros((h, w), dtype=bool)
    for r, local in masks:
        union[r.y : r.y2, r.x : r.x2] |= local
    if union.any():
        fill = _dilate(union, config.dilate_radius)
        filled = _tagged("inpaint", inpainter.inpaint, image, fill)
        if filled.shape != image.shape:
            raise ClientError("inpaint", f"inpainted shape {filled.shape} mismatch")
    else:
        filled = image.copy()
    pixels = np.empty((h, w, 4), dtype=np.uint8)
    pixels[:, :, :3] = filled
    pixels[:, :, 3] = 255
    return LayerImage(
        id="layer_0", kind=LayerKind.BACKGROUND, bbox=Rect(0, 0, w, h), pixels=pixels
    )


def decompose(
    image: np.ndarray,
    clients: ClientSet,
    config: DecomposeConfig = DecomposeConfig(),
) -> LayeredDocument:
    """Full decomposition of an (h, w, 3) uint8 raster.

    The result stacks background, then non-text elements, then text,
    with ids layer_0..layer_{n-1} following z-order.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("image must be (h, w, 3) uint8")
    h, w = image.shape[:2]
    if h < config.min_size or w < config.min_size:
        raise ImageTooSmall(
            f"{w}x{h} image is below the {config.min_size} px minimum edge"
        )
    clients.require("ocr", "strokes", "detector", "segmenter", "inpainter")

    with clients.guard(clients.ocr), clients.guard(clients.strokes), clients.guard(
        clients.inpainter
    ):
        text_layers, cleaned = extract_text_layers(
            image, clients.ocr, clients.strokes, clients.inpainter, config
        )
    with clients.guard(clients.detector), clients.guard(clients.segmenter), clients.guard(
        clients.captioner
    ):
        nontext = extract_nontext_layers(
            cleaned, clients.detector, clients.segmenter, clients.captioner, config
        )
    with clients.guard(clients.inpainter):
        background = extract_background(
            cleaned,
            [(layer.bbox, layer.pixels[:, :, 3] > 0) for layer in nontext],
            clients.inpainter,
            config,
        )

    doc = new_document(w, h, background)
    serial = 0
    for layer in nontext + text_layers:
        serial += 1
        doc.add_layer(
            LayerImage(
                id=f"layer_{serial}",
                kind=layer.kind,
                bbox=layer.bbox,
                pixels=layer.pixels,
                caption=layer.caption,
            )
        )
    return doc
