"""Layered document model.

A document is an opaque background plus a z-ordered stack of RGBA cutout
layers on a fixed canvas.  List order is paint order (background first),
and text layers always sit above non-text layers; ``add_layer`` keeps
that arrangement by choosing the insertion point, it never reorders
existing layers relative to each other.

Pixel buffers are straight-alpha RGBA8 (PNG semantics).  ``flatten``
paints the stack with ordinary straight-alpha blending in float64 and
quantizes once at the end; it is deliberately independent of the
animation compositor so the two can be checked against each other.
"""

from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from html import escape as html_escape

import numpy as np
from PIL import Image

from .geometry import Rect

CAPTION_MAX_BYTES = 1024
_TRUNCATION_MARK = "…"
_ID_PATTERN = re.compile(r"^layer_\d+$")


class DocumentError(Exception):
    """Base class for document model failures."""


class InvalidCanvas(DocumentError):
    pass


class NonOpaqueBackground(DocumentError):
    pass


class OutOfBounds(DocumentError):
    pass


class DuplicateId(DocumentError):
    pass


class ManifestError(DocumentError):
    pass


class LayerKind(Enum):
    TEXT = "text"
    RECTANGULAR = "rectangular"
    NONRECTANGULAR = "nonrectangular"
    BACKGROUND = "background"


def truncate_caption(caption: str) -> str:
    """Cap a caption at CAPTION_MAX_BYTES of UTF-8, marking the cut."""
    raw = caption.encode("utf-8")
    if len(raw) <= CAPTION_MAX_BYTES:
        return caption
    budget = CAPTION_MAX_BYTES - len(_TRUNCATION_MARK.encode("utf-8"))
    head = raw[:budget]
    # back off a partial multi-byte sequence at the cut point
    while head and (head[-1] & 0xC0) == 0x80:
        head = head[:-1]
    if head and head[-1] >= 0xC0:
        head = head[:-1]
    return head.decode("utf-8") + _TRUNCATION_MARK


@dataclass(eq=False)
class LayerImage:
    """One cutout: id, kind, placement, straight-alpha pixels, caption."""

    id: str
    kind: LayerKind
    bbox: Rect
    pixels: np.ndarray = field(repr=False)
    caption: str = ""

    def __post_init__(self) -> None:
        if not _ID_PATTERN.match(self.id):
            raise DocumentError(f"layer id {self.id!r} does not match layer_<n>")
        if not isinstance(self.bbox, Rect):
            self.bbox = Rect(*self.bbox)
        if self.bbox.w < 1 or self.bbox.h < 1:
            raise DocumentError(f"layer {self.id}: bbox {self.bbox} has empty extent")
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8 or px.ndim != 3 or px.shape[2] != 4:
            raise DocumentError(f"layer {self.id}: pixels must be uint8 with shape (h, w, 4)")
        if px.shape[0] != self.bbox.h or px.shape[1] != self.bbox.w:
            raise DocumentError(
                f"layer {self.id}: pixel buffer {px.shape[1]}x{px.shape[0]} "
                f"does not match bbox {self.bbox.w}x{self.bbox.h}"
            )
        self.pixels = px
        self.caption = truncate_caption(self.caption)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LayerImage):
            return NotImplemented
        return (
            self.id == other.id
            and self.kind == other.kind
            and self.bbox == other.bbox
            and self.caption == other.caption
            and np.array_equal(self.pixels, other.pixels)
        )


@dataclass(eq=False)
class LayeredDocument:
    width: int
    height: int
    layers: list[LayerImage] = field(default_factory=list)

    @property
    def canvas(self) -> tuple[int, int]:
        return (self.width, self.height)

    @property
    def background(self) -> LayerImage:
        return self.layers[0]

    def layer_ids(self) -> list[str]:
        return [layer.id for layer in self.layers]

    def find(self, layer_id: str) -> LayerImage | None:
        for layer in self.layers:
            if layer.id == layer_id:
                return layer
        return None

    def index_of(self, layer_id: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.id == layer_id:
                return i
        raise KeyError(layer_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LayeredDocument):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.layers == other.layers
        )

    def add_layer(self, layer: LayerImage) -> str:
        """Insert a layer at the top of its band and return its id.

        Non-text layers go below the lowest text layer so text stays on
        top; relative order within each band is insertion order.
        """
        if layer.kind is LayerKind.BACKGROUND:
            raise DocumentError("document already has a background layer")
        if layer.id in set(self.layer_ids()):
            raise DuplicateId(f"layer id {layer.id!r} already present")
        if not layer.bbox.within(self.width, self.height):
            raise OutOfBounds(
                f"layer {layer.id}: bbox {layer.bbox} exceeds canvas {self.width}x{self.height}"
            )
        if layer.kind is LayerKind.TEXT:
            self.layers.append(layer)
        else:
            pos = len(self.layers)
            for i, existing in enumerate(self.layers):
                if existing.kind is LayerKind.TEXT:
                    pos = i
                    break
            self.layers.insert(pos, layer)
        return layer.id

    def next_id(self) -> str:
        used = set(self.layer_ids())
        n = 0
        while f"layer_{n}" in used:
            n += 1
        return f"layer_{n}"

    def flatten(self) -> np.ndarray:
        """Paint all layers in z-order, return an (h, w, 4) RGBA8 raster.

        Straight-alpha source-over in float64, one round-half-up
        quantization at the end.  The background is opaque, so the
        result alpha is 255 everywhere.
        """
        canvas = np.zeros((self.height, self.width, 3), dtype=np.float64)
        for layer in self.layers:
            r = layer.bbox
            a = layer.pixels[:, :, 3].astype(np.float64) / 255.0
            rgb = layer.pixels[:, :, :3].astype(np.float64) / 255.0
            region = canvas[r.y : r.y2, r.x : r.x2]
            region[...] = rgb * a[:, :, None] + region * (1.0 - a[:, :, None])
        out = np.empty((self.height, self.width, 4), dtype=np.uint8)
        out[:, :, :3] = np.clip(np.floor(canvas * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)
        out[:, :, 3] = 255
        return out


def new_document(width: int, height: int, background: LayerImage) -> LayeredDocument:
    """Create a document from canvas dimensions and an opaque background."""
    if width < 1 or height < 1:
        raise InvalidCanvas(f"canvas {width}x{height} has empty extent")
    if background.kind is not LayerKind.BACKGROUND:
        raise DocumentError(f"background layer has kind {background.kind.value!r}")
    if background.bbox != Rect(0, 0, width, height):
        raise InvalidCanvas(
            f"background bbox {background.bbox} does not cover canvas {width}x{height}"
        )
    if not np.all(background.pixels[:, :, 3] == 255):
        raise NonOpaqueBackground("background must be fully opaque")
    return LayeredDocument(width, height, [background])


def encode_png(pixels: np.ndarray) -> bytes:
    mode = {3: "RGB", 4: "RGBA"}[pixels.shape[2]]
    buf = io.BytesIO()
    Image.fromarray(pixels, mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGBA"))


def export_manifest(doc: LayeredDocument) -> str:
    """Serialize the document structure (not the pixels) to JSON text."""
    obj = {
        "canvas": {"width": doc.width, "height": doc.height},
        "layers": [
            {
                "id": layer.id,
                "kind": layer.kind.value,
                "bbox": list(layer.bbox),
                "caption": layer.caption,
                "asset": f"{layer.id}.png",
            }
            for layer in doc.layers
        ],
    }
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def export_assets(doc: LayeredDocument) -> dict[str, bytes]:
    """PNG-encode every layer, keyed by the asset name used in the manifest."""
    return {f"{layer.id}.png": encode_png(layer.pixels) for layer in doc.layers}


def export_html(doc: LayeredDocument, asset_dir: str = "layers") -> str:
    """Render the document as a static HTML page of absolutely placed images.

    Each layer becomes one img element carrying its id, kind, and
    caption, so the page is both a visual proxy for the document and a
    text description of it.
    """
    w, h = doc.width, doc.height
    lines = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8"></head><body>',
        f'<div id="canvas" style="position:relative;width:{w}px;height:{h}px;overflow:hidden;">',
    ]
    for layer in doc.layers:
        r = layer.bbox
        caption = html_escape(layer.caption, quote=True)
        lines.append(
            f'  <img id="{layer.id}" data-layer-type="{layer.kind.value}" '
            f'data-caption="{caption}" src="{asset_dir}/{layer.id}.png" '
            f'style="position:absolute;left:{r.x}px;top:{r.y}px;'
            f"width:{r.w}px;height:{r.h}px;\">"
        )
    lines.append("</div>")
    lines.append("</body></html>")
    return "\n".join(lines) + "\n"


def _manifest_schema_error(msg: str) -> ManifestError:
    return ManifestError(f"manifest: {msg}")


def import_manifest(text: str, assets: dict[str, bytes]) -> LayeredDocument:
    """Rebuild a document from manifest JSON and PNG assets.

    Validates structure and every document invariant; a manifest whose
    layer order breaks the stacking rules is rejected, not repaired.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _manifest_schema_error(f"invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(obj, dict):
        raise _manifest_schema_error("top level must be an object")
    canvas = obj.get("canvas")
    if not isinstance(canvas, dict):
        raise _manifest_schema_error("missing canvas object")
    width = canvas.get("width")
    height = canvas.get("height")
    if not isinstance(width, int) or not isinstance(height, int):
        raise _manifest_schema_error("canvas width/height must be integers")
    if width < 1 or height < 1:
        raise InvalidCanvas(f"canvas {width}x{height} has empty extent")
    entries = obj.get("layers")
    if not isinstance(entries, list) or not entries:
        raise _manifest_schema_error("layers must be a non-empty array")

    kinds = {k.value: k for k in LayerKind}
    layers: list[LayerImage] = []
    seen_ids: set[str] = set()
    seen_text = False
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise _manifest_schema_error(f"layers[{i}] must be an object")
        for key, types in (
            ("id", str),
            ("kind", str),
            ("bbox", list),
            ("caption", str),
            ("asset", str),
        ):
            if not isinstance(entry.get(key), types):
                raise _manifest_schema_error(f"layers[{i}].{key} missing or wrong type")
        kind = kinds.get(entry["kind"])
        if kind is None:
            raise _manifest_schema_error(f"layers[{i}].kind {entry['kind']!r} unknown")
        bbox_raw = entry["bbox"]
        if len(bbox_raw) != 4 or not all(isinstance(v, int) for v in bbox_raw):
            raise _manifest_schema_error(f"layers[{i}].bbox must be four integers")
        bbox = Rect(*bbox_raw)
        asset = entry["asset"]
        if asset not in assets:
            raise ManifestError(f"manifest: asset {asset!r} not provided")
        pixels = decode_png(assets[asset])
        try:
            layer = LayerImage(entry["id"], kind, bbox, pixels, entry["caption"])
        except DocumentError as exc:
            raise ManifestError(f"manifest: layers[{i}]: {exc}") from exc
        if layer.id in seen_ids:
            raise DuplicateId(f"layer id {layer.id!r} appears twice")
        seen_ids.add(layer.id)

        if i == 0:
            if kind is not LayerKind.BACKGROUND:
                raise ManifestError("manifest: first layer must be the background")
            if bbox != Rect(0, 0, width, height):
                raise InvalidCanvas(
                    f"background bbox {bbox} does not cover canvas {width}x{height}"
                )
            if not np.all(pixels[:, :, 3] == 255):
                raise NonOpaqueBackground("background must be fully opaque")
        else:
            if kind is LayerKind.BACKGROUND:
                raise ManifestError("manifest: more than one background layer")
            if not bbox.within(width, height):
                raise OutOfBounds(
                    f"layer {layer.id}: bbox {bbox} exceeds canvas {width}x{height}"
                )
            if kind is LayerKind.TEXT:
                seen_text = True
            elif seen_text:
                raise ManifestError(
                    f"manifest: non-text layer {layer.id} stacked above a text layer"
                )
        layers.append(layer)
    return LayeredDocument(width, height, layers)
