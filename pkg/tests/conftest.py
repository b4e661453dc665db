"""Shared test fixtures: synthetic designs with exact ground truth.

A design is a flat raster assembled from known parts: a background
(flat or linear gradient), solid rectangles and ellipses, and blocky
pseudo-words stamped pixel by pixel.  Because every part is recorded,
the matching clients answer with perfect boxes and masks, which makes
end-to-end round trips measurable: decomposition error then comes only
from inpainting behind the cutouts.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from mggen.animdsl import (
    AFTER_PREVIOUS,
    Absolute,
    Entry,
    Relative,
    Script,
    EASING_NAMES,
    PROPERTIES,
)
from mggen.clients import (
    ClientError,
    ClientSet,
    DiffusionInpainter,
    FixtureOcr,
    FixtureStrokes,
    TextBox,
    image_digest,
)
from mggen.clients.base import Detection, LayerDetector, MaskSegmenter
from mggen.decompose import decompose
from mggen.document import LayeredDocument, LayerImage, LayerKind, new_document
from mggen.geometry import Rect

CORPUS_SEEDS = tuple(range(1000, 1050))


class StaticDetector(LayerDetector):
    """Answers every detect call with a fixed list."""

    def __init__(self, detections: list[Detection]):
        self.detections = detections

    def detect(self, image: np.ndarray) -> list[Detection]:
        return list(self.detections)


class StaticSegmenter(MaskSegmenter):
    """Answers segment calls from a bbox-keyed mask table."""

    def __init__(self, masks: dict[Rect, np.ndarray]):
        self.masks = masks

    def segment(self, image: np.ndarray, bbox: Rect) -> np.ndarray:
        if bbox not in self.masks:
            raise ClientError("segment", f"no mask prepared for bbox {tuple(bbox)}")
        return self.masks[bbox].copy()


@dataclass
class Design:
    seed: int
    image: np.ndarray
    boxes: list[TextBox]
    strokes: np.ndarray
    detections: list[Detection]
    masks: dict[Rect, np.ndarray] = field(default_factory=dict)

    @property
    def size(self) -> tuple[int, int]:
        return self.image.shape[1], self.image.shape[0]

    def client_set(self, captioner=None) -> ClientSet:
        digest = image_digest(self.image)
        return ClientSet(
            ocr=FixtureOcr({digest: self.boxes}),
            strokes=FixtureStrokes({digest: self.strokes}),
            detector=StaticDetector(self.detections),
            segmenter=StaticSegmenter(self.masks),
            inpainter=DiffusionInpainter(),
            captioner=captioner,
        )


def _background(rng: np.random.Generator, w: int, h: int) -> np.ndarray:
    c0 = rng.integers(0, 256, 3).astype(np.float64)
    c1 = rng.integers(0, 256, 3).astype(np.float64)
    style = int(rng.integers(0, 3))
    img = np.empty((h, w, 3), dtype=np.uint8)
    if style == 0:
        img[:, :] = c0.astype(np.uint8)
    elif style == 1:
        t = np.linspace(0.0, 1.0, w)[None, :, None]
        img[:, :] = np.clip(c0[None, None] * (1 - t) + c1[None, None] * t + 0.5, 0, 255).astype(
            np.uint8
        )
    else:
        t = np.linspace(0.0, 1.0, h)[:, None, None]
        img[:, :] = np.clip(c0[None, None] * (1 - t) + c1[None, None] * t + 0.5, 0, 255).astype(
            np.uint8
        )
    return img


def _ellipse(h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    return ((xx - (w - 1) / 2.0) / (w / 2.0)) ** 2 + (
        (yy - (h - 1) / 2.0) / (h / 2.0)
    ) ** 2 <= 1.0


def _clear_of_edges(box: Rect, detections: list[Detection]) -> bool:
    """True when inpainting around box never bridges a color edge.

    The stroke fill dilates two pixels past the word box, so the box
    needs three pixels of clearance: either from every object, or
    sitting inside one solid rectangle and clear of all the rest.
    A fill whose hole spans an edge smears it and the round trip
    stops being a property of the pipeline.
    """
    grown = box.pad(3)
    touching = [d for d in detections if grown.intersect(d.bbox) is not None]
    if not touching:
        return True
    if len(touching) != 1 or not touching[0].rectangular:
        return False
    r = touching[0].bbox
    return (
        r.x + 3 <= box.x and box.x2 <= r.x2 - 3
        and r.y + 3 <= box.y and box.y2 <= r.y2 - 3
    )


def _stamp_word(
    rng: np.random.Generator,
    img: np.ndarray,
    strokes: np.ndarray,
    detections: list[Detection],
) -> TextBox | None:
    h, w = img.shape[:2]
    s = int(rng.integers(2, 4))
    k = int(rng.integers(2, 6))
    gw = k * 3 * s + (k - 1) * s
    gh = 5 * s
    if w - gw - 2 <= 1 or h - gh - 2 <= 1:
        return None
    for _ in range(40):
        x = int(rng.integers(1, w - gw - 1))
        y = int(rng.integers(1, h - gh - 1))
        box = Rect(x, y, gw, gh)
        if box.pad(3).within(w, h) and _clear_of_edges(box, detections):
            break
    else:
        return None
    color = rng.integers(0, 256, 3, dtype=np.uint8)
    word_mask = np.zeros((gh, gw), dtype=bool)
    for g in range(k):
        cells = rng.random((5, 3)) < 0.55
        while cells.sum() < 5:
            cells[rng.integers(0, 5), rng.integers(0, 3)] = True
        word_mask[:, g * 4 * s : g * 4 * s + 3 * s] = np.kron(cells, np.ones((s, s), bool))
    region = img[y : y + gh, x : x + gw]
    region[word_mask] = color
    strokes[y : y + gh, x : x + gw] |= word_mask
    text = "".join(chr(int(rng.integers(65, 91))) for _ in range(k))
    return TextBox(text, Rect(x, y, gw, gh))


def make_design(
    seed: int, n_objects: int | None = None, n_words: int | None = None
) -> Design:
    """Deterministic synthetic design with exact ground truth."""
    rng = np.random.default_rng(seed)
    w = int(rng.integers(200, 341))
    h = int(rng.integers(180, 301))
    img = _background(rng, w, h)

    detections: list[Detection] = []
    masks: dict[Rect, np.ndarray] = {}
    count = int(rng.integers(1, 4)) if n_objects is None else n_objects
    for _ in range(count):
        ow = int(rng.integers(30, max(31, w // 3)))
        oh = int(rng.integers(24, max(25, h // 3)))
        x = int(rng.integers(1, w - ow - 1))
        y = int(rng.integers(1, h - oh - 1))
        color = rng.integers(0, 256, 3, dtype=np.uint8)
        box = Rect(x, y, ow, oh)
        if rng.random() < 0.5:
            img[y : y + oh, x : x + ow] = color
            detections.append(Detection(box, True))
        else:
            mask = _ellipse(oh, ow)
            img[y : y + oh, x : x + ow][mask] = color
            detections.append(Detection(box, False))
            masks[box] = mask

    strokes = np.zeros((h, w), dtype=bool)
    boxes: list[TextBox] = []
    count = int(rng.integers(1, 4)) if n_words is None else n_words
    for _ in range(count):
        tb = _stamp_word(rng, img, strokes, detections)
        if tb is not None:
            boxes.append(tb)
    return Design(
        seed=seed, image=img, boxes=boxes, strokes=strokes, detections=detections, masks=masks
    )


def stage_cli_fixtures(root, design: Design) -> tuple[str, str]:
    """Write a design image plus a clients.toml answering for it.

    Fixture files key on the digest of the image each client receives.
    The design must therefore be text-free: only then does the text
    stage pass the image through unchanged, so the detector and
    segmenter answers can key on the original digest too.
    """
    assert not design.boxes, "fixture staging needs a text-free design"
    root = Path(root)
    image_path = root / "design.png"
    Image.fromarray(design.image).save(image_path)
    digest = image_digest(design.image)

    (root / "ocr.json").write_text(json.dumps({digest: []}))
    (root / "detector.json").write_text(
        json.dumps(
            {
                digest: [
                    {"bbox": list(det.bbox), "rectangular": det.rectangular}
                    for det in design.detections
                ]
            }
        )
    )
    seg_index = {}
    for i, (bbox, mask) in enumerate(design.masks.items()):
        name = f"mask_{i}.png"
        Image.fromarray(mask.astype(np.uint8) * 255).save(root / name)
        seg_index[",".join(str(v) for v in bbox)] = name
    (root / "segmenter.json").write_text(json.dumps({digest: seg_index}))
    clients_path = root / "clients.toml"
    clients_path.write_text(
        '[ocr]\nkind = "fixture"\npath = "ocr.json"\n'
        '[detector]\nkind = "fixture"\npath = "detector.json"\n'
        '[segmenter]\nkind = "fixture"\npath = "segmenter.json"\n'
        '[captioner]\nkind = "builtin"\n'
    )
    return str(image_path), str(clients_path)


def fidelity(reference: np.ndarray, rendered: np.ndarray, tol: int = 2) -> float:
    """Fraction of pixels whose channels all sit within tol of reference."""
    diff = np.abs(rendered.astype(np.int64) - reference.astype(np.int64))
    return float((diff <= tol).all(axis=2).mean())


def make_tiny_doc(n_layers: int, seed: int = 0) -> LayeredDocument:
    """A minimal document with n_layers animatable cutouts."""
    rng = np.random.default_rng(seed)
    w, h = 64, 48
    bg = np.zeros((h, w, 4), dtype=np.uint8)
    bg[:, :, :3] = rng.integers(0, 256, 3, dtype=np.uint8)
    bg[:, :, 3] = 255
    doc = new_document(w, h, LayerImage("layer_0", LayerKind.BACKGROUND, Rect(0, 0, w, h), bg))
    for i in range(n_layers):
        lw = int(rng.integers(2, 8))
        lh = int(rng.integers(2, 8))
        x = int(rng.integers(0, w - lw))
        y = int(rng.integers(0, h - lh))
        px = np.zeros((lh, lw, 4), dtype=np.uint8)
        px[:, :, :3] = rng.integers(0, 256, 3, dtype=np.uint8)
        px[:, :, 3] = 255
        kind = (LayerKind.RECTANGULAR, LayerKind.NONRECTANGULAR, LayerKind.TEXT)[i % 3]
        doc.add_layer(LayerImage(f"layer_{i + 1}", kind, Rect(x, y, lw, lh), px))
    return doc


def random_script(
    rng: np.random.Generator,
    targets: list[str] | None = None,
    max_entries: int = 6,
    int_ms: bool = False,
    plain_targets: bool = False,
) -> Script:
    """Arbitrary grammatical script for round-trip and scheduling tests."""

    def number(lo: float, hi: float) -> float:
        v = float(rng.uniform(lo, hi))
        if int_ms:
            v = float(int(v))
        elif rng.random() < 0.3:
            v = float(int(v * 2)) / 2.0
        return v

    def target(i: int) -> str:
        if targets is not None:
            return targets[i]
        if plain_targets or rng.random() < 0.7:
            return f"layer_{int(rng.integers(1, 99))}"
        chars = 'ab#"\\_7 -.z'
        return "".join(
            chars[int(rng.integers(0, len(chars)))] for _ in range(int(rng.integers(1, 9)))
        )

    n = int(rng.integers(0, max_entries + 1)) if targets is None else len(targets)
    entries = []
    for i in range(n):
        props = [str(p) for p in rng.choice(PROPERTIES, size=int(rng.integers(1, 6)), replace=False)]
        tracks = {}
        for prop in props:
            if prop == "opacity":
                tracks[prop] = (round(float(rng.uniform(0, 1)), 4), round(float(rng.uniform(0, 1)), 4))
            elif prop == "scale":
                tracks[prop] = (number(0.1, 4.0) or 1.0, number(0.1, 4.0) or 1.0)
            else:
                tracks[prop] = (number(-500, 500), number(-500, 500))
        roll = rng.random()
        if roll < 0.4:
            offset = AFTER_PREVIOUS
        elif roll < 0.7:
            offset = Absolute(int(rng.integers(0, 4000)))
        else:
            offset = Relative(1 if rng.random() < 0.5 else -1, int(rng.integers(0, 1500)))
        entries.append(
            Entry(
                target=target(i),
                tracks=tracks,
                duration=number(1, 2500) or 500.0,
                delay=number(0, 400),
                easing=str(rng.choice(EASING_NAMES)),
                offset=offset,
            )
        )
    return Script(loop=False, autoplay=True, entries=entries)


@pytest.fixture(scope="session")
def corpus():
    """Decomposed corpus: (design, document, seconds) per seed."""
    out = []
    for seed in CORPUS_SEEDS:
        design = make_design(seed)
        t0 = time.perf_counter()
        doc = decompose(design.image, design.client_set())
        out.append((design, doc, time.perf_counter() - t0))
    return out
