"""Perception and language client interfaces.

Decomposition and planning talk to interchangeable backends through the
slots of a ClientSet: text recognition, stroke segmentation, object
detection, mask segmentation, inpainting, captioning, and multimodal
chat.  Implementations come in three flavors: builtin (self-contained
algorithms), fixture (canned responses keyed by input), and http
(remote services).

Every failure surfaces as a ClientError tagged with the pipeline stage
that raised it.  A client whose backend cannot take overlapping calls
sets ``single_flight = True``; ClientSet.guard serializes access to it.
"""

from __future__ import annotations

import hashlib
import threading
from abc import ABC, abstractmethod
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Rect

STAGES = ("ocr", "stroke", "detect", "segment", "inpaint", "caption", "lmm")

SLOT_STAGE = {
    "ocr": "ocr",
    "strokes": "stroke",
    "detector": "detect",
    "segmenter": "segment",
    "inpainter": "inpaint",
    "captioner": "caption",
    "lmm": "lmm",
}


class ClientError(Exception):
    """A client call failed; stage names the pipeline step."""

    def __init__(self, stage: str, detail: str):
        self.stage = stage
        self.detail = detail
        super().__init__(f"[{stage}] {detail}")


class DegenerateInpaint(ClientError):
    """The inpainting mask leaves no known pixels to fill from."""

    def __init__(self, detail: str = "mask covers the whole image"):
        super().__init__("inpaint", detail)


class UnknownTurn(ClientError):
    """A scripted chat client got a prompt it has no response for."""

    def __init__(self, detail: str):
        super().__init__("lmm", detail)


@dataclass(frozen=True)
class TextBox:
    """One recognized text region."""

    text: str
    bbox: Rect

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("recognized text must be non-empty")
        if not isinstance(self.bbox, Rect):
            object.__setattr__(self, "bbox", Rect(*self.bbox))


@dataclass(frozen=True)
class Detection:
    """One detected non-text element; kind is rectangular or not."""

    bbox: Rect
    rectangular: bool

    def __post_init__(self) -> None:
        if not isinstance(self.bbox, Rect):
            object.__setattr__(self, "bbox", Rect(*self.bbox))


@dataclass(frozen=True)
class ImageRef:
    """An image attachment in a chat message."""

    name: str
    png: bytes


@dataclass
class ChatMessage:
    role: str  # "user" | "assistant"
    parts: list[str | ImageRef]

    def text(self) -> str:
        return "\n".join(p for p in self.parts if isinstance(p, str))


class OcrClient(ABC):
    single_flight = False

    @abstractmethod
    def recognize(self, image: np.ndarray) -> list[TextBox]:
        """Text regions of an (h, w, 3) uint8 image, reading order."""


class StrokeSegmenter(ABC):
    single_flight = False

    @abstractmethod
    def segment(self, image: np.ndarray) -> np.ndarray:
        """Boolean (h, w) mask of text stroke pixels."""


class LayerDetector(ABC):
    single_flight = False

    @abstractmethod
    def detect(self, image: np.ndarray) -> list[Detection]:
        """Non-text design elements of an image, stable order."""


class MaskSegmenter(ABC):
    single_flight = False

    @abstractmethod
    def segment(self, image: np.ndarray, bbox: Rect) -> np.ndarray:
        """Boolean (bbox.h, bbox.w) mask of the element inside bbox."""


class Inpainter(ABC):
    single_flight = False

    @abstractmethod
    def inpaint(self, image: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Fill masked pixels of an (h, w, 3) uint8 image plausibly."""


class Captioner(ABC):
    single_flight = False

    @abstractmethod
    def caption(self, pixels: np.ndarray) -> str:
        """Short description of an (h, w, 4) uint8 cutout."""


class LmmClient(ABC):
    single_flight = False

    @abstractmethod
    def chat(self, history: list[ChatMessage]) -> str:
        """Assistant reply to a conversation ending in a user message."""


@dataclass
class ClientSet:
    """The full complement of backends one pipeline run works with."""

    ocr: OcrClient | None = None
    strokes: StrokeSegmenter | None = None
    detector: LayerDetector | None = None
    segmenter: MaskSegmenter | None = None
    inpainter: Inpainter | None = None
    captioner: Captioner | None = None
    lmm: LmmClient | None = None
    _locks: dict[int, threading.Lock] = field(default_factory=dict, repr=False)

    def require(self, *slots: str) -> None:
        missing = [s for s in slots if getattr(self, s) is None]
        if missing:
            raise ClientError(SLOT_STAGE[missing[0]], f"no client configured for {missing[0]!r}")

    def guard(self, client: object):
        """Context manager serializing calls to single-flight clients."""
        if not getattr(client, "single_flight", False):
            return nullcontext()
        lock = self._locks.setdefault(id(client), threading.Lock())
        return lock


def image_digest(image: np.ndarray) -> str:
    """Stable content key for fixture lookups: sha256 of shape and bytes."""
    arr = np.ascontiguousarray(image)
    h = hashlib.sha256()
    h.update(str(arr.shape).encode("ascii"))
    h.update(str(arr.dtype).encode("ascii"))
    h.update(arr.tobytes())
    return h.hexdigest()
