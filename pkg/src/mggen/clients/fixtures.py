"""Fixture clients: canned responses keyed by input content.

Perception fixtures map an image digest (see ``image_digest``) to a
prepared answer, which makes pipeline runs fully reproducible and lets
tests supply ground truth.  The scripted chat client replays a recorded
conversation by turn number and prompt template.

File formats, all relative paths resolved against the fixture file:

* ocr: JSON ``{digest: [{"text": str, "bbox": [x, y, w, h]}]}``
* detector: JSON ``{digest: [{"bbox": [...], "rectangular": bool}]}``
* strokes: JSON ``{digest: "mask.png"}`` (non-black pixels are stroke)
* segmenter: JSON ``{digest: {"x,y,w,h": "mask.png"}}``
* lmm: JSON lines, each ``{"turn": int, "template": str, "response": str}``
"""

from __future__ import annotations

import json
import os

import numpy as np
from PIL import Image

from ..geometry import Rect
from .base import (
    ChatMessage,
    ClientError,
    Detection,
    LayerDetector,
    LmmClient,
    MaskSegmenter,
    OcrClient,
    StrokeSegmenter,
    TextBox,
    UnknownTurn,
    image_digest,
)

# opening phrases of the conversation templates, used to recognize which
# prompt a replayed transcript is answering
TEMPLATE_PREFIXES = (
    ("grouping", "Please divide all layers into several animation groups"),
    ("planning", "Given image 1 shows the thumbnail"),
    ("coding", "Please generate an animation script"),
    ("repair", "The previous animation script failed validation"),
)


def _load_mask(path: str) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) > 0


class FixtureOcr(OcrClient):
    def __init__(self, responses: dict[str, list[TextBox]]):
        self.responses = responses

    @classmethod
    def from_file(cls, path: str) -> "FixtureOcr":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            {
                digest: [TextBox(e["text"], Rect(*e["bbox"])) for e in entries]
                for digest, entries in raw.items()
            }
        )

    def recognize(self, image: np.ndarray) -> list[TextBox]:
        digest = image_digest(image)
        if digest not in self.responses:
            raise ClientError("ocr", f"no fixture for image {digest[:12]}")
        return list(self.responses[digest])


class FixtureDetector(LayerDetector):
    def __init__(self, responses: dict[str, list[Detection]]):
        self.responses = responses

    @classmethod
    def from_file(cls, path: str) -> "FixtureDetector":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            {
                digest: [Detection(Rect(*e["bbox"]), bool(e["rectangular"])) for e in entries]
                for digest, entries in raw.items()
            }
        )

    def detect(self, image: np.ndarray) -> list[Detection]:
        digest = image_digest(image)
        if digest not in self.responses:
            raise ClientError("detect", f"no fixture for image {digest[:12]}")
        return list(self.responses[digest])


class FixtureStrokes(StrokeSegmenter):
    def __init__(self, responses: dict[str, np.ndarray]):
        self.responses = responses

    @classmethod
    def from_file(cls, path: str) -> "FixtureStrokes":
        base = os.path.dirname(os.path.abspath(path))
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            {
                digest: _load_mask(os.path.join(base, rel))
                for digest, rel in raw.items()
            }
        )

    def segment(self, image: np.ndarray) -> np.ndarray:
        digest = image_digest(image)
        if digest not in self.responses:
            raise ClientError("stroke", f"no fixture for image {digest[:12]}")
        return self.responses[digest].copy()


class FixtureSegmenter(MaskSegmenter):
    def __init__(self, responses: dict[tuple[str, Rect], np.ndarray]):
        self.responses = responses

    @classmethod
    def from_file(cls, path: str) -> "FixtureSegmenter":
        base = os.path.dirname(os.path.abspath(path))
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        responses: dict[tuple[str, Rect], np.ndarray] = {}
        for digest, by_box in raw.items():
            for key, rel in by_box.items():
                bbox = Rect(*(int(v) for v in key.split(",")))
                responses[(digest, bbox)] = _load_mask(os.path.join(base, rel))
        return cls(responses)

    def segment(self, image: np.ndarray, bbox: Rect) -> np.ndarray:
        digest = image_digest(image)
        key = (digest, bbox)
        if key not in self.responses:
            raise ClientError(
                "segment", f"no fixture for image {digest[:12]} bbox {tuple(bbox)}"
            )
        return self.responses[key].copy()


class ScriptedLmm(LmmClient):
    """Replays recorded chat turns keyed by (turn number, template).

    The turn number is the count of user messages in the history; the
    template is recognized from the opening phrase of the last user
    message.  Any prompt without a recorded response raises UnknownTurn,
    so a replayed pipeline cannot silently drift from its recording.
    """

    def __init__(self, turns: dict[tuple[int, str], str]):
        self.turns = turns

    @classmethod
    def from_jsonl(cls, path: str) -> "ScriptedLmm":
        turns: dict[tuple[int, str], str] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                turns[(int(rec["turn"]), rec["template"])] = rec["response"]
        return cls(turns)

    @staticmethod
    def classify_prompt(message: ChatMessage) -> str | None:
        text = message.text().lstrip()
        for name, prefix in TEMPLATE_PREFIXES:
            if text.startswith(prefix):
                return name
        return None

    def chat(self, history: list[ChatMessage]) -> str:
        if not history or history[-1].role != "user":
            raise ClientError("lmm", "history must end with a user message")
        turn = sum(1 for m in history if m.role == "user")
        template = self.classify_prompt(history[-1])
        if template is None:
            raise UnknownTurn(f"turn {turn}: prompt matches no known template")
        key = (turn, template)
        if key not in self.turns:
            raise UnknownTurn(f"no scripted response for turn {turn} ({template})")
        return self.turns[key]
