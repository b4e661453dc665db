"""HTTP-backed clients.

Each client POSTs one JSON document to its endpoint and reads one JSON
document back.  Images and masks travel as base64 PNG.  Authentication
is a bearer token read from an environment variable at call time, never
stored in config files.  Network and protocol failures all surface as
ClientError with the client's stage tag; retries with linear backoff
cover transient failures.

Request and response bodies:

* ocr        -> {"image": b64}            <- {"boxes": [{"text", "bbox"}]}
* stroke     -> {"image": b64}            <- {"mask": b64}
* detect     -> {"image": b64}            <- {"detections": [{"bbox", "rectangular"}]}
* segment    -> {"image": b64, "bbox": [x,y,w,h]}  <- {"mask": b64}
* inpaint    -> {"image": b64, "mask": b64}        <- {"image": b64}
* caption    -> {"image": b64}            <- {"caption": str}
* lmm        -> {"messages": [{"role", "content": [{"type": "text"|"image",
                 "text"|"image": ...}]}]}  <- {"content": str}

Masks are grayscale PNGs where any non-black pixel is inside the mask.
"""

from __future__ import annotations

import base64
import io
import os
import time

import numpy as np
import requests
from PIL import Image

from ..geometry import Rect
from .base import (
    Captioner,
    ChatMessage,
    ClientError,
    Detection,
    ImageRef,
    Inpainter,
    LayerDetector,
    LmmClient,
    MaskSegmenter,
    OcrClient,
    StrokeSegmenter,
    TextBox,
)


def _png_b64(array: np.ndarray, mode: str) -> str:
    buf = io.BytesIO()
    Image.fromarray(array, mode).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _b64_image(data: str, stage: str, mode: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data)
        with Image.open(io.BytesIO(raw)) as img:
            return np.asarray(img.convert(mode))
    except Exception as exc:
        raise ClientError(stage, f"response image undecodable: {exc}") from exc


class HttpJsonClient:
    """Shared POST/parse/retry plumbing for all HTTP clients."""

    stage = "lmm"
    single_flight = True

    def __init__(
        self,
        endpoint: str,
        auth_env: str | None = None,
        timeout_ms: int = 60_000,
        retries: int = 2,
    ):
        self.endpoint = endpoint
        self.auth_env = auth_env
        self.timeout_ms = timeout_ms
        self.retries = retries

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if not token:
                raise ClientError(
                    self.stage, f"auth environment variable {self.auth_env} is not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def post(self, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(0.5 * attempt)
            try:
                resp = requests.post(
                    self.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.timeout_ms / 1000.0,
                )
            except requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code >= 500:
                last = ClientError(self.stage, f"server error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ClientError(self.stage, f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
            except ValueError as exc:
                raise ClientError(self.stage, "response is not JSON") from exc
            if not isinstance(body, dict):
                raise ClientError(self.stage, "response is not a JSON object")
            return body
        raise ClientError(self.stage, f"request failed after retries: {last}")


class HttpOcr(HttpJsonClient, OcrClient):
    stage = "ocr"

    def recognize(self, image: np.ndarray) -> list[TextBox]:
        body = self.post({"image": _png_b64(image, "RGB")})
        try:
            return [TextBox(e["text"], Rect(*e["bbox"])) for e in body["boxes"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ClientError(self.stage, f"malformed response: {exc}") from exc


class HttpStrokeSegmenter(HttpJsonClient, StrokeSegmenter):
    stage = "stroke"

    def segment(self, image: np.ndarray) -> np.ndarray:
        body = self.post({"image": _png_b64(image, "RGB")})
        if "mask" not in body:
            raise ClientError(self.stage, "response missing mask")
        return _b64_image(body["mask"], self.stage, "L") > 0


class HttpLayerDetector(HttpJsonClient, LayerDetector):
    stage = "detect"

    def detect(self, image: np.ndarray) -> list[Detection]:
        body = self.post({"image": _png_b64(image, "RGB")})
        try:
            return [
                Detection(Rect(*e["bbox"]), bool(e["rectangular"]))
                for e in body["detections"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ClientError(self.stage, f"malformed response: {exc}") from exc


class HttpMaskSegmenter(HttpJsonClient, MaskSegmenter):
    stage = "segment"

    def segment(self, image: np.ndarray, bbox: Rect) -> np.ndarray:
        body = self.post({"image": _png_b64(image, "RGB"), "bbox": list(bbox)})
        if "mask" not in body:
            raise ClientError(self.stage, "response missing mask")
        return _b64_image(body["mask"], self.stage, "L") > 0


class HttpInpainter(HttpJsonClient, Inpainter):
    stage = "inpaint"

    def inpaint(self, image: np.ndarray, mask: np.ndarray) -> np.ndarray:
        mask8 = (np.asarray(mask, dtype=bool) * np.uint8(255)).astype(np.uint8)
        body = self.post(
            {"image": _png_b64(image, "RGB"), "mask": _png_b64(mask8, "L")}
        )
        if "image" not in body:
            raise ClientError(self.stage, "response missing image")
        out = _b64_image(body["image"], self.stage, "RGB")
        if out.shape != image.shape:
            raise ClientError(self.stage, f"response image shape {out.shape} mismatch")
        return out


class HttpCaptioner(HttpJsonClient, Captioner):
    stage = "caption"

    def caption(self, pixels: np.ndarray) -> str:
        body = self.post({"image": _png_b64(pixels, "RGBA")})
        text = body.get("caption")
        if not isinstance(text, str):
            raise ClientError(self.stage, "response missing caption")
        return text


class HttpLmm(HttpJsonClient, LmmClient):
    stage = "lmm"

    def chat(self, history: list[ChatMessage]) -> str:
        messages = []
        for msg in history:
            content = []
            for part in msg.parts:
                if isinstance(part, ImageRef):
                    content.append(
                        {"type": "image", "image": base64.b64encode(part.png).decode("ascii")}
                    )
                else:
                    content.append({"type": "text", "text": part})
            messages.append({"role": msg.role, "content": content})
        body = self.post({"messages": messages})
        text = body.get("content")
        if not isinstance(text, str):
            raise ClientError(self.stage, "response missing content")
        return text
