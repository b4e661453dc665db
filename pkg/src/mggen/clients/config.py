"""Client configuration.

A TOML file assigns each slot a backend::

    [ocr]
    kind = "fixture"        # builtin | fixture | http
    path = "ocr.json"       # fixture: response file, relative to this file

    [strokes]
    kind = "builtin"
    window = 31

    [detector]
    kind = "http"
    endpoint = "https://example.test/detect"
    auth_env = "DETECT_TOKEN"
    timeout_ms = 30000

Slots left out (or the whole file, when no path is given) fall back to
the builtin defaults: null recognizer and detector, threshold
segmenters, diffusion inpainter, no captioner, no chat model.
"""

from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .base import ClientError, ClientSet
from .builtin import (
    BorderContrastSegmenter,
    DiffusionInpainter,
    NullDetector,
    NullOcr,
    SwatchCaptioner,
    ThresholdStrokeSegmenter,
)
from .fixtures import (
    FixtureDetector,
    FixtureOcr,
    FixtureSegmenter,
    FixtureStrokes,
    ScriptedLmm,
)
from .http import (
    HttpCaptioner,
    HttpInpainter,
    HttpLayerDetector,
    HttpLmm,
    HttpMaskSegmenter,
    HttpOcr,
    HttpStrokeSegmenter,
)

_HTTP_CLASSES = {
    "ocr": HttpOcr,
    "strokes": HttpStrokeSegmenter,
    "detector": HttpLayerDetector,
    "segmenter": HttpMaskSegmenter,
    "inpainter": HttpInpainter,
    "captioner": HttpCaptioner,
    "lmm": HttpLmm,
}

_FIXTURE_LOADERS = {
    "ocr": FixtureOcr.from_file,
    "strokes": FixtureStrokes.from_file,
    "detector": FixtureDetector.from_file,
    "segmenter": FixtureSegmenter.from_file,
    "lmm": ScriptedLmm.from_jsonl,
}

SLOTS = ("ocr", "strokes", "detector", "segmenter", "inpainter", "captioner", "lmm")


class ConfigError(Exception):
    pass


def default_client_set() -> ClientSet:
    """Builtin-only clients; runs anywhere, recognizes nothing."""
    return ClientSet(
        ocr=NullOcr(),
        strokes=ThresholdStrokeSegmenter(),
        detector=NullDetector(),
        segmenter=BorderContrastSegmenter(),
        inpainter=DiffusionInpainter(),
        captioner=None,
        lmm=None,
    )


def _build_builtin(slot: str, options: dict):
    if slot == "ocr":
        return NullOcr()
    if slot == "detector":
        return NullDetector()
    if slot == "strokes":
        return ThresholdStrokeSegmenter(window=int(options.get("window", 31)))
    if slot == "segmenter":
        return BorderContrastSegmenter()
    if slot == "inpainter":
        return DiffusionInpainter(
            max_iter=int(options.get("max_iter", 500)),
            tol=float(options.get("tol", 0.5)),
        )
    if slot == "captioner":
        return SwatchCaptioner()
    raise ConfigError(f"no builtin backend for slot {slot!r}")


def _build_http(slot: str, options: dict, base_dir: str):
    cls = _HTTP_CLASSES[slot]
    endpoint = options.get("endpoint")
    if not isinstance(endpoint, str) or not endpoint:
        raise ConfigError(f"[{slot}] http backend needs an endpoint")
    return cls(
        endpoint=endpoint,
        auth_env=options.get("auth_env"),
        timeout_ms=int(options.get("timeout_ms", 60_000)),
        retries=int(options.get("retries", 2)),
    )


def _build_fixture(slot: str, options: dict, base_dir: str):
    loader = _FIXTURE_LOADERS.get(slot)
    if loader is None:
        raise ConfigError(f"slot {slot!r} has no fixture backend")
    path = options.get("path")
    if not isinstance(path, str) or not path:
        raise ConfigError(f"[{slot}] fixture backend needs a path")
    full = path if os.path.isabs(path) else os.path.join(base_dir, path)
    if not os.path.exists(full):
        raise ConfigError(f"[{slot}] fixture file {full} not found")
    try:
        return loader(full)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"[{slot}] fixture file {full} unreadable: {exc}") from exc


def load_client_set(path: str | None = None) -> ClientSet:
    """Build a ClientSet from a TOML file, or the defaults when path is None."""
    clients = default_client_set()
    if path is None:
        return clients
    try:
        with open(path, "rb") as fh:
            config = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read client config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"client config {path} is not valid TOML: {exc}") from exc
    base_dir = os.path.dirname(os.path.abspath(path))
    for slot, options in config.items():
        if slot not in SLOTS:
            raise ConfigError(f"unknown client slot {slot!r} (expected one of {SLOTS})")
        if not isinstance(options, dict):
            raise ConfigError(f"[{slot}] must be a table")
        kind = options.get("kind")
        if kind == "builtin":
            client = _build_builtin(slot, options)
        elif kind == "http":
            client = _build_http(slot, options, base_dir)
        elif kind == "fixture":
            client = _build_fixture(slot, options, base_dir)
        elif kind == "none":
            client = None
        else:
            raise ConfigError(f"[{slot}] kind must be builtin, fixture, http, or none")
        setattr(clients, slot, client)
    return clients
