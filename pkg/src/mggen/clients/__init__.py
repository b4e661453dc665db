"""Pluggable perception and language backends."""

from .base import (
    ChatMessage,
    ClientError,
    ClientSet,
    DegenerateInpaint,
    Detection,
    ImageRef,
    TextBox,
    UnknownTurn,
    image_digest,
)
from .builtin import (
    BorderContrastSegmenter,
    DiffusionInpainter,
    NullDetector,
    NullOcr,
    SwatchCaptioner,
    ThresholdStrokeSegmenter,
    otsu_threshold,
)
from .config import ConfigError, default_client_set, load_client_set
from .fixtures import (
    FixtureDetector,
    FixtureOcr,
    FixtureSegmenter,
    FixtureStrokes,
    ScriptedLmm,
)

__all__ = [
    "ChatMessage",
    "ClientError",
    "ClientSet",
    "ConfigError",
    "DegenerateInpaint",
    "Detection",
    "ImageRef",
    "TextBox",
    "UnknownTurn",
    "image_digest",
    "BorderContrastSegmenter",
    "DiffusionInpainter",
    "NullDetector",
    "NullOcr",
    "SwatchCaptioner",
    "ThresholdStrokeSegmenter",
    "otsu_threshold",
    "default_client_set",
    "load_client_set",
    "FixtureDetector",
    "FixtureOcr",
    "FixtureSegmenter",
    "FixtureStrokes",
    "ScriptedLmm",
]
