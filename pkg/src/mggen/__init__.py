"""mggen: layered decomposition and entrance animation of still designs.

The pipeline runs in three stages that also work standalone:

* ``decompose``: split a raster image into an opaque background plus
  text and element cutouts (``document`` holds the model, ``clients``
  the pluggable perception backends).
* ``planner``: choose entrance effects per layout group and emit a
  timeline script (``animdsl`` defines the language).
* ``timeline`` + ``compositor``: evaluate the script and rasterize
  frames, with interchangeable numpy/numba kernels under ``kernels``.
"""

from .animdsl import Script, parse, print_script, validate
from .clients import ClientSet, default_client_set, load_client_set
from .compositor import Frame, FrameSequence, composite, encode, render
from .decompose import DecomposeConfig, decompose
from .document import (
    LayeredDocument,
    LayerImage,
    LayerKind,
    export_html,
    export_manifest,
    import_manifest,
    new_document,
)
from .geometry import Rect
from .planner import codegen, group_layers, lmm_pipeline, plan
from .timeline import PropertyState, Timeline, compile_script, ease, frame_times, sample

__version__ = "0.1.0"

__all__ = [
    "ClientSet",
    "DecomposeConfig",
    "Frame",
    "FrameSequence",
    "LayerImage",
    "LayerKind",
    "LayeredDocument",
    "PropertyState",
    "Rect",
    "Script",
    "Timeline",
    "__version__",
    "codegen",
    "compile_script",
    "composite",
    "decompose",
    "default_client_set",
    "ease",
    "encode",
    "export_html",
    "export_manifest",
    "frame_times",
    "group_layers",
    "import_manifest",
    "lmm_pipeline",
    "load_client_set",
    "new_document",
    "parse",
    "plan",
    "print_script",
    "render",
    "sample",
    "validate",
]
