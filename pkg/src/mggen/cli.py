"""Command line interface.

Subcommands cover the pipeline stages separately (decompose, plan,
render) plus an end-to-end run and a kernel benchmark.  Exit codes: 0
on success, 2 for input or environment problems (unreadable files, bad
config, client failures), 3 for validation failures (scripts or plans
that do not fit the document).
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click
import numpy as np
from PIL import Image, UnidentifiedImageError

from . import __version__, bench
from .animdsl import DslError, parse, print_script, validate
from .clients.base import ClientError
from .clients.config import ConfigError, load_client_set
from .compositor import EmptySequence, encode, render
from .decompose import DecomposeConfig, ImageTooSmall, decompose
from .document import (
    DocumentError,
    LayeredDocument,
    LayerKind,
    export_assets,
    export_html,
    export_manifest,
    import_manifest,
)
from .planner import PlannerError, codegen, group_layers, lmm_pipeline, plan
from .timeline import compile_script

ASSET_DIR = "layers"

_INPUT_ERRORS = (
    ClientError,
    ConfigError,
    DocumentError,
    EmptySequence,
    ImageTooSmall,
    OSError,
    UnidentifiedImageError,
    ValueError,
)


def _die(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DslError, PlannerError) as exc:
        _die(3, str(exc))
    except _INPUT_ERRORS as exc:
        _die(2, str(exc))


def _load_image(path: str) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def _write_bundle(doc: LayeredDocument, outdir: str) -> None:
    os.makedirs(os.path.join(outdir, ASSET_DIR), exist_ok=True)
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(export_manifest(doc))
    for name, data in export_assets(doc).items():
        with open(os.path.join(outdir, ASSET_DIR, name), "wb") as fh:
            fh.write(data)
    with open(os.path.join(outdir, "index.html"), "w", encoding="utf-8") as fh:
        fh.write(export_html(doc, ASSET_DIR))


def _load_bundle(manifest_path: str) -> LayeredDocument:
    with open(manifest_path, encoding="utf-8") as fh:
        text = fh.read()
    asset_dir = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), ASSET_DIR)
    assets: dict[str, bytes] = {}
    try:
        names = json.loads(text).get("layers", [])
    except (json.JSONDecodeError, AttributeError):
        names = []
    for entry in names if isinstance(names, list) else []:
        if isinstance(entry, dict) and isinstance(entry.get("asset"), str):
            p = os.path.join(asset_dir, entry["asset"])
            if os.path.exists(p):
                with open(p, "rb") as fh:
                    assets[entry["asset"]] = fh.read()
    return import_manifest(text, assets)


def _plan_json(doc: LayeredDocument, groups, plans) -> str:
    return json.dumps(
        {
            "groups": [
                {"id": g.id, "label": g.label, "layers": g.layer_ids} for g in groups
            ],
            "plans": [
                {
                    "group": p.group.id,
                    "effect": {"kind": p.effect.kind, "direction": p.effect.direction},
                    "stagger_ms": p.stagger_ms,
                    "note": p.note,
                }
                for p in plans
            ],
        },
        indent=2,
        ensure_ascii=False,
    ) + "\n"


def _make_script(doc: LayeredDocument, mode: str, direction: str | None, clients) -> tuple[str, str | None]:
    """Returns (script text, plan json or None)."""
    if mode == "lmm":
        clients.require("lmm")
        return lmm_pipeline(doc, clients.lmm, direction, ASSET_DIR), None
    groups = group_layers(doc)
    animation = plan(doc, groups, direction)
    return codegen(animation, doc), _plan_json(doc, groups, animation.plans)


def _summarize(doc: LayeredDocument) -> str:
    text = sum(1 for l in doc.layers if l.kind is LayerKind.TEXT)
    other = len(doc.layers) - 1 - text
    return f"{len(doc.layers)} layers ({text} text, {other} elements, 1 background)"


@click.group()
@click.version_option(version=__version__, prog_name="mggen")
@click.option("-v", "--verbose", is_flag=True, help="Log pipeline details to stderr.")
def main(verbose: bool) -> None:
    """Turn still designs into layered entrance animations."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@main.command("decompose")
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--clients", "clients_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--min-size", default=16, show_default=True)
@click.option("--box-pad", default=1, show_default=True)
@click.option("--dilate-radius", default=2, show_default=True)
def cmd_decompose(
    image: str, out: str, clients_path: str | None, min_size: int, box_pad: int, dilate_radius: int
) -> None:
    """Split IMAGE into layers; write manifest, assets, and HTML to OUT."""

    def work() -> None:
        clients = load_client_set(clients_path)
        config = DecomposeConfig(min_size=min_size, box_pad=box_pad, dilate_radius=dilate_radius)
        doc = decompose(_load_image(image), clients, config)
        _write_bundle(doc, out)
        click.echo(f"decomposed {image} into {_summarize(doc)} -> {out}")

    _guarded(work)


@main.command("plan")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Script file (default stdout).")
@click.option("--direction", help="Free-text animation direction.")
@click.option("--mode", type=click.Choice(["rules", "lmm"]), default="rules", show_default=True)
@click.option("--clients", "clients_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--plan-out", type=click.Path(dir_okay=False), help="Also write plan JSON here.")
def cmd_plan(
    manifest: str,
    out: str | None,
    direction: str | None,
    mode: str,
    clients_path: str | None,
    plan_out: str | None,
) -> None:
    """Write an animation script for a decomposed document."""

    def work() -> None:
        doc = _load_bundle(manifest)
        clients = load_client_set(clients_path)
        text, plan_info = _make_script(doc, mode, direction, clients)
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
            click.echo(f"wrote {out}")
        else:
            click.echo(text, nl=False)
        if plan_out and plan_info:
            with open(plan_out, "w", encoding="utf-8") as fh:
                fh.write(plan_info)

    _guarded(work)


@main.command("render")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--fps", default=25, show_default=True)
@click.option(
    "--format",
    "formats",
    type=click.Choice(["png_seq", "y4m"]),
    multiple=True,
    default=("png_seq",),
    show_default=True,
)
@click.option("--workers", default=0, help="Render threads (0 = auto).")
def cmd_render(
    manifest: str, script: str, out: str, fps: int, formats: tuple[str, ...], workers: int
) -> None:
    """Rasterize SCRIPT over the document in MANIFEST."""

    def work() -> None:
        doc = _load_bundle(manifest)
        with open(script, encoding="utf-8") as fh:
            text = fh.read()
        checked = validate(parse(text), doc)
        timeline = compile_script(checked)
        seq = render(doc, timeline, fps=fps, workers=workers or None)
        os.makedirs(out, exist_ok=True)
        for fmt in formats:
            target = os.path.join(out, "frames") if fmt == "png_seq" else os.path.join(out, "video.y4m")
            encode(seq, fmt, target)
            click.echo(f"encoded {fmt} -> {target}")
        click.echo(
            f"rendered {len(seq.frames)} frames ({timeline.total_duration:g} ms at {fps} fps)"
        )

    _guarded(work)


@main.command("pipeline")
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(file_okay=False))
@click.option("--clients", "clients_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--direction", help="Free-text animation direction.")
@click.option("--mode", type=click.Choice(["rules", "lmm"]), default="rules", show_default=True)
@click.option("--fps", default=25, show_default=True)
@click.option(
    "--format",
    "formats",
    type=click.Choice(["png_seq", "y4m"]),
    multiple=True,
    default=("png_seq",),
    show_default=True,
)
@click.option("--workers", default=0, help="Render threads (0 = auto).")
def cmd_pipeline(
    image: str,
    out: str,
    clients_path: str | None,
    direction: str | None,
    mode: str,
    fps: int,
    formats: tuple[str, ...],
    workers: int,
) -> None:
    """Decompose IMAGE, plan, and render, writing every artifact to OUT."""

    def work() -> None:
        clients = load_client_set(clients_path)
        doc = decompose(_load_image(image), clients)
        _write_bundle(doc, out)
        click.echo(f"decomposed {image} into {_summarize(doc)}")
        text, plan_info = _make_script(doc, mode, direction, clients)
        with open(os.path.join(out, "script.anim"), "w", encoding="utf-8") as fh:
            fh.write(text)
        if plan_info:
            with open(os.path.join(out, "plan.json"), "w", encoding="utf-8") as fh:
                fh.write(plan_info)
        checked = validate(parse(text), doc)
        timeline = compile_script(checked)
        seq = render(doc, timeline, fps=fps, workers=workers or None)
        for fmt in formats:
            target = os.path.join(out, "frames") if fmt == "png_seq" else os.path.join(out, "video.y4m")
            encode(seq, fmt, target)
        click.echo(
            f"rendered {len(seq.frames)} frames ({timeline.total_duration:g} ms at {fps} fps) -> {out}"
        )

    _guarded(work)


@main.command("bench")
@click.option("--width", default=1280, show_default=True)
@click.option("--height", default=720, show_default=True)
@click.option("--layers", "n_layers", default=8, show_default=True)
@click.option("--duration", "duration_ms", default=5000, show_default=True)
@click.option("--fps", default=25, show_default=True)
@click.option(
    "--backend",
    type=click.Choice(["both", "numba", "numpy"]),
    default="both",
    show_default=True,
)
@click.option("--workers", default=1, show_default=True)
def cmd_bench(
    width: int,
    height: int,
    n_layers: int,
    duration_ms: int,
    fps: int,
    backend: str,
    workers: int,
) -> None:
    """Time the renderer on a synthetic scene, per kernel backend."""

    def work() -> None:
        backends = ("numba", "numpy") if backend == "both" else (backend,)
        results = bench.run(
            width=width,
            height=height,
            n_layers=n_layers,
            duration_ms=duration_ms,
            fps=fps,
            backends=backends,
            workers=workers,
        )
        if not results:
            _die(2, "no backend could run (is numba installed?)")
        click.echo(
            f"scene: {width}x{height}, {n_layers} layers, {duration_ms} ms at {fps} fps"
        )
        click.echo(bench.format_report(results))

    _guarded(work)


if __name__ == "__main__":
    main()
