"""Conversational animation planning.

Mirrors the rule-based stages as three chat turns against a multimodal
model: group the layers given the page render and its HTML, draft a
plan honoring an optional user direction, then write the timeline
script.  The model writes the same restricted language the parser
accepts, so its output is checked like any other script; one repair
turn quotes the validation errors back, and if that also fails the
rule-based planner takes over with a warning.
"""

from __future__ import annotations

import json
import logging
import re
from functools import lru_cache
from importlib import resources

from ..animdsl import DslError, parse, print_script, validate
from ..clients.base import ChatMessage, ClientError, ImageRef, LmmClient
from ..compositor import composite
from ..document import LayeredDocument, LayerKind, encode_png, export_html
from .rules import LayerGroup, PlannerError, codegen, group_layers, plan

log = logging.getLogger(__name__)


class MalformedGroups(PlannerError):
    """The grouping reply was not the expected JSON shape."""


class NonPartition(PlannerError):
    """The grouping reply does not cover each layer exactly once."""


@lru_cache(maxsize=None)
def _prompt(name: str) -> str:
    return (
        resources.files("mggen.planner").joinpath("prompts", f"{name}.txt").read_text("utf-8")
    )


_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def extract_code_block(text: str) -> str:
    """First fenced code block, or the whole text when nothing is fenced."""
    m = _FENCE_RE.search(text)
    if m:
        return m.group(1).strip()
    return text.strip()


def parse_groups(text: str, doc: LayeredDocument) -> list[LayerGroup]:
    """Read a grouping reply and check it partitions the layers.

    Expects JSON (possibly fenced): a list of {"group": name,
    "layers": [ids]}.  Every non-background layer must appear in
    exactly one group and every referenced id must exist.
    """
    payload = extract_code_block(text)
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise MalformedGroups(f"grouping reply is not JSON: {exc.msg}") from exc
    if not isinstance(obj, list):
        raise MalformedGroups("grouping reply must be a JSON list")
    groups: list[LayerGroup] = []
    for i, entry in enumerate(obj):
        if not isinstance(entry, dict):
            raise MalformedGroups(f"group {i} is not an object")
        label = entry.get("group")
        layers = entry.get("layers")
        if not isinstance(label, str):
            raise MalformedGroups(f"group {i} is missing a name")
        if not isinstance(layers, list) or not all(isinstance(x, str) for x in layers):
            raise MalformedGroups(f"group {i} needs a list of layer ids")
        groups.append(LayerGroup(id=f"group_{i}", layer_ids=list(layers), label=label))

    expected = {l.id for l in doc.layers if l.kind is not LayerKind.BACKGROUND}
    seen: set[str] = set()
    for g in groups:
        if not g.layer_ids:
            raise NonPartition(f"group {g.label!r} is empty")
        for lid in g.layer_ids:
            if lid not in expected:
                raise NonPartition(f"group {g.label!r} references unknown layer {lid!r}")
            if lid in seen:
                raise NonPartition(f"layer {lid!r} appears in more than one group")
            seen.add(lid)
    missing = expected - seen
    if missing:
        raise NonPartition(f"layers not grouped: {sorted(missing)}")
    return groups


def _chat(lmm: LmmClient, history: list[ChatMessage]) -> str:
    try:
        reply = lmm.chat(history)
    except ClientError:
        raise
    except Exception as exc:
        raise ClientError("lmm", f"{type(exc).__name__}: {exc}") from exc
    history.append(ChatMessage("assistant", [reply]))
    return reply


def _groups_json(groups: list[LayerGroup]) -> str:
    return json.dumps(
        [{"group": g.label, "layers": g.layer_ids} for g in groups],
        indent=2,
        ensure_ascii=False,
    )


def lmm_pipeline(
    doc: LayeredDocument,
    lmm: LmmClient,
    direction: str | None = None,
    asset_dir: str = "layers",
) -> str:
    """Plan through chat and return validated script text.

    Runs grouping, planning, and coding turns; a script failing
    validation gets one repair turn quoting the errors, after which the
    rule-based planner is the fallback (logged as a warning).  Grouping
    replies that do not parse raise instead of falling back, since that
    signals a broken client rather than a creative miss.
    """
    html = export_html(doc, asset_dir)
    thumbnail = ImageRef("image 1", encode_png(composite(doc).pixels))
    history = [
        ChatMessage("user", [thumbnail, _prompt("grouping").replace("[#HTML]", html)])
    ]
    groups = parse_groups(_chat(lmm, history), doc)

    planning = _prompt("planning").replace("[#USER]", direction or "").replace(
        "[#LAYER]", _groups_json(groups)
    )
    history.append(ChatMessage("user", [planning]))
    _chat(lmm, history)

    coding = _prompt("coding") + "\n" + _prompt("dsl_grammar")
    history.append(ChatMessage("user", [coding]))
    reply = _chat(lmm, history)

    for attempt in range(2):
        try:
            script = parse(extract_code_block(reply))
            validate(script, doc)
            return print_script(script)
        except DslError as exc:
            if attempt == 0:
                repair = _prompt("repair").replace("[#ERRORS]", str(exc))
                history.append(ChatMessage("user", [repair]))
                reply = _chat(lmm, history)
            else:
                log.warning(
                    "FallbackUsed: scripted reply still invalid after repair (%s); "
                    "using rule-based planning",
                    exc,
                )
    return codegen(plan(doc, group_layers(doc), direction), doc)
