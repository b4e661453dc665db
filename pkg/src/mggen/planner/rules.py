"""Rule-based animation planning.

Three deterministic stages mirror the conversational path: group layers
by layout, pick an entrance effect per group from its position (or from
a free-text direction), and emit a timeline script.  Groups appear one
after another with a short gap, members stagger within their group, and
the whole animation is rescaled when it would run past the cap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..animdsl import (
    AFTER_PREVIOUS,
    Absolute,
    Entry,
    Relative,
    Script,
    print_script,
)
from ..document import LayeredDocument, LayerImage, LayerKind
from ..geometry import Rect, union_all

GROUP_GAP_MS = 150
STAGGER_MS = 120
TOTAL_CAP_MS = 6000

EFFECT_KINDS = ("slide", "fade", "pop", "rotate")
SLIDE_DIRECTIONS = ("left", "right", "top", "bottom")


class PlannerError(Exception):
    pass


@dataclass(frozen=True)
class Effect:
    kind: str
    direction: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in EFFECT_KINDS:
            raise ValueError(f"unknown effect kind {self.kind!r}")
        if self.kind == "slide":
            if self.direction not in SLIDE_DIRECTIONS:
                raise ValueError(f"slide needs a direction, got {self.direction!r}")
        elif self.direction is not None:
            raise ValueError(f"{self.kind} takes no direction")

    def describe(self) -> str:
        if self.kind == "slide":
            return f"slide from {self.direction}"
        return self.kind


@dataclass
class LayerGroup:
    id: str
    layer_ids: list[str]
    label: str


@dataclass
class GroupPlan:
    group: LayerGroup
    effect: Effect
    stagger_ms: int = STAGGER_MS
    note: str = ""


@dataclass
class AnimationPlan:
    plans: list[GroupPlan] = field(default_factory=list)


def _vertical_gap(a: Rect, b: Rect) -> float:
    return max(b.y - a.y2, a.y - b.y2)


def _horizontal_overlap(a: Rect, b: Rect) -> int:
    return min(a.x2, b.x2) - max(a.x, b.x)


def _adjacent_text(a: Rect, b: Rect) -> bool:
    return _horizontal_overlap(a, b) > 0 and _vertical_gap(a, b) < 0.5 * min(a.h, b.h)


def _reading_order(layers: list[LayerImage]) -> list[LayerImage]:
    return sorted(layers, key=lambda l: (l.bbox.y, l.bbox.x, l.id))


def group_layers(doc: LayeredDocument) -> list[LayerGroup]:
    """Partition the animatable layers into layout groups.

    Text layers chain together when vertically adjacent (gap under half
    the shorter height) with some horizontal overlap, like lines of one
    paragraph.  A non-text layer joins the text group whose union box it
    overlaps best at IoU >= 0.1; the rest pool into one rectangular and
    one free-form group.  Groups come out in reading order.
    """
    text = [l for l in doc.layers if l.kind is LayerKind.TEXT]
    nontext = [l for l in doc.layers if l.kind in (LayerKind.RECTANGULAR, LayerKind.NONRECTANGULAR)]

    parent = list(range(len(text)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(text)):
        for j in range(i + 1, len(text)):
            if _adjacent_text(text[i].bbox, text[j].bbox):
                parent[find(i)] = find(j)

    clusters: dict[int, list[LayerImage]] = {}
    for i, layer in enumerate(text):
        clusters.setdefault(find(i), []).append(layer)
    text_groups = [_reading_order(members) for members in clusters.values()]
    text_groups.sort(key=lambda g: (g[0].bbox.y, g[0].bbox.x))
    unions = [union_all([l.bbox for l in g]) for g in text_groups]

    loose_rect: list[LayerImage] = []
    loose_free: list[LayerImage] = []
    for layer in nontext:
        best = -1
        best_iou = 0.0
        for gi, u in enumerate(unions):
            iou = layer.bbox.iou(u)
            if iou > best_iou:
                best = gi
                best_iou = iou
        if best >= 0 and best_iou >= 0.1:
            text_groups[best].append(layer)
        elif layer.kind is LayerKind.RECTANGULAR:
            loose_rect.append(layer)
        else:
            loose_free.append(layer)

    raw: list[tuple[list[LayerImage], str]] = []
    for members in text_groups:
        members = _reading_order(members)
        first_text = next(l for l in members if l.kind is LayerKind.TEXT)
        label = f'text "{first_text.caption[:24]}"' if first_text.caption else "text block"
        raw.append((members, label))
    if loose_rect:
        raw.append((_reading_order(loose_rect), "panels"))
    if loose_free:
        raw.append((_reading_order(loose_free), "shapes"))

    def sort_key(item: tuple[list[LayerImage], str]):
        u = union_all([l.bbox for l in item[0]])
        return (u.y, u.x)

    raw.sort(key=sort_key)
    return [
        LayerGroup(id=f"group_{i}", layer_ids=[l.id for l in members], label=label)
        for i, (members, label) in enumerate(raw)
    ]


def _group_rect(doc: LayeredDocument, group: LayerGroup) -> Rect:
    rect = union_all([doc.find(lid).bbox for lid in group.layer_ids])
    assert rect is not None
    return rect


def _has_text(doc: LayeredDocument, group: LayerGroup) -> bool:
    return any(doc.find(lid).kind is LayerKind.TEXT for lid in group.layer_ids)


def _layout_effect(doc: LayeredDocument, group: LayerGroup) -> tuple[Effect, str]:
    cx, cy = _group_rect(doc, group).center()
    w, h = doc.width, doc.height
    if cx < w / 3:
        return Effect("slide", "left"), "layout: left third"
    if cx > 2 * w / 3:
        return Effect("slide", "right"), "layout: right third"
    if cy < h / 3:
        return Effect("slide", "top"), "layout: top third"
    if cy > 2 * h / 3:
        return Effect("slide", "bottom"), "layout: bottom third"
    if _has_text(doc, group):
        return Effect("fade"), "layout: middle, text"
    return Effect("pop"), "layout: middle"


# direction phrases, longest match first within a clause
_PHRASE_EFFECTS: list[tuple[str, Effect]] = [
    ("from the left", Effect("slide", "left")),
    ("from left", Effect("slide", "left")),
    ("slide left", Effect("slide", "left")),
    ("from the right", Effect("slide", "right")),
    ("from right", Effect("slide", "right")),
    ("slide right", Effect("slide", "right")),
    ("from the top", Effect("slide", "top")),
    ("from above", Effect("slide", "top")),
    ("drop in", Effect("slide", "top")),
    ("from the bottom", Effect("slide", "bottom")),
    ("from below", Effect("slide", "bottom")),
    ("rise up", Effect("slide", "bottom")),
    ("fade", Effect("fade")),
    ("pop", Effect("pop")),
    ("rotate", Effect("rotate")),
    ("spin", Effect("rotate")),
]

_KIND_WORDS = {
    "text": (LayerKind.TEXT,),
    "title": (LayerKind.TEXT,),
    "heading": (LayerKind.TEXT,),
    "word": (LayerKind.TEXT,),
    "image": (LayerKind.RECTANGULAR,),
    "photo": (LayerKind.RECTANGULAR,),
    "picture": (LayerKind.RECTANGULAR,),
    "panel": (LayerKind.RECTANGULAR,),
    "shape": (LayerKind.NONRECTANGULAR,),
    "illustration": (LayerKind.NONRECTANGULAR,),
    "decoration": (LayerKind.NONRECTANGULAR,),
    "object": (LayerKind.RECTANGULAR, LayerKind.NONRECTANGULAR),
    "element": (LayerKind.RECTANGULAR, LayerKind.NONRECTANGULAR),
}


def _clause_effect(clause: str) -> tuple[str, Effect] | None:
    for phrase, effect in _PHRASE_EFFECTS:
        if phrase in clause:
            return phrase, effect
    return None


def _clause_mentions(clause: str, doc: LayeredDocument, group: LayerGroup) -> bool:
    words = set(re.findall(r"[a-z]+", clause))
    if "everything" in words or "all" in words:
        return True
    kinds = {doc.find(lid).kind for lid in group.layer_ids}
    for word, targets in _KIND_WORDS.items():
        if (word in words or word + "s" in words) and kinds.intersection(targets):
            return True
    for lid in group.layer_ids:
        caption = doc.find(lid).caption.lower()
        for token in re.findall(r"[a-z]+", caption):
            if len(token) >= 3 and token in words:
                return True
    return False


def plan(
    doc: LayeredDocument,
    groups: list[LayerGroup],
    direction: str | None = None,
) -> AnimationPlan:
    """Choose an entrance effect per group.

    Without a direction the choice follows the layout rule: groups in
    the outer thirds of the canvas slide in from their side, the middle
    band fades (text) or pops (everything else).  A free-text direction
    overrides the rule for the groups each of its clauses mentions;
    every plan's note says which rule fired.
    """
    clauses: list[str] = []
    if direction:
        clauses = [c.strip().lower() for c in re.split(r"[.;,\n]+", direction) if c.strip()]
    plans: list[GroupPlan] = []
    for group in groups:
        effect, note = _layout_effect(doc, group)
        for clause in clauses:
            hit = _clause_effect(clause)
            if hit and _clause_mentions(clause, doc, group):
                phrase, effect = hit
                note = f'direction: "{phrase}"'
                break
        plans.append(GroupPlan(group=group, effect=effect, note=note))
    return AnimationPlan(plans=plans)


_EFFECT_TIMING = {
    "slide": (600, "easeOutCubic"),
    "fade": (500, "linear"),
    "pop": (500, "easeOutBack"),
    "rotate": (700, "easeOutCubic"),
}


def _effect_tracks(
    effect: Effect, layer: LayerImage, canvas: tuple[int, int]
) -> dict[str, tuple[float, float]]:
    w, h = canvas
    r = layer.bbox
    if effect.kind == "slide":
        if effect.direction == "left":
            return {"translateX": (float(-(r.x + r.w)), 0.0)}
        if effect.direction == "right":
            return {"translateX": (float(w - r.x), 0.0)}
        if effect.direction == "top":
            return {"translateY": (float(-(r.y + r.h)), 0.0)}
        return {"translateY": (float(h - r.y), 0.0)}
    if effect.kind == "fade":
        return {"opacity": (0.0, 1.0)}
    if effect.kind == "pop":
        return {"scale": (0.3, 1.0), "opacity": (0.0, 1.0)}
    return {"rotate": (-180.0, 0.0), "opacity": (0.0, 1.0)}


def _scale_script(entries: list[Entry], factor: float) -> list[Entry]:
    scaled = []
    for e in entries:
        if isinstance(e.offset, Absolute):
            offset = Absolute(int(e.offset.ms * factor))
        elif isinstance(e.offset, Relative):
            offset = Relative(e.offset.sign, int(e.offset.ms * factor))
        else:
            offset = AFTER_PREVIOUS
        scaled.append(
            Entry(
                target=e.target,
                tracks=dict(e.tracks),
                duration=float(max(1, int(e.duration * factor))),
                delay=e.delay * factor,
                easing=e.easing,
                offset=offset,
            )
        )
    return scaled


def codegen(animation: AnimationPlan, doc: LayeredDocument) -> str:
    """Emit script text for a plan; the output always validates.

    Groups run in sequence with a GROUP_GAP_MS pause between them; the
    k-th member of a group starts k*stagger after the previous member
    ends, anchored by an absolute offset on the group opener.  When the
    nominal end would pass TOTAL_CAP_MS every duration and offset is
    scaled down proportionally (integer milliseconds, so the cap holds
    exactly).
    """
    entries: list[Entry] = []
    cursor = 0
    for plan_index, gp in enumerate(animation.plans):
        duration, easing = _EFFECT_TIMING[gp.effect.kind]
        group_start = 0 if plan_index == 0 else cursor + GROUP_GAP_MS
        for k, lid in enumerate(gp.group.layer_ids):
            layer = doc.find(lid)
            if layer is None:
                raise PlannerError(f"plan references unknown layer {lid!r}")
            if k == 0:
                offset: Absolute | Relative = Absolute(group_start)
                start = group_start
            else:
                offset = Relative(1, k * gp.stagger_ms)
                start = cursor + k * gp.stagger_ms
            entries.append(
                Entry(
                    target=lid,
                    tracks=_effect_tracks(gp.effect, layer, doc.canvas),
                    duration=float(duration),
                    easing=easing,
                    offset=offset,
                )
            )
            cursor = start + duration
    if cursor > TOTAL_CAP_MS:
        entries = _scale_script(entries, TOTAL_CAP_MS / cursor)
    return print_script(Script(loop=False, autoplay=True, entries=entries))
