"""Timeline evaluation: easing curves, entry scheduling, frame sampling.

``compile_script`` resolves entry offsets against a running cursor into
absolute start times; ``sample`` evaluates every track at a time point;
``frame_times`` lists the sampling instants for a frame rate.  Before
its start an entry holds its ``from`` values, so slide-ins wait
off-stage and fade-ins stay invisible; after its end it holds ``to``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .animdsl import EASING_NAMES, Absolute, CheckedScript, Relative


def _linear(u: float) -> float:
    return u


def _in_quad(u: float) -> float:
    return u * u


def _out_quad(u: float) -> float:
    return 1.0 - (1.0 - u) * (1.0 - u)


def _in_out_quad(u: float) -> float:
    if u < 0.5:
        return 2.0 * u * u
    return 1.0 - (-2.0 * u + 2.0) ** 2 / 2.0


def _in_cubic(u: float) -> float:
    return u * u * u


def _out_cubic(u: float) -> float:
    return 1.0 - (1.0 - u) ** 3


def _in_out_cubic(u: float) -> float:
    if u < 0.5:
        return 4.0 * u * u * u
    return 1.0 - (-2.0 * u + 2.0) ** 3 / 2.0


def _out_back(u: float) -> float:
    c1 = 1.70158
    c3 = c1 + 1.0
    return 1.0 + c3 * (u - 1.0) ** 3 + c1 * (u - 1.0) ** 2


def _out_elastic(u: float) -> float:
    c4 = 2.0 * math.pi / 3.0
    return 2.0 ** (-10.0 * u) * math.sin((10.0 * u - 0.75) * c4) + 1.0


_EASINGS = {
    "linear": _linear,
    "easeInQuad": _in_quad,
    "easeOutQuad": _out_quad,
    "easeInOutQuad": _in_out_quad,
    "easeInCubic": _in_cubic,
    "easeOutCubic": _out_cubic,
    "easeInOutCubic": _in_out_cubic,
    "easeOutBack": _out_back,
    "easeOutElastic": _out_elastic,
}

assert tuple(_EASINGS) == EASING_NAMES


def ease(name: str, u: float) -> float:
    """Evaluate a named easing at progress u, clamped to [0, 1].

    Endpoints are exact: ease(name, 0) == 0 and ease(name, 1) == 1 for
    every curve.  Back and elastic overshoot in between by design.
    """
    try:
        fn = _EASINGS[name]
    except KeyError:
        raise ValueError(f"unknown easing {name!r}") from None
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return fn(u)


@dataclass(frozen=True)
class PropertyState:
    """Resolved transform of one layer at one instant."""

    tx: float = 0.0
    ty: float = 0.0
    scale: float = 1.0
    rotate: float = 0.0  # degrees, clockwise positive
    opacity: float = 1.0


IDENTITY = PropertyState()

_TRACK_FIELDS = {
    "translateX": "tx",
    "translateY": "ty",
    "scale": "scale",
    "rotate": "rotate",
    "opacity": "opacity",
}


@dataclass
class TimelineItem:
    layer_index: int
    tracks: dict[str, tuple[float, float]]
    start: float  # absolute ms, delay already folded in
    duration: float
    easing: str


@dataclass
class Timeline:
    items: list[TimelineItem] = field(default_factory=list)
    total_duration: float = 0.0
    n_layers: int = 0


def compile_script(checked: CheckedScript) -> Timeline:
    """Schedule a checked script into absolute-time items.

    The cursor starts at 0 and moves to the entry's end (resolved
    offset + delay + duration) after each entry.  An entry's offset
    resolves to the cursor by default, to a fixed time for "<ms>", and
    to the cursor shifted (floored at 0) for "+=<ms>"/"-=<ms>"; its
    delay then pushes the active window without affecting how the
    offset itself was resolved.
    """
    cursor = 0.0
    items: list[TimelineItem] = []
    for entry, layer_index in zip(checked.script.entries, checked.layer_indices):
        off = entry.offset
        if isinstance(off, Absolute):
            raw = float(off.ms)
        elif isinstance(off, Relative):
            raw = cursor + off.sign * off.ms
            if raw < 0.0:
                raw = 0.0
        else:
            raw = cursor
        start = raw + entry.delay
        items.append(
            TimelineItem(
                layer_index=layer_index,
                tracks=dict(entry.tracks),
                start=start,
                duration=entry.duration,
                easing=entry.easing,
            )
        )
        cursor = start + entry.duration
    total = max((it.start + it.duration for it in items), default=0.0)
    return Timeline(items=items, total_duration=total, n_layers=checked.n_layers)


def sample(timeline: Timeline, t: float) -> dict[int, PropertyState]:
    """States of all animated layers at time t (ms).

    Layers without an entry are absent from the result and render at
    identity.
    """
    out: dict[int, PropertyState] = {}
    for item in timeline.items:
        if t < item.start:
            pick = 0
        elif t >= item.start + item.duration:
            pick = 1
        else:
            pick = None
            v = ease(item.easing, (t - item.start) / item.duration)
        kwargs = {}
        for track, (frm, to) in item.tracks.items():
            if pick is None:
                value = frm + (to - frm) * v
            else:
                value = (frm, to)[pick]
            kwargs[_TRACK_FIELDS[track]] = value
        out[item.layer_index] = PropertyState(**kwargs)
    return out


def frame_times(timeline: Timeline, fps: float) -> list[float]:
    """Sampling instants k * (1000 / fps) up to the total duration.

    The exact end time is always included, appended as a terminal frame
    when the last regular instant falls short of it.  An empty timeline
    yields the single instant 0.
    """
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    total = timeline.total_duration
    step = 1000.0 / fps
    n = int(math.floor(total * fps / 1000.0))
    while n > 0 and n * step > total:
        n -= 1
    times = [k * step for k in range(n + 1)]
    if times[-1] != total:
        times.append(total)
    return times
