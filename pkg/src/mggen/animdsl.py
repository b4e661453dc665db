"""Animation script language: parsing, printing, validation.

A script drives one timeline and reads like this::

    timeline(loop=false, autoplay=true) {
      add("#layer_1", {translateX: [-320, 0]}, duration=600, easing="easeOutCubic");
      add("#layer_2", {opacity: [0, 1]}, offset="-=200");
    }

Each ``add`` entry animates one target layer over a handful of numeric
tracks.  ``parse`` builds the AST and rejects anything outside the
grammar with positioned errors; ``print_script`` emits canonical text
that parses back to an equal AST; ``validate`` resolves targets against
a document and checks document-level rules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

PROPERTIES = ("translateX", "translateY", "scale", "rotate", "opacity")

EASING_NAMES = (
    "linear",
    "easeInQuad",
    "easeOutQuad",
    "easeInOutQuad",
    "easeInCubic",
    "easeOutCubic",
    "easeInOutCubic",
    "easeOutBack",
    "easeOutElastic",
)

DEFAULT_DURATION = 1000.0

_PARAM_KEYS = ("duration", "delay", "easing", "offset")
_OFFSET_RE = re.compile(r"^(\+=|-=)?(\d+)$")


class DslError(Exception):
    """Base class for script language failures."""


class DslSyntaxError(DslError):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        text = f"line {line}, col {col}: {message}"
        if expected:
            text += f" (expected {' | '.join(expected)})"
        super().__init__(text)


class UnknownProperty(DslSyntaxError):
    pass


class UnknownEasing(DslSyntaxError):
    pass


class NonPositiveDuration(DslSyntaxError):
    pass


class InvalidTrackRange(DslSyntaxError):
    """Track values outside the legal range for the property."""


class ScriptValidationError(DslError):
    """A parsed script that does not fit the target document."""

    def __init__(self, message: str, entry_index: int | None = None):
        self.entry_index = entry_index
        if entry_index is not None:
            message = f"entry {entry_index}: {message}"
        super().__init__(message)


class UnknownTarget(ScriptValidationError):
    pass


class DuplicateTargetAnimation(ScriptValidationError):
    pass


class BackgroundAnimated(ScriptValidationError):
    pass


class BadTimelineParams(ScriptValidationError):
    pass


@dataclass(frozen=True)
class Absolute:
    """Entry starts at a fixed time on the timeline."""

    ms: int

    def __post_init__(self) -> None:
        if self.ms < 0:
            raise ValueError("absolute offset must be >= 0")


@dataclass(frozen=True)
class Relative:
    """Entry starts at the cursor shifted by ms (sign is +1 or -1)."""

    sign: int
    ms: int

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError("relative offset sign must be +1 or -1")
        if self.ms < 0:
            raise ValueError("relative offset must be >= 0")


@dataclass(frozen=True)
class AfterPrevious:
    """Entry starts at the cursor (the default)."""


Offset = Absolute | Relative | AfterPrevious

AFTER_PREVIOUS = AfterPrevious()


@dataclass
class Entry:
    target: str
    tracks: dict[str, tuple[float, float]]
    duration: float = DEFAULT_DURATION
    delay: float = 0.0
    easing: str = "linear"
    offset: Offset = AFTER_PREVIOUS


@dataclass
class Script:
    loop: bool
    autoplay: bool
    entries: list[Entry] = field(default_factory=list)


@dataclass
class CheckedScript:
    """A script bound to a document: entry i animates layer_indices[i]."""

    script: Script
    layer_indices: list[int]
    n_layers: int


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | number | string | punct | eof
    value: str
    line: int
    col: int


_PUNCT = set("(){}[],;:=")
_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789")


def _lex(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch in _PUNCT:
            toks.append(_Token("punct", ch, line, start_col))
            i += 1
            col += 1
            continue
        if ch in _IDENT_START:
            j = i
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            toks.append(_Token("ident", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            toks.append(_Token("number", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n or text[j] == "\n":
                    raise DslSyntaxError("unterminated string", line, start_col)
                c = text[j]
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in ('"', "\\"):
                        raise DslSyntaxError("bad escape in string", line, col + (j - i))
                    out.append(text[j + 1])
                    j += 2
                    continue
                if c == '"':
                    break
                out.append(c)
                j += 1
            toks.append(_Token("string", "".join(out), line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        raise DslSyntaxError(f"unexpected character {ch!r}", line, start_col)
    toks.append(_Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.toks = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, tok: _Token, message: str, expected: tuple[str, ...] = ()) -> DslSyntaxError:
        return DslSyntaxError(message, tok.line, tok.col, expected)

    def expect_punct(self, ch: str) -> _Token:
        tok = self.next()
        if tok.kind != "punct" or tok.value != ch:
            raise self.fail(tok, f"got {tok.value or tok.kind!r}", (repr(ch),))
        return tok

    def expect_ident(self, *names: str) -> _Token:
        tok = self.next()
        if tok.kind != "ident" or (names and tok.value not in names):
            raise self.fail(tok, f"got {tok.value or tok.kind!r}", names or ("identifier",))
        return tok

    def expect_kind(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise self.fail(tok, f"got {tok.value or tok.kind!r}", (kind,))
        return tok

    def parse_bool(self) -> bool:
        tok = self.expect_ident("true", "false")
        return tok.value == "true"

    def parse_script(self) -> Script:
        self.expect_ident("timeline")
        self.expect_punct("(")
        self.expect_ident("loop")
        self.expect_punct("=")
        loop = self.parse_bool()
        self.expect_punct(",")
        self.expect_ident("autoplay")
        self.expect_punct("=")
        autoplay = self.parse_bool()
        self.expect_punct(")")
        self.expect_punct("{")
        entries: list[Entry] = []
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value == "}":
                self.next()
                break
            entries.append(self.parse_entry())
        self.expect_kind("eof")
        return Script(loop=loop, autoplay=autoplay, entries=entries)

    def parse_entry(self) -> Entry:
        self.expect_ident("add")
        self.expect_punct("(")
        target_tok = self.expect_kind("string")
        target = target_tok.value
        if target.startswith("#"):
            target = target[1:]
        if not target:
            raise self.fail(target_tok, "empty target selector")
        self.expect_punct(",")
        tracks = self.parse_tracks()
        duration = DEFAULT_DURATION
        delay = 0.0
        easing = "linear"
        offset: Offset = AFTER_PREVIOUS
        seen: set[str] = set()
        while True:
            tok = self.next()
            if tok.kind == "punct" and tok.value == ")":
                break
            if tok.kind != "punct" or tok.value != ",":
                raise self.fail(tok, f"got {tok.value!r}", ("','", "')'"))
            key_tok = self.expect_ident(*_PARAM_KEYS)
            key = key_tok.value
            if key in seen:
                raise self.fail(key_tok, f"parameter {key!r} given twice")
            seen.add(key)
            self.expect_punct("=")
            if key == "duration":
                num_tok = self.expect_kind("number")
                duration = float(num_tok.value)
                if duration <= 0:
                    raise NonPositiveDuration(
                        f"duration must be positive, got {num_tok.value}",
                        num_tok.line,
                        num_tok.col,
                    )
            elif key == "delay":
                num_tok = self.expect_kind("number")
                delay = float(num_tok.value)
                if delay < 0:
                    raise self.fail(num_tok, f"delay must be >= 0, got {num_tok.value}")
            elif key == "easing":
                name_tok = self.expect_kind("string")
                if name_tok.value not in EASING_NAMES:
                    raise UnknownEasing(
                        f"unknown easing {name_tok.value!r}",
                        name_tok.line,
                        name_tok.col,
                        EASING_NAMES,
                    )
                easing = name_tok.value
            else:
                off_tok = self.expect_kind("string")
                offset = self.parse_offset(off_tok)
        self.expect_punct(";")
        return Entry(
            target=target,
            tracks=tracks,
            duration=duration,
            delay=delay,
            easing=easing,
            offset=offset,
        )

    def parse_offset(self, tok: _Token) -> Offset:
        m = _OFFSET_RE.match(tok.value)
        if not m:
            raise self.fail(
                tok, f"bad offset {tok.value!r}", ('"<ms>"', '"+=<ms>"', '"-=<ms>"')
            )
        ms = int(m.group(2))
        if m.group(1) is None:
            return Absolute(ms)
        return Relative(1 if m.group(1) == "+=" else -1, ms)

    def parse_tracks(self) -> dict[str, tuple[float, float]]:
        self.expect_punct("{")
        tracks: dict[str, tuple[float, float]] = {}
        while True:
            prop_tok = self.expect_kind("ident")
            prop = prop_tok.value
            if prop not in PROPERTIES:
                raise UnknownProperty(
                    f"unknown property {prop!r}", prop_tok.line, prop_tok.col, PROPERTIES
                )
            if prop in tracks:
                raise self.fail(prop_tok, f"property {prop!r} listed twice")
            self.expect_punct(":")
            self.expect_punct("[")
            lo_tok = self.expect_kind("number")
            self.expect_punct(",")
            hi_tok = self.expect_kind("number")
            self.expect_punct("]")
            frm = float(lo_tok.value)
            to = float(hi_tok.value)
            if prop == "opacity":
                for tok, v in ((lo_tok, frm), (hi_tok, to)):
                    if not 0.0 <= v <= 1.0:
                        raise InvalidTrackRange(
                            f"opacity value {tok.value} outside [0, 1]", tok.line, tok.col
                        )
            if prop == "scale":
                for tok, v in ((lo_tok, frm), (hi_tok, to)):
                    if v <= 0.0:
                        raise InvalidTrackRange(
                            f"scale value {tok.value} must be positive", tok.line, tok.col
                        )
            tracks[prop] = (frm, to)
            tok = self.next()
            if tok.kind == "punct" and tok.value == "}":
                break
            if tok.kind != "punct" or tok.value != ",":
                raise self.fail(tok, f"got {tok.value!r}", ("','", "'}'"))
        return tracks


def parse(text: str) -> Script:
    """Parse script text into an AST, raising DslSyntaxError on bad input."""
    return _Parser(_lex(text)).parse_script()


def _fmt_number(v: float) -> str:
    return np.format_float_positional(float(v), unique=True, trim="-")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_script(script: Script) -> str:
    """Emit canonical script text; parse(print_script(s)) == s."""
    header = (
        f"timeline(loop={'true' if script.loop else 'false'}, "
        f"autoplay={'true' if script.autoplay else 'false'}) {{"
    )
    lines = [header]
    for e in script.entries:
        tracks = ", ".join(
            f"{prop}: [{_fmt_number(e.tracks[prop][0])}, {_fmt_number(e.tracks[prop][1])}]"
            for prop in PROPERTIES
            if prop in e.tracks
        )
        parts = [_quote("#" + e.target), "{" + tracks + "}"]
        if e.duration != DEFAULT_DURATION:
            parts.append(f"duration={_fmt_number(e.duration)}")
        if e.delay != 0.0:
            parts.append(f"delay={_fmt_number(e.delay)}")
        if e.easing != "linear":
            parts.append(f"easing={_quote(e.easing)}")
        if isinstance(e.offset, Absolute):
            parts.append(f'offset="{e.offset.ms}"')
        elif isinstance(e.offset, Relative):
            sign = "+=" if e.offset.sign > 0 else "-="
            parts.append(f'offset="{sign}{e.offset.ms}"')
        lines.append(f"  add({', '.join(parts)});")
    lines.append("}")
    return "\n".join(lines) + "\n"


def validate(script: Script, doc) -> CheckedScript:
    """Bind a script to a document, enforcing document-level rules.

    Rejects loop/autoplay overrides, unknown targets, animating the
    background, and two entries driving the same layer.
    """
    from .document import LayerKind

    if script.loop is not False or script.autoplay is not True:
        raise BadTimelineParams(
            f"timeline must use loop=false, autoplay=true "
            f"(got loop={str(script.loop).lower()}, autoplay={str(script.autoplay).lower()})"
        )
    indices: list[int] = []
    seen: set[str] = set()
    for i, entry in enumerate(script.entries):
        layer = doc.find(entry.target)
        if layer is None:
            raise UnknownTarget(f"no layer with id {entry.target!r}", i)
        if layer.kind is LayerKind.BACKGROUND:
            raise BackgroundAnimated(f"layer {entry.target!r} is the background", i)
        if entry.target in seen:
            raise DuplicateTargetAnimation(f"layer {entry.target!r} animated twice", i)
        seen.add(entry.target)
        indices.append(doc.index_of(entry.target))
    return CheckedScript(script=script, layer_indices=indices, n_layers=len(doc.layers))
