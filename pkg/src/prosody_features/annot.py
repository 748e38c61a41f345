"""Tiered annotations: Praat TextGrid (long/short) and XML reading and writing."""
from __future__ import annotations

import logging
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

logger = logging.getLogger(__name__)

PAUSE_LABEL = "<P>"


class AnnotationError(ValueError):
    """Malformed annotation input."""


@dataclass
class Item:
    label: str
    t_start: float
    t_end: float

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise AnnotationError(f"non-finite time in item {self.label!r}")
        if self.t_start < 0:
            raise AnnotationError(f"negative time {self.t_start} in item {self.label!r}")
        if self.t_start > self.t_end:
            raise AnnotationError(
                f"item {self.label!r} starts after it ends ({self.t_start} > {self.t_end})")

    @property
    def is_event(self) -> bool:
        return self.t_start == self.t_end

    @property
    def center(self) -> float:
        return 0.5 * (self.t_start + self.t_end)


@dataclass
class Tier:
    name: str
    kind: str = "segment"
    items: list[Item] = field(default_factory=list)
    channel: int | None = None

    def __post_init__(self):
        if self.kind not in ("segment", "event"):
            raise AnnotationError(f"tier {self.name!r}: unknown kind {self.kind!r}")
        self.items = _clean_items(self.name, self.kind, self.items)

    @property
    def is_event(self) -> bool:
        return self.kind == "event"

    def speech_items(self, pause_label: str = PAUSE_LABEL) -> list[Item]:
        return [it for it in self.items if not is_pause(it.label, pause_label)]


@dataclass
class Annotation:
    tiers: dict[str, Tier] = field(default_factory=dict)
    duration: float = 0.0

    def add(self, tier: Tier, replace: bool = True) -> None:
        if tier.name in self.tiers and not replace:
            raise AnnotationError(f"duplicate tier name {tier.name!r}")
        self.tiers[tier.name] = tier
        if tier.items:
            self.duration = max(self.duration, tier.items[-1].t_end)


def is_pause(label: str, pause_label: str = PAUSE_LABEL) -> bool:
    return label.strip() == "" or label == pause_label


def _clean_items(name: str, kind: str, items: Iterable[Item]) -> list[Item]:
    items = sorted(items, key=lambda it: (it.t_start, it.t_end))
    out: list[Item] = []
    for it in items:
        if kind == "event" and not it.is_event:
            raise AnnotationError(f"tier {name!r}: event item with extent {it}")
        if kind == "segment" and out and it.t_start < out[-1].t_end - 1e-9:
            logger.warning("tier %r: item %r overlaps %r, dropped", name, it, out[-1])
            continue
        out.append(it)
    return out


def annotations_match(a: Annotation, b: Annotation, tol: float = 1e-6) -> bool:
    """Structural equality with time tolerance."""
    if list(a.tiers) != list(b.tiers) or abs(a.duration - b.duration) > tol:
        return False
    for name, ta in a.tiers.items():
        tb = b.tiers[name]
        if ta.kind != tb.kind or len(ta.items) != len(tb.items):
            return False
        for x, y in zip(ta.items, tb.items):
            if x.label != y.label or abs(x.t_start - y.t_start) > tol \
                    or abs(x.t_end - y.t_end) > tol:
                return False
    return True


# ---------------------------------------------------------------- TextGrid

_TOKEN = re.compile(
    r'"(?:[^"]|"")*"'            # quoted string, "" escapes a quote
    r'|\[[^\]\n]*\]|<[^>\n]*>'   # [1], [], <exists>: skipped
    r'|(?<![\w.])[-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?(?![\w.])')


def _tokens(text: str) -> list[str | float]:
    out: list[str | float] = []
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        if tok[0] == '"':
            out.append(tok[1:-1].replace('""', '"'))
        elif tok[0] in "[<":
            continue
        else:
            out.append(float(tok))
    return out


class _Stream:
    def __init__(self, toks):
        self.toks, self.i = toks, 0

    def num(self, where: str) -> float:
        tok = self._next(where)
        if not isinstance(tok, float):
            raise AnnotationError(f"{where}: expected a number, got {tok!r}")
        return tok

    def str(self, where: str) -> str:
        tok = self._next(where)
        if not isinstance(tok, str):
            raise AnnotationError(f"{where}: expected a string, got {tok!r}")
        return tok

    def _next(self, where):
        if self.i >= len(self.toks):
            raise AnnotationError(f"{where}: unexpected end of input")
        tok = self.toks[self.i]
        self.i += 1
        return tok


def parse_textgrid(text: str, pause_label: str = PAUSE_LABEL) -> Annotation:
    """Parse a TextGrid in long or short text form."""
    s = _Stream(_tokens(text.lstrip("﻿")))
    if s.str("header") != "ooTextFile" or s.str("header") != "TextGrid":
        raise AnnotationError("header: not a TextGrid text file")
    s.num("xmin")
    xmax = s.num("xmax")
    n_tiers = int(s.num("tier count"))
    ann = Annotation(duration=xmax)
    for ti in range(1, n_tiers + 1):
        where = f"tier {ti}"
        cls = s.str(f"{where} class")
        name = s.str(f"{where} name")
        s.num(f"{where} xmin")
        s.num(f"{where} xmax")
        n = int(s.num(f"{where} size"))
        items = []
        for ii in range(1, n + 1):
            w = f"{where} item {ii}"
            try:
                if cls == "IntervalTier":
                    a, b = s.num(w), s.num(w)
                    items.append(Item(s.str(w), a, b))
                elif cls == "TextTier":
                    t = s.num(w)
                    items.append(Item(s.str(w), t, t))
                else:
                    raise AnnotationError(f"{where}: unknown tier class {cls!r}")
            except AnnotationError as e:
                raise AnnotationError(f"{w}: {e}") from None
        kind = "segment" if cls == "IntervalTier" else "event"
        if name in ann.tiers:
            raise AnnotationError(f"{where}: duplicate tier name {name!r}")
        ann.tiers[name] = Tier(name, kind, items)
    return ann


def _q(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def _f(x: float) -> str:
    return f"{x:.6f}"


def _interval_fill(tier: Tier, xmin: float, xmax: float) -> list[Item]:
    """Praat interval tiers tile their domain; gaps become unlabeled intervals."""
    out: list[Item] = []
    t = xmin
    for it in tier.items:
        if it.t_start > t + 1e-9:
            out.append(Item("", t, it.t_start))
        out.append(it)
        t = it.t_end
    if xmax > t + 1e-9:
        out.append(Item("", t, xmax))
    return out


def _write_textgrid(a: Annotation, short: bool) -> str:
    xmax = max([a.duration] + [t.items[-1].t_end for t in a.tiers.values() if t.items])
    lines = ['File type = "ooTextFile"', 'Object class = "TextGrid"', ""]
    if short:
        lines += [_f(0), _f(xmax), "<exists>", str(len(a.tiers))]
    else:
        lines += [f"xmin = {_f(0)}", f"xmax = {_f(xmax)}", "tiers? <exists>",
                  f"size = {len(a.tiers)}", "item []:"]
    for ti, tier in enumerate(a.tiers.values(), start=1):
        seg = tier.kind == "segment"
        items = _interval_fill(tier, 0.0, xmax) if seg else tier.items
        cls = "IntervalTier" if seg else "TextTier"
        if short:
            lines += [_q(cls), _q(tier.name), _f(0), _f(xmax), str(len(items))]
            for it in items:
                lines += [_f(it.t_start), _f(it.t_end), _q(it.label)] if seg \
                    else [_f(it.t_start), _q(it.label)]
            continue
        sub = "intervals" if seg else "points"
        lines += [f"    item [{ti}]:", f"        class = {_q(cls)}",
                  f"        name = {_q(tier.name)}", f"        xmin = {_f(0)}",
                  f"        xmax = {_f(xmax)}", f"        {sub}: size = {len(items)}"]
        for ii, it in enumerate(items, start=1):
            lines.append(f"        {sub} [{ii}]:")
            if seg:
                lines += [f"            xmin = {_f(it.t_start)}", f"            xmax = {_f(it.t_end)}",
                          f"            text = {_q(it.label)}"]
            else:
                lines += [f"            number = {_f(it.t_start)}",
                          f"            mark = {_q(it.label)}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- XML

def _child_text(el: ET.Element, tag: str, where: str) -> str:
    c = el.find(tag)
    if c is None:
        raise AnnotationError(f"{where}: missing <{tag}>")
    return (c.text or "").strip() if tag != "label" else (c.text or "")


def _child_num(el: ET.Element, tag: str, where: str) -> float:
    txt = _child_text(el, tag, where)
    try:
        return float(txt)
    except ValueError:
        raise AnnotationError(f"{where}: <{tag}> is not a number: {txt!r}") from None


def parse_xml_annotation(text: str) -> Annotation:
    try:
        root = ET.fromstring(text.lstrip("﻿").encode("utf-8")
                             if "encoding=" in text[:100] else text.lstrip("﻿"))
    except ET.ParseError as e:
        raise AnnotationError(f"xml: {e}") from None
    tiers_el = root if root.tag == "tiers" else root.find("tiers")
    ann = Annotation()
    dur_el = root.find("duration")
    if tiers_el is None:
        raise AnnotationError("xml: no <tiers> element below the root")
    for ti, tel in enumerate(tiers_el.findall("tier"), start=1):
        where = f"tier {ti}"
        name = _child_text(tel, "name", where)
        items_el = tel.find("items")
        if items_el is None:
            raise AnnotationError(f"{where}: missing <items>")
        items, kinds = [], set()
        for ii, iel in enumerate(items_el.findall("item"), start=1):
            w = f"{where} item {ii}"
            label = _child_text(iel, "label", w)
            if iel.find("t_start") is not None or iel.find("t_end") is not None:
                a, b = _child_num(iel, "t_start", w), _child_num(iel, "t_end", w)
                kinds.add("segment")
            else:
                a = b = _child_num(iel, "t", w)
                kinds.add("event")
            try:
                items.append(Item(label, a, b))
            except AnnotationError as e:
                raise AnnotationError(f"{w}: {e}") from None
        if len(kinds) > 1:
            raise AnnotationError(f"{where}: mixes segment and event items")
        kind_el = tel.find("kind")
        kind = kinds.pop() if kinds else (kind_el.text.strip() if kind_el is not None
                                          and kind_el.text else "segment")
        if name in ann.tiers:
            raise AnnotationError(f"{where}: duplicate tier name {name!r}")
        ann.add(Tier(name, kind, items), replace=False)
    if dur_el is not None and dur_el.text:
        ann.duration = float(dur_el.text)
    return ann


def _write_xml(a: Annotation) -> str:
    root = ET.Element("annotation")
    ET.SubElement(root, "duration").text = repr(float(a.duration))
    tiers_el = ET.SubElement(root, "tiers")
    for tier in a.tiers.values():
        tel = ET.SubElement(tiers_el, "tier")
        ET.SubElement(tel, "name").text = tier.name
        ET.SubElement(tel, "kind").text = tier.kind
        items_el = ET.SubElement(tel, "items")
        for it in tier.items:
            iel = ET.SubElement(items_el, "item")
            ET.SubElement(iel, "label").text = it.label
            if tier.kind == "segment":
                ET.SubElement(iel, "t_start").text = repr(float(it.t_start))
                ET.SubElement(iel, "t_end").text = repr(float(it.t_end))
            else:
                ET.SubElement(iel, "t").text = repr(float(it.t_start))
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def write_annotation(a: Annotation, fmt: str = "textgrid-long") -> str:
    if fmt == "textgrid-long":
        return _write_textgrid(a, short=False)
    if fmt == "textgrid-short":
        return _write_textgrid(a, short=True)
    if fmt == "xml":
        return _write_xml(a)
    raise ValueError(f"unknown annotation format {fmt!r}")


def decode_bytes(raw: bytes) -> str:
    if raw.startswith((b"\xff\xfe", b"\xfe\xff")):
        return raw.decode("utf-16")
    return raw.decode("utf-8-sig")


def read_annotation(path: str | Path, typ: str | None = None) -> Annotation:
    path = Path(path)
    text = decode_bytes(path.read_bytes())
    typ = (typ or path.suffix.lstrip(".")).lower()
    if typ == "xml" or text.lstrip().startswith("<?xml") or text.lstrip().startswith("<annotation"):
        return parse_xml_annotation(text)
    return parse_textgrid(text)


def save_annotation(a: Annotation, path: str | Path, typ: str = "TextGrid") -> None:
    fmt = "xml" if typ.lower() == "xml" else "textgrid-long"
    Path(path).write_text(write_annotation(a, fmt), encoding="utf-8")


# ---------------------------------------------------------------- tier helpers

def chunk_spans(chunks: Tier | None, duration: float,
                pause_label: str = PAUSE_LABEL) -> list[tuple[float, float]]:
    """Speech chunk intervals; the whole file when no chunk tier is given."""
    if chunks is None:
        return [(0.0, duration)]
    spans = [(it.t_start, it.t_end) for it in chunks.speech_items(pause_label)]
    return spans or [(0.0, duration)]


def expand_events_to_global_segments(tier: Tier, chunks: Tier | None = None,
                                     pause_label: str = PAUSE_LABEL,
                                     duration: float | None = None) -> Tier:
    """Turn right-boundary events into segments.

    Each event closes the segment that began at the previous event, at the
    end of a pause event, or at the chunk start. Segments never cross chunk
    edges; a chunk edge closes the running segment.
    """
    if tier.kind != "event":
        raise AnnotationError(f"tier {tier.name!r} is not an event tier")
    events = tier.items
    end = duration if duration is not None else (events[-1].t_end if events else 0.0)
    out: list[Item] = []
    if chunks is None:
        start = 0.0
        for ev in events:
            if not is_pause(ev.label, pause_label) and ev.t_start > start:
                out.append(Item(ev.label, start, ev.t_start))
            start = max(start, ev.t_start)
    else:
        for c0, c1 in chunk_spans(chunks, end, pause_label):
            start = c0
            for ev in events:
                if ev.t_start <= c0 or ev.t_start > c1:
                    continue
                if not is_pause(ev.label, pause_label) and ev.t_start > start:
                    out.append(Item(ev.label, start, ev.t_start))
                start = ev.t_start
            if c1 > start + 1e-9:
                out.append(Item("x", start, c1))
    return Tier(tier.name, "segment", out, tier.channel)
