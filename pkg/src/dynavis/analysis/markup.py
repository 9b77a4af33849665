"""HTML fragment analysis and id rewriting.

Widget markup must be a well-formed fragment rooted at a single
container element. Parsing collects every element (with its source
offset and raw tag text, so ids can be rewritten in place), the ids in
document order, and the interactive inputs with enough detail for the
smoke-test probe policy.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Any, Optional

from ..errors import MarkupParseError

VOID_ELEMENTS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "source", "track", "wbr",
}

INPUT_TAGS = {"input", "select", "textarea"}

# id attribute, not preceded by a word char or hyphen (avoids data-id)
_ID_ATTR_RE = re.compile(
    r"(?<![-\w])id\s*=\s*(\"(?P<dq>[^\"]*)\"|'(?P<sq>[^']*)'|(?P<bare>[^\s>/]+))",
    re.IGNORECASE,
)
_FOR_ATTR_RE = re.compile(
    r"(?<![-\w])for\s*=\s*(\"(?P<dq>[^\"]*)\"|'(?P<sq>[^']*)'|(?P<bare>[^\s>/]+))",
    re.IGNORECASE,
)


@dataclass
class ElementInfo:
    index: int
    tag: str
    attrs: dict
    offset: int
    raw: str
    line: int
    column: int
    depth: int
    id: Optional[str] = None
    options: list = field(default_factory=list)
    text: str = ""


@dataclass(frozen=True)
class InputInfo:
    id: Optional[str]
    tag: str
    kind: str
    options: tuple
    min: Optional[str]
    max: Optional[str]
    value: Optional[str]
    checked: bool
    multiple: bool


@dataclass(frozen=True)
class MarkupInfo:
    source: str
    elements: tuple[ElementInfo, ...]
    root: ElementInfo
    ids: tuple[str, ...]
    inputs: tuple[InputInfo, ...]
    title: str


class _FragmentParser(HTMLParser):
    def __init__(self, source: str):
        super().__init__(convert_charrefs=True)
        self.source = source
        self.line_starts = [0]
        for i, ch in enumerate(source):
            if ch == "\n":
                self.line_starts.append(i + 1)
        self.elements: list[ElementInfo] = []
        self.stack: list[ElementInfo] = []
        self.roots: list[ElementInfo] = []
        self.label_texts: list[str] = []
        self._label_depths: list[int] = []

    def _abs_offset(self) -> int:
        line, col = self.getpos()
        return self.line_starts[line - 1] + col

    def _open(self, tag: str, attrs: list, self_closing: bool) -> None:
        line, col = self.getpos()
        attr_dict = {}
        for name, value in attrs:
            if name not in attr_dict:
                attr_dict[name] = value
        element = ElementInfo(
            index=len(self.elements),
            tag=tag,
            attrs=attr_dict,
            offset=self._abs_offset(),
            raw=self.get_starttag_text() or "",
            line=line,
            column=col,
            depth=len(self.stack),
            id=attr_dict.get("id"),
        )
        self.elements.append(element)
        if not self.stack:
            self.roots.append(element)
        if self.stack and self.stack[-1].tag == "select" and tag == "option":
            value = attr_dict.get("value")
            self.stack[-1].options.append({"value": value, "text": ""})
        if tag == "label":
            self.label_texts.append("")
            self._label_depths.append(len(self.stack))
        if not self_closing and tag not in VOID_ELEMENTS:
            self.stack.append(element)

    def handle_starttag(self, tag, attrs):
        self._open(tag, attrs, self_closing=False)

    def handle_startendtag(self, tag, attrs):
        self._open(tag, attrs, self_closing=True)

    def handle_endtag(self, tag):
        if tag in VOID_ELEMENTS:
            return
        line, col = self.getpos()
        if not self.stack:
            raise MarkupParseError(
                f"closing tag </{tag}> with no open element", line=line, column=col
            )
        open_element = self.stack.pop()
        if open_element.tag != tag:
            raise MarkupParseError(
                f"closing tag </{tag}> does not match open <{open_element.tag}>",
                line=line,
                column=col,
            )
        if tag == "label" and self._label_depths and self._label_depths[-1] == len(self.stack):
            self._label_depths.pop()

    def handle_data(self, data):
        if not self.stack:
            if data.strip():
                line, col = self.getpos()
                raise MarkupParseError(
                    "text outside the container element", line=line, column=col
                )
            return
        top = self.stack[-1]
        top.text += data
        if top.tag == "option" and len(self.stack) >= 2 and self.stack[-2].tag == "select":
            options = self.stack[-2].options
            if options:
                options[-1]["text"] += data
        if self._label_depths:
            self.label_texts[-1] += data


def _input_info(element: ElementInfo) -> InputInfo:
    attrs = element.attrs
    if element.tag == "input":
        kind = (attrs.get("type") or "text").lower()
    elif element.tag == "select":
        kind = "select"
    else:
        kind = "textarea"
    options = tuple(
        (o["value"] if o["value"] is not None else o["text"].strip())
        for o in element.options
    )
    return InputInfo(
        id=element.id,
        tag=element.tag,
        kind=kind,
        options=options,
        min=attrs.get("min"),
        max=attrs.get("max"),
        value=attrs.get("value"),
        checked="checked" in attrs,
        multiple="multiple" in attrs,
    )


def parse_fragment(markup: str) -> MarkupInfo:
    """Parse widget markup; enforce the single-container contract."""
    parser = _FragmentParser(markup)
    try:
        parser.feed(markup)
        parser.close()
    except MarkupParseError:
        raise
    except Exception as exc:
        raise MarkupParseError(f"markup parse failed: {exc}")
    if parser.stack:
        open_element = parser.stack[-1]
        raise MarkupParseError(
            f"unclosed element <{open_element.tag}>",
            line=open_element.line,
            column=open_element.column,
        )
    if len(parser.roots) != 1:
        raise MarkupParseError(
            f"fragment must have exactly one container element, found {len(parser.roots)}"
        )
    root = parser.roots[0]
    ids = tuple(e.id for e in parser.elements if e.id is not None)
    inputs = tuple(
        _input_info(e) for e in parser.elements if e.tag in INPUT_TAGS
    )
    title = root.attrs.get("data-title") or ""
    if not title:
        for text in parser.label_texts:
            if text.strip():
                title = text.strip()
                break
    if not title:
        title = root.id or "Widget"
    return MarkupInfo(
        source=markup,
        elements=tuple(parser.elements),
        root=root,
        ids=ids,
        inputs=inputs,
        title=title,
    )


def _attr_value_span(raw: str, pattern: re.Pattern) -> Optional[tuple[int, int, str]]:
    match = pattern.search(raw)
    if not match:
        return None
    for group in ("dq", "sq", "bare"):
        if match.group(group) is not None:
            return match.start(group), match.end(group), match.group(group)
    return None


@dataclass(frozen=True)
class IdEdit:
    element_index: int
    old: str
    new: str


def rewrite_ids(info: MarkupInfo, edits: list[IdEdit], retarget: dict) -> str:
    """Apply per-element id renames; retarget label `for` attributes.

    `retarget` maps old ids (renamed away entirely) to their new names.
    Edits splice the original source, so untouched text is preserved
    byte for byte.
    """
    splices: list[tuple[int, int, str]] = []
    by_index = {e.element_index: e for e in edits}
    for element in info.elements:
        edit = by_index.get(element.index)
        if edit is not None:
            span = _attr_value_span(element.raw, _ID_ATTR_RE)
            if span is None:
                raise MarkupParseError(
                    f"id attribute not found in tag {element.raw!r}"
                )
            start, end, value = span
            if value != edit.old:
                raise MarkupParseError(
                    f"id attribute mismatch: expected {edit.old!r}, found {value!r}"
                )
            splices.append((element.offset + start, element.offset + end, edit.new))
        if retarget and element.tag == "label":
            span = _attr_value_span(element.raw, _FOR_ATTR_RE)
            if span is not None:
                start, end, value = span
                if value in retarget:
                    splices.append(
                        (element.offset + start, element.offset + end, retarget[value])
                    )
    out = info.source
    for start, end, replacement in sorted(splices, reverse=True):
        out = out[:start] + replacement + out[end:]
    return out
