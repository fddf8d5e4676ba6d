"""Minimal XML tree and a small path language for selecting nodes and values.

Grammar (a leading ``/`` makes a path absolute, i.e. its first step must
match the document element itself)::

    path := "/"? step ("/" step)*
    step := NAME ("[" "@" NAME "=" '"' LITERAL '"' "]")? | "@" NAME | "text()"

``@NAME`` and ``text()`` may only appear as the final step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union
from xml.parsers import expat

from .errors import ExternalEntityError, PathSyntaxError, XmlSyntaxError


@dataclass(frozen=True)
class XmlNode:
    kind: str  # "element" or "text"
    name: str = ""
    attributes: dict[str, str] = field(default_factory=dict)
    children: tuple[XmlNode, ...] = ()
    text: str = ""

    @property
    def is_element(self) -> bool:
        return self.kind == "element"

    def elements(self) -> Iterator[XmlNode]:
        return (c for c in self.children if c.kind == "element")

    def direct_text(self) -> str:
        return "".join(c.text for c in self.children if c.kind == "text")


def element(name: str, attributes: dict[str, str] | None = None, *children: XmlNode | str) -> XmlNode:
    """Build an element; plain strings become text nodes."""
    kids = tuple(XmlNode("text", text=c) if isinstance(c, str) else c for c in children)
    return XmlNode("element", name, dict(attributes or {}), kids)


class _TreeBuilder:
    def __init__(self) -> None:
        # each frame: [name, attributes, children, pending text chunks]
        self.stack: list[list] = []
        self.root: XmlNode | None = None

    def start(self, name: str, attrs: list[str]) -> None:
        if self.stack:
            self._flush()
        attributes = dict(zip(attrs[0::2], attrs[1::2]))
        self.stack.append([name, attributes, [], []])

    def end(self, name: str) -> None:
        self._flush()
        tag, attributes, children, _ = self.stack.pop()
        node = XmlNode("element", tag, attributes, tuple(children))
        if self.stack:
            self.stack[-1][2].append(node)
        else:
            self.root = node

    def data(self, text: str) -> None:
        if self.stack:
            self.stack[-1][3].append(text)

    def _flush(self) -> None:
        chunks = self.stack[-1][3]
        if chunks:
            self.stack[-1][2].append(XmlNode("text", text="".join(chunks)))
            chunks.clear()


def parse_xml(data: bytes) -> XmlNode:
    """Parse a document and return its root element.

    Only the five predefined entities and character references are expanded;
    any entity declaration or external reference is rejected.
    """
    builder = _TreeBuilder()
    parser = expat.ParserCreate()
    parser.ordered_attributes = True
    parser.buffer_text = True
    parser.SetParamEntityParsing(expat.XML_PARAM_ENTITY_PARSING_NEVER)

    def reject_decl(name, *_args):
        raise ExternalEntityError(f"entity declarations are not allowed (entity {name!r})")

    def reject_ref(context, base, system_id, public_id):
        raise ExternalEntityError(f"external entity rejected: {system_id!r}")

    def reject_skipped(name, is_parameter):
        raise ExternalEntityError(f"undeclared entity {name!r}")

    parser.StartElementHandler = builder.start
    parser.EndElementHandler = builder.end
    parser.CharacterDataHandler = builder.data
    parser.EntityDeclHandler = reject_decl
    parser.ExternalEntityRefHandler = reject_ref
    parser.SkippedEntityHandler = reject_skipped
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise XmlSyntaxError(
            f"malformed XML: {expat.ErrorString(exc.code)}", line=exc.lineno, column=exc.offset + 1
        ) from exc
    assert builder.root is not None
    return builder.root


# -- paths ------------------------------------------------------------------


@dataclass(frozen=True)
class AttrEquals:
    name: str
    value: str


@dataclass(frozen=True)
class ChildStep:
    name: str
    predicate: AttrEquals | None = None


@dataclass(frozen=True)
class AttrStep:
    name: str


@dataclass(frozen=True)
class TextStep:
    pass


Step = Union[ChildStep, AttrStep, TextStep]


@dataclass(frozen=True)
class PathExpr:
    steps: tuple[Step, ...]
    absolute: bool = False
    source: str = field(default="", compare=False)

    @property
    def selects_value(self) -> bool:
        return isinstance(self.steps[-1], (AttrStep, TextStep))

    def __str__(self) -> str:
        return self.source or format_path(self)


_NAME_RE = re.compile(r"[A-Za-z_][\w.\-]*(?::[A-Za-z_][\w.\-]*)?")


def parse_path(text: str) -> PathExpr:
    pos = 0
    absolute = text.startswith("/")
    if absolute:
        pos = 1
    steps: list[Step] = []
    while True:
        if pos >= len(text):
            raise PathSyntaxError("expected a step", text, pos)
        if steps and not isinstance(steps[-1], ChildStep):
            raise PathSyntaxError("@attribute and text() must be the final step", text, pos)
        if text.startswith("text()", pos):
            steps.append(TextStep())
            pos += len("text()")
        elif text[pos] == "@":
            m = _NAME_RE.match(text, pos + 1)
            if not m:
                raise PathSyntaxError("expected attribute name", text, pos + 1)
            steps.append(AttrStep(m.group()))
            pos = m.end()
        else:
            m = _NAME_RE.match(text, pos)
            if not m:
                raise PathSyntaxError("expected element name", text, pos)
            name, pos = m.group(), m.end()
            predicate = None
            if text.startswith("[", pos):
                predicate, pos = _parse_predicate(text, pos)
            steps.append(ChildStep(name, predicate))
        if pos == len(text):
            break
        if text[pos] != "/":
            raise PathSyntaxError("expected '/'", text, pos)
        pos += 1
    if absolute and not isinstance(steps[0], ChildStep):
        raise PathSyntaxError("absolute path must start with an element step", text, 1)
    return PathExpr(tuple(steps), absolute, text)


def _parse_predicate(text: str, pos: int) -> tuple[AttrEquals, int]:
    pos += 1
    if not text.startswith("@", pos):
        raise PathSyntaxError("expected '@' in predicate", text, pos)
    m = _NAME_RE.match(text, pos + 1)
    if not m:
        raise PathSyntaxError("expected attribute name", text, pos + 1)
    pos = m.end()
    if not text.startswith('="', pos):
        raise PathSyntaxError("expected '=\"'", text, pos)
    end = text.find('"', pos + 2)
    if end < 0:
        raise PathSyntaxError("unterminated literal", text, pos + 1)
    literal = text[pos + 2 : end]
    pos = end + 1
    if not text.startswith("]", pos):
        raise PathSyntaxError("expected ']'", text, pos)
    return AttrEquals(m.group(), literal), pos + 1


def format_path(expr: PathExpr) -> str:
    parts = []
    for step in expr.steps:
        if isinstance(step, TextStep):
            parts.append("text()")
        elif isinstance(step, AttrStep):
            parts.append("@" + step.name)
        else:
            pred = f'[@{step.predicate.name}="{step.predicate.value}"]' if step.predicate else ""
            parts.append(step.name + pred)
    return ("/" if expr.absolute else "") + "/".join(parts)


def eval_path(expr: PathExpr, context: XmlNode) -> list[XmlNode | str]:
    """Evaluate ``expr`` against an element, in document order.

    For absolute paths ``context`` is the document element. ``text()``
    yields the trimmed direct text (nothing when empty); ``@name`` yields
    the attribute value as written.
    """
    return [value for _owner, value in eval_path_with_owner(expr, context)]


def eval_path_with_owner(expr: PathExpr, context: XmlNode) -> list[tuple[XmlNode, XmlNode | str]]:
    """Like :func:`eval_path`, pairing each result with the element it came from."""
    if expr.absolute:
        first = expr.steps[0]
        assert isinstance(first, ChildStep)
        nodes = [context] if _matches(first, context) else []
        rest = expr.steps[1:]
    else:
        nodes = [context]
        rest = expr.steps
    results: list[tuple[XmlNode, XmlNode | str]] = [(n, n) for n in nodes]
    for step in rest:
        nxt: list[tuple[XmlNode, XmlNode | str]] = []
        for _owner, node in results:
            assert isinstance(node, XmlNode)
            if isinstance(step, ChildStep):
                nxt.extend((c, c) for c in node.elements() if _matches(step, c))
            elif isinstance(step, AttrStep):
                value = node.attributes.get(step.name)
                if value is not None:
                    nxt.append((node, value))
            else:
                value = node.direct_text().strip()
                if value:
                    nxt.append((node, value))
        results = nxt
    return results


def _matches(step: ChildStep, node: XmlNode) -> bool:
    if node.name != step.name:
        return False
    if step.predicate is None:
        return True
    return node.attributes.get(step.predicate.name) == step.predicate.value
