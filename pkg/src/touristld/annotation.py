"""Annotation documents: the fixed schema.org-context JSON-LD subset we emit.

Canonical form: ``@context`` (top level only), ``@id``, ``@type``, then
properties sorted by name; single values and single types are written bare,
several as arrays; no whitespace; floats in shortest round-trip form.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

from ._jsonio import Source, load_json
from .errors import AnnotationParseError, FormatError

CONTEXT = "http://schema.org"
ACCEPTED_CONTEXTS = frozenset(
    {"http://schema.org", "http://schema.org/", "https://schema.org", "https://schema.org/"}
)
_LANGUAGE_TAG = re.compile(r"[A-Za-z]{2,8}(?:-[A-Za-z0-9]{1,8})*")
_UNSAFE_FILENAME = re.compile(r"[^A-Za-z0-9._-]")


@dataclass(frozen=True, eq=False)
class Literal:
    """A plain JSON literal. ``True`` and ``1`` are different literals."""

    value: str | int | float | bool

    def __post_init__(self) -> None:
        if not isinstance(self.value, (str, int, float)):
            raise TypeError(f"unsupported literal type {type(self.value).__name__}")
        if isinstance(self.value, float) and not math.isfinite(self.value):
            raise ValueError("non-finite numbers cannot be serialized")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Literal):
            return NotImplemented
        return type(self.value) is type(other.value) and self.value == other.value

    def __hash__(self) -> int:
        return hash((type(self.value), self.value))


@dataclass(frozen=True)
class LangLiteral:
    value: str
    language: str

    def __post_init__(self) -> None:
        if not _LANGUAGE_TAG.fullmatch(self.language):
            raise ValueError(f"invalid language tag {self.language!r}")


Value = Union[Literal, LangLiteral, "AnnotationDocument"]


@dataclass(frozen=True)
class AnnotationDocument:
    """A typed entity; nested entities are AnnotationDocuments without ``@context``."""

    types: tuple[str, ...]
    properties: Mapping[str, tuple[Value, ...]] = field(default_factory=dict)
    id: str | None = None

    def __post_init__(self) -> None:
        types = (self.types,) if isinstance(self.types, str) else tuple(self.types)
        if not types or not all(isinstance(t, str) and t for t in types):
            raise ValueError("an annotation needs at least one non-empty type")
        props = {}
        for name, values in self.properties.items():
            values = tuple(values)
            if not name or name.startswith("@"):
                raise ValueError(f"invalid property name {name!r}")
            if not values:
                raise ValueError(f"property {name!r} has no values")
            for v in values:
                if not isinstance(v, (Literal, LangLiteral, AnnotationDocument)):
                    raise TypeError(f"property {name!r}: unsupported value {v!r}")
            props[name] = values
        if self.id is not None and (not isinstance(self.id, str) or not self.id):
            raise ValueError("@id must be a non-empty string")
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "properties", props)

    def with_id(self, id: str | None) -> AnnotationDocument:
        return AnnotationDocument(self.types, self.properties, id)


# -- serialization ----------------------------------------------------------


def _scalar(value: str | int | float | bool) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return json.dumps(value, ensure_ascii=False)


def _value(v: Value) -> str:
    if isinstance(v, Literal):
        return _scalar(v.value)
    if isinstance(v, LangLiteral):
        return f'{{"@value":{_scalar(v.value)},"@language":{_scalar(v.language)}}}'
    return _entity(v, top=False)


def _entity(doc: AnnotationDocument, top: bool) -> str:
    parts = []
    if top:
        parts.append(f'"@context":{_scalar(CONTEXT)}')
    if doc.id is not None:
        parts.append(f'"@id":{_scalar(doc.id)}')
    if len(doc.types) == 1:
        parts.append(f'"@type":{_scalar(doc.types[0])}')
    else:
        parts.append('"@type":[' + ",".join(_scalar(t) for t in doc.types) + "]")
    # str ordering is code point ordering, which equals UTF-8 byte ordering
    for name in sorted(doc.properties):
        values = doc.properties[name]
        if len(values) == 1:
            body = _value(values[0])
        else:
            body = "[" + ",".join(_value(v) for v in values) + "]"
        parts.append(f"{_scalar(name)}:{body}")
    return "{" + ",".join(parts) + "}"


def canonical_serialize(doc: AnnotationDocument) -> bytes:
    return _entity(doc, top=True).encode("utf-8")


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def document_filename(doc_id: str) -> str:
    return _UNSAFE_FILENAME.sub("_", doc_id) + ".json"


# -- parsing ----------------------------------------------------------------


def parse_annotation(source: Source) -> AnnotationDocument:
    """Parse JSON-LD in the supported subset; key order and whitespace are free."""
    try:
        obj = load_json(source, what="annotation")
    except FormatError as exc:
        raise AnnotationParseError(exc.message, line=exc.line, column=exc.column) from exc
    if not isinstance(obj, dict):
        raise AnnotationParseError("annotation must be a JSON object")
    if "@context" not in obj:
        raise AnnotationParseError("missing @context")
    if obj["@context"] not in ACCEPTED_CONTEXTS:
        raise AnnotationParseError(f"unsupported @context {obj['@context']!r}", path="/@context")
    return _parse_entity(obj, "", top=True)


def _parse_entity(obj: dict, path: str, top: bool) -> AnnotationDocument:
    if "@type" not in obj:
        raise AnnotationParseError("missing @type", path=path or "/")
    raw_types = obj["@type"]
    types = [raw_types] if isinstance(raw_types, str) else raw_types
    if not isinstance(types, list) or not types or not all(isinstance(t, str) and t for t in types):
        raise AnnotationParseError("@type must be a name or a non-empty list of names", path=f"{path}/@type")
    doc_id = obj.get("@id")
    if doc_id is not None and (not isinstance(doc_id, str) or not doc_id):
        raise AnnotationParseError("@id must be a non-empty string", path=f"{path}/@id")
    props: dict[str, list[Value]] = {}
    for key, raw in obj.items():
        if key in ("@type", "@id"):
            continue
        if key == "@context":
            if top:
                continue
            raise AnnotationParseError("@context is only allowed at the top level", path=f"{path}/@context")
        if key.startswith("@") or not key:
            raise AnnotationParseError(f"unsupported keyword {key!r}", path=f"{path}/{key}")
        if isinstance(raw, list):
            values = [_parse_value(v, f"{path}/{key}/{i}") for i, v in enumerate(raw)]
        else:
            values = [_parse_value(raw, f"{path}/{key}")]
        if values:
            props[key] = values
    try:
        return AnnotationDocument(tuple(types), props, doc_id)
    except (TypeError, ValueError) as exc:
        raise AnnotationParseError(str(exc), path=path or "/") from exc


def _parse_value(raw: object, path: str) -> Value:
    try:
        if isinstance(raw, (str, int, float)):
            return Literal(raw)
        if isinstance(raw, dict):
            if "@value" not in raw:
                return _parse_entity(raw, path, top=False)
            extra = set(raw) - {"@value", "@language"}
            if extra:
                raise AnnotationParseError(f"unsupported keys in value object: {sorted(extra)}", path=path)
            value = raw["@value"]
            if "@language" in raw:
                if not isinstance(value, str) or not isinstance(raw["@language"], str):
                    raise AnnotationParseError("language-tagged values must be strings", path=path)
                return LangLiteral(value, raw["@language"])
            if isinstance(value, (dict, list)) or value is None:
                raise AnnotationParseError("@value must be a scalar", path=path)
            return Literal(value)
    except ValueError as exc:
        raise AnnotationParseError(str(exc), path=path) from exc
    raise AnnotationParseError(f"unsupported value {raw!r}", path=path)


# -- statistics -------------------------------------------------------------


def count_triples(doc: AnnotationDocument) -> int:
    """One triple per type, one per property value, plus those of nested entities."""
    total = len(doc.types)
    for values in doc.properties.values():
        for v in values:
            total += 1
            if isinstance(v, AnnotationDocument):
                total += count_triples(v)
    return total
