"""Declarative XML-to-annotation mappings.

A mapping file lists entity maps. Entity maps with an absolute iterator
are roots: each node they select becomes one annotation document. Entity
maps with a relative iterator are only reachable through a ``nested``
property and produce embedded entities.

Types are either static (``"types": ["Hotel"]``) or looked up from a source
token (``"types": {"fromPath": "Type/text()"}``) in ``typeTranslations``.
An empty or missing translation means the source type is unmapped, and
the entity is skipped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

from ._jsonio import Source, load_json
from .annotation import (
    AnnotationDocument,
    LangLiteral,
    Literal,
    Value,
    canonical_serialize,
    content_hash,
)
from .domspec import DomainSpecification, PropertySpec
from .errors import (
    EntityError,
    FormatError,
    MappingError,
    MappingExecutionError,
    PathSyntaxError,
    PropertyNotInSpecError,
    RangeMismatchError,
    UnknownTargetTypeError,
)
from .literals import convert
from .vocabulary import PRIMITIVE_TYPES, Vocabulary
from .xmlpath import PathExpr, XmlNode, eval_path, eval_path_with_owner, parse_path

logger = logging.getLogger(__name__)

_NAME = {"type": "string", "minLength": 1}
_ENTITY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["iterator", "types", "properties"],
    "properties": {
        "id": _NAME,
        "iterator": _NAME,
        "types": {
            "oneOf": [
                {"type": "array", "items": _NAME, "minItems": 1},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["fromPath"],
                    "properties": {"fromPath": _NAME},
                },
            ]
        },
        "idPath": _NAME,
        "properties": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["property"],
                "properties": {
                    "property": _NAME,
                    "path": _NAME,
                    "constant": {"type": "string"},
                    "nested": {"oneOf": [_NAME, {"$ref": "#/$defs/entity"}]},
                    "datatype": {"enum": list(PRIMITIVE_TYPES)},
                    "lang": _NAME,
                    "langFromAttr": _NAME,
                },
                "oneOf": [{"required": ["path"]}, {"required": ["constant"]}, {"required": ["nested"]}],
                "not": {"required": ["lang", "langFromAttr"]},
            },
        },
    },
}
MAPPING_SCHEMA = {
    "$defs": {"entity": _ENTITY},
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "dataset", "entities"],
    "properties": {
        "name": {"type": "string"},
        "dataset": _NAME,
        "typeTranslations": {"type": "object", "additionalProperties": {"type": "array", "items": _NAME}},
        "entities": {"type": "array", "items": {"$ref": "#/$defs/entity", "required": ["id"]}},
    },
}


@dataclass(frozen=True)
class PropertyMap:
    target: str
    path: PathExpr | None = None
    constant: Value | None = None
    nested: EntityMap | None = None
    datatype: str = "Text"
    language: str | None = None
    language_attr: str | None = None

    @property
    def source_text(self) -> str:
        if self.path is not None:
            return str(self.path)
        if self.nested is not None:
            return f"<{self.nested.id}>"
        return "<constant>"


@dataclass(frozen=True)
class EntityMap:
    id: str
    iterator: PathExpr
    types: tuple[str, ...] = ()
    type_path: PathExpr | None = None
    id_path: PathExpr | None = None
    properties: tuple[PropertyMap, ...] = ()

    @property
    def is_root(self) -> bool:
        return self.iterator.absolute


@dataclass(frozen=True)
class MappingDocument:
    name: str
    dataset: str
    entities: tuple[EntityMap, ...]
    type_translations: Mapping[str, tuple[str, ...]]
    spec: DomainSpecification = field(repr=False, compare=False)

    @property
    def roots(self) -> tuple[EntityMap, ...]:
        return tuple(e for e in self.entities if e.is_root)


# -- parsing ----------------------------------------------------------------


def parse_mapping(source: Source, spec: DomainSpecification, vocabulary: Vocabulary) -> MappingDocument:
    data = load_json(source, MAPPING_SCHEMA, what="mapping")
    translations = {tok.strip(): tuple(dict.fromkeys(types)) for tok, types in data.get("typeTranslations", {}).items()}
    for token, types in translations.items():
        for t in types:
            if not spec.has_type(t):
                raise UnknownTargetTypeError(f"typeTranslations[{token!r}]: {t} is not in the domain specification")

    raw_entities = {}
    for raw in data["entities"]:
        if raw["id"] in raw_entities:
            raise FormatError(f"duplicate entity id {raw['id']!r}")
        raw_entities[raw["id"]] = raw

    built: dict[str, EntityMap] = {}
    referenced: set[str] = set()

    def build(eid: str, raw: dict, stack: tuple[str, ...]) -> EntityMap:
        if eid in stack:
            raise MappingError("nested entity cycle: " + " -> ".join(stack + (eid,)))
        if eid in built:
            return built[eid]
        where = f"entity {eid!r}"
        iterator = _path(raw["iterator"], where)
        if isinstance(raw["types"], list):
            types, type_path = tuple(dict.fromkeys(raw["types"])), None
        else:
            types, type_path = (), _path(raw["types"]["fromPath"], where, value=True)
        for t in types:
            if not spec.has_type(t):
                raise UnknownTargetTypeError(f"{where}: {t} is not in the domain specification")
        props = []
        for p in raw["properties"]:
            nested = None
            if "nested" in p:
                ref = p["nested"]
                if isinstance(ref, str):
                    if ref not in raw_entities:
                        raise MappingError(f"{where}: nested reference to unknown entity {ref!r}")
                    referenced.add(ref)
                    nested = build(ref, raw_entities[ref], stack + (eid,))
                else:
                    nested = build(ref.get("id", f"{eid}.{p['property']}"), ref, stack + (eid,))
                if nested.is_root:
                    raise MappingError(f"{where}: nested entity {nested.id!r} must use a relative iterator")
                if nested.type_path is not None:
                    raise MappingError(f"{where}: nested entity {nested.id!r} must declare static types")
            props.append(_property_map(p, nested, where))
        em = EntityMap(
            eid,
            iterator,
            types,
            type_path,
            _path(raw["idPath"], where, value=True) if "idPath" in raw else None,
            tuple(props),
        )
        if type_path is not None and not iterator.absolute:
            raise MappingError(f"{where}: dynamic types are only supported on root entities")
        built[eid] = em
        return em

    entities = [build(eid, raw, ()) for eid, raw in raw_entities.items()]
    for em in entities:
        if not em.is_root and em.id not in referenced:
            raise MappingError(f"entity {em.id!r} has a relative iterator but is never nested")
        if em.is_root and em.id in referenced:
            raise MappingError(f"entity {em.id!r} is nested but has an absolute iterator")

    mapping = MappingDocument(data["name"], data["dataset"], tuple(entities), translations, spec)
    for em in mapping.roots:
        for type_set in _type_sets(mapping, em):
            _check_entity(em, type_set, spec, vocabulary)
    return mapping


def _path(text: str, where: str, value: bool = False) -> PathExpr:
    try:
        expr = parse_path(text)
    except PathSyntaxError as exc:
        raise MappingError(f"{where}: {exc}") from exc
    if value and not expr.selects_value:
        raise MappingError(f"{where}: path {text!r} must end in text() or @attribute")
    return expr


def _property_map(raw: dict, nested: EntityMap | None, where: str) -> PropertyMap:
    target = raw["property"]
    where = f"{where}, property {target!r}"
    datatype = raw.get("datatype", "Text")
    language = raw.get("lang")
    language_attr = raw.get("langFromAttr")
    if nested is not None and ("datatype" in raw or language or language_attr):
        raise MappingError(f"{where}: datatype and language apply to literal sources only")
    if (language or language_attr) and datatype != "Text":
        raise MappingError(f"{where}: language-tagged values must have datatype Text")
    path = _path(raw["path"], where, value=True) if "path" in raw else None
    constant = None
    if "constant" in raw:
        try:
            value = convert(raw["constant"].strip(), datatype)
            constant = LangLiteral(value, language) if language else Literal(value)
        except ValueError as exc:
            raise MappingError(f"{where}: {exc}") from exc
    elif language:
        try:
            LangLiteral("", language)
        except ValueError as exc:
            raise MappingError(f"{where}: {exc}") from exc
    return PropertyMap(target, path, constant, nested, datatype, language, language_attr)


def _type_sets(mapping: MappingDocument, em: EntityMap) -> list[tuple[str, ...]]:
    if em.type_path is None:
        return [em.types]
    return [types for types in mapping.type_translations.values() if types]


def _check_entity(
    em: EntityMap, types: tuple[str, ...], spec: DomainSpecification, vocabulary: Vocabulary
) -> None:
    allowed = spec.allowed_properties(types)
    for pm in em.properties:
        prop = allowed.get(pm.target)
        if prop is None:
            raise PropertyNotInSpecError(
                f"entity {em.id!r}: property {pm.target!r} is not allowed for {'/'.join(types)}"
            )
        if pm.nested is None:
            if pm.datatype not in prop.primitive_ranges and "Text" not in prop.primitive_ranges:
                raise RangeMismatchError(
                    f"entity {em.id!r}: {pm.target} has ranges {list(prop.ranges)}, mapped as {pm.datatype}"
                )
            continue
        if not _fits_structured(pm.nested.types, prop, vocabulary):
            raise RangeMismatchError(
                f"entity {em.id!r}: nested {'/'.join(pm.nested.types)} does not fit "
                f"{pm.target} ranges {list(prop.ranges)}"
            )
        _check_entity(pm.nested, pm.nested.types, spec, vocabulary)


def _fits_structured(types: tuple[str, ...], prop: PropertySpec, vocabulary: Vocabulary) -> bool:
    return any(vocabulary.is_subtype_of(t, r) for t in types for r in prop.structured_ranges)


# -- execution --------------------------------------------------------------


def resolve_types(mapping: MappingDocument, em: EntityMap, node: XmlNode) -> tuple[list[str], tuple[str, ...]]:
    """Return (source type tokens, target types) for one iterator match."""
    if em.type_path is None:
        return [em.id], em.types
    tokens = [str(v).strip() for v in eval_path(em.type_path, node)]
    tokens = [t for t in dict.fromkeys(tokens) if t]
    types: dict[str, None] = {}
    for token in tokens:
        types.update(dict.fromkeys(mapping.type_translations.get(token, ())))
    return tokens, tuple(types)


def execute_mapping(mapping: MappingDocument, doc: XmlNode) -> list[AnnotationDocument]:
    """Run all root entity maps against a parsed document.

    Raises MappingExecutionError listing every failing entity; nothing is
    returned in that case.
    """
    out: list[AnnotationDocument] = []
    errors: list[EntityError] = []
    seen: dict[str, str] = {}
    for em in mapping.roots:
        for index, node in enumerate(eval_path(em.iterator, doc), start=1):
            assert isinstance(node, XmlNode)
            where = f"{em.iterator}[{index}]"
            _tokens, types = resolve_types(mapping, em, node)
            if not types:
                logger.debug("skipping %s: unmapped source type %s", where, _tokens)
                continue
            try:
                entity = _build(mapping, em, node, types, where, root=True)
            except EntityError as exc:
                errors.append(exc)
                continue
            assert entity is not None and entity.id is not None
            if entity.id in seen:
                errors.append(EntityError(em.id, where, f"id {entity.id!r} already produced by {seen[entity.id]}"))
                continue
            seen[entity.id] = where
            out.append(entity)
    if errors:
        raise MappingExecutionError(errors)
    return out


def _build(
    mapping: MappingDocument,
    em: EntityMap,
    node: XmlNode,
    types: tuple[str, ...],
    where: str,
    root: bool,
) -> AnnotationDocument | None:
    allowed = mapping.spec.allowed_properties(types)
    props: dict[str, list[Value]] = {}
    for pm in em.properties:
        values = _values(mapping, pm, node, where)
        if values:
            props.setdefault(pm.target, []).extend(values)
    for name, values in props.items():
        if len(values) > 1 and not allowed[name].multiple:
            raise EntityError(em.id, where, f"{name} allows one value, source provides {len(values)}")
    if not root and not props:
        return None
    missing = [name for name, spec in allowed.items() if spec.required and name not in props]
    if missing:
        raise EntityError(em.id, where, f"required propert{'y' if len(missing) == 1 else 'ies'} missing: {', '.join(missing)}")

    doc_id = None
    if em.id_path is not None:
        ids = [str(v).strip() for v in eval_path(em.id_path, node)]
        ids = [i for i in ids if i]
        if len(ids) > 1:
            raise EntityError(em.id, f"{where}/{em.id_path}", f"id path yields {len(ids)} values")
        doc_id = ids[0] if ids else None
    entity = AnnotationDocument(types, props)
    if root and doc_id is None:
        doc_id = content_hash(canonical_serialize(entity))
    return entity.with_id(doc_id)


def _values(mapping: MappingDocument, pm: PropertyMap, node: XmlNode, where: str) -> list[Value]:
    if pm.constant is not None:
        return [pm.constant]
    if pm.nested is not None:
        out: list[Value] = []
        for i, child in enumerate(eval_path(pm.nested.iterator, node), start=1):
            assert isinstance(child, XmlNode)
            entity = _build(mapping, pm.nested, child, pm.nested.types, f"{where}/{pm.nested.iterator}[{i}]", root=False)
            if entity is not None:
                out.append(entity)
        return out
    assert pm.path is not None
    out = []
    for owner, raw in eval_path_with_owner(pm.path, node):
        text = str(raw).strip()
        if not text:
            continue
        try:
            value = convert(text, pm.datatype)
        except ValueError as exc:
            raise EntityError(pm.target, f"{where}/{pm.path}", str(exc)) from None
        language = pm.language
        if language is None and pm.language_attr is not None:
            language = (owner.attributes.get(pm.language_attr) or "").strip() or None
        if language is None:
            out.append(Literal(value))
            continue
        try:
            out.append(LangLiteral(str(value), language))
        except ValueError as exc:
            raise EntityError(pm.target, f"{where}/{pm.path}", str(exc)) from None
    return out


# -- statistics -------------------------------------------------------------


@dataclass(frozen=True)
class MappingStats:
    source_types_seen: frozenset[str] = frozenset()
    source_types_mapped: frozenset[str] = frozenset()
    target_types_used: frozenset[str] = frozenset()
    entities_emitted: int = 0
    entities_skipped: int = 0

    def merge(self, other: MappingStats) -> MappingStats:
        return MappingStats(
            self.source_types_seen | other.source_types_seen,
            self.source_types_mapped | other.source_types_mapped,
            self.target_types_used | other.target_types_used,
            self.entities_emitted + other.entities_emitted,
            self.entities_skipped + other.entities_skipped,
        )

    def counts(self) -> dict[str, int]:
        return {
            "sourceTypesSeen": len(self.source_types_seen),
            "sourceTypesMapped": len(self.source_types_mapped),
            "targetTypesUsed": len(self.target_types_used),
            "entitiesEmitted": self.entities_emitted,
            "entitiesSkipped": self.entities_skipped,
        }


def mapping_stats(mapping: MappingDocument, docs: list[XmlNode]) -> MappingStats:
    stats = MappingStats()
    for doc in docs:
        seen: set[str] = set()
        mapped: set[str] = set()
        used: set[str] = set()
        emitted = skipped = 0
        for em in mapping.roots:
            for node in eval_path(em.iterator, doc):
                assert isinstance(node, XmlNode)
                tokens, types = resolve_types(mapping, em, node)
                seen.update(tokens)
                mapped.update(t for t in tokens if em.type_path is None or mapping.type_translations.get(t))
                used.update(types)
                if types:
                    emitted += 1
                else:
                    skipped += 1
        stats = stats.merge(MappingStats(frozenset(seen), frozenset(mapped), frozenset(used), emitted, skipped))
    return stats


def render_mapping_table(rows: list[tuple[str, MappingStats]]) -> str:
    """Text table of per-dataset type mapping statistics."""
    header = ("No", "Description", "Source types", "Mapped", "Schema.org types", "Emitted", "Skipped")
    body = [
        (
            str(i),
            label.capitalize(),
            *(str(s.counts()[k]) for k in ("sourceTypesSeen", "sourceTypesMapped", "targetTypesUsed")),
            str(s.entities_emitted),
            str(s.entities_skipped),
        )
        for i, (label, s) in enumerate(rows, start=1)
    ]
    widths = [max(len(r[c]) for r in [header, *body]) for c in range(len(header))]
    lines = []
    for r in [header, *body]:
        cells = [r[0].ljust(widths[0]), r[1].ljust(widths[1])] + [x.rjust(w) for x, w in zip(r[2:], widths[2:])]
        lines.append("  ".join(cells).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"
