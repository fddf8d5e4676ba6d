"""A frozen schema.org subset: types with (multiple) parents and property ranges."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

from ._jsonio import Source, dump_json, load_json
from .errors import (
    CycleError,
    DanglingReferenceError,
    FormatError,
    UnknownPropertyError,
    UnknownTypeError,
)

PRIMITIVE_TYPES: tuple[str, ...] = ("Text", "Number", "Boolean", "Date", "DateTime", "Time", "URL")

_NAME = {"type": "string", "minLength": 1}
VOCABULARY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "types", "properties"],
    "properties": {
        "version": {"type": "string"},
        "types": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {"name": _NAME, "parents": {"type": "array", "items": _NAME}},
            },
        },
        "properties": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "ranges"],
                "properties": {
                    "name": _NAME,
                    "ranges": {"type": "array", "items": _NAME, "minItems": 1},
                },
            },
        },
    },
}


def is_primitive(name: str) -> bool:
    return name in PRIMITIVE_TYPES


@dataclass(frozen=True)
class TypeDef:
    name: str
    parents: tuple[str, ...] = ()


@dataclass(frozen=True)
class PropertyDef:
    name: str
    ranges: tuple[str, ...]


@dataclass(frozen=True)
class Vocabulary:
    """Immutable once built; construction enforces all structural invariants."""

    version: str
    types: Mapping[str, TypeDef]
    properties: Mapping[str, PropertyDef]
    _ancestors: Mapping[str, frozenset[str]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for t in self.types.values():
            if is_primitive(t.name):
                raise FormatError(f"type name {t.name!r} is a reserved datatype name")
            for parent in t.parents:
                if parent not in self.types:
                    raise DanglingReferenceError(parent, t.name)
        for p in self.properties.values():
            if not p.ranges:
                raise FormatError(f"property {p.name!r} declares no ranges")
            for r in p.ranges:
                if not is_primitive(r) and r not in self.types:
                    raise DanglingReferenceError(r, p.name)
        _check_acyclic(self.types)
        object.__setattr__(self, "_ancestors", _closures(self.types))

    @classmethod
    def build(cls, version: str, types: Iterable[TypeDef], properties: Iterable[PropertyDef]) -> Vocabulary:
        type_map: dict[str, TypeDef] = {}
        for t in types:
            if t.name in type_map:
                raise FormatError(f"duplicate type {t.name!r}")
            type_map[t.name] = t
        prop_map: dict[str, PropertyDef] = {}
        for p in properties:
            if p.name in prop_map:
                raise FormatError(f"duplicate property {p.name!r}")
            prop_map[p.name] = p
        return cls(version, type_map, prop_map)

    def has_type(self, name: str) -> bool:
        return name in self.types

    def is_subtype_of(self, sub: str, sup: str) -> bool:
        """Reflexive, transitive reachability over parent edges."""
        for name in (sub, sup):
            if name not in self.types:
                raise UnknownTypeError(name)
        return sup in self._ancestors[sub]

    def property_ranges(self, prop: str) -> list[str]:
        try:
            return list(self.properties[prop].ranges)
        except KeyError:
            raise UnknownPropertyError(prop) from None

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "types": [{"name": t.name, "parents": list(t.parents)} for t in self.types.values()],
            "properties": [{"name": p.name, "ranges": list(p.ranges)} for p in self.properties.values()],
        }

    def to_json(self) -> bytes:
        return dump_json(self.to_dict())


def _check_acyclic(types: Mapping[str, TypeDef]) -> None:
    white, grey, black = 0, 1, 2
    color = dict.fromkeys(types, white)
    for start in types:
        if color[start] != white:
            continue
        # iterative DFS; stack holds (node, iterator over parents)
        path = [start]
        color[start] = grey
        stack = [iter(types[start].parents)]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                color[path.pop()] = black
                stack.pop()
                continue
            if color[nxt] == grey:
                cycle = path[path.index(nxt):] + [nxt]
                raise CycleError(cycle)
            if color[nxt] == white:
                color[nxt] = grey
                path.append(nxt)
                stack.append(iter(types[nxt].parents))


def _closures(types: Mapping[str, TypeDef]) -> dict[str, frozenset[str]]:
    memo: dict[str, frozenset[str]] = {}

    def visit(name: str) -> frozenset[str]:
        if name not in memo:
            acc = {name}
            for parent in types[name].parents:
                acc |= visit(parent)
            memo[name] = frozenset(acc)
        return memo[name]

    for name in types:
        visit(name)
    return memo


def load_vocabulary(source: Source) -> Vocabulary:
    data = load_json(source, VOCABULARY_SCHEMA, what="vocabulary")
    return Vocabulary.build(
        data["version"],
        (TypeDef(t["name"], tuple(t.get("parents", ()))) for t in data["types"]),
        (PropertyDef(p["name"], tuple(p["ranges"])) for p in data["properties"]),
    )


def bundled_vocabulary() -> Vocabulary:
    """The schema.org subset shipped with the package."""
    data = resources.files("touristld").joinpath("data/vocabulary.json").read_bytes()
    return load_vocabulary(data)
