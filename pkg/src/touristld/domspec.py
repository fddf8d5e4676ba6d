"""Domain specifications: curated per-type property selections over the vocabulary."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

from ._jsonio import Source, dump_json, load_json
from .errors import (
    FormatError,
    MissingClosureError,
    RangeNotNarrowingError,
    UnknownPropertyError,
    UnknownTypeError,
)
from .vocabulary import Vocabulary, is_primitive

_NAME = {"type": "string", "minLength": 1}
SPEC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "types"],
    "properties": {
        "name": {"type": "string"},
        "types": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["properties"],
                "properties": {
                    "properties": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["name", "ranges"],
                            "properties": {
                                "name": _NAME,
                                "ranges": {"type": "array", "items": _NAME, "minItems": 1},
                                "required": {"type": "boolean"},
                                "multiple": {"type": "boolean"},
                            },
                        },
                    }
                },
            },
        },
    },
}


@dataclass(frozen=True)
class PropertySpec:
    name: str
    ranges: tuple[str, ...]
    required: bool = False
    multiple: bool = True

    @property
    def structured_ranges(self) -> tuple[str, ...]:
        return tuple(r for r in self.ranges if not is_primitive(r))

    @property
    def primitive_ranges(self) -> tuple[str, ...]:
        return tuple(r for r in self.ranges if is_primitive(r))


@dataclass(frozen=True)
class TypeSpec:
    name: str
    properties: Mapping[str, PropertySpec]


@dataclass(frozen=True)
class DomainSpecification:
    name: str
    types: Mapping[str, TypeSpec]

    def has_type(self, name: str) -> bool:
        return name in self.types

    def allowed_properties(self, type_names: Iterable[str]) -> dict[str, PropertySpec]:
        """Union of the property selections of several types.

        A property shared by several types gets the union of their ranges
        and is required if any type requires it (likewise for ``multiple``).
        Types are merged in sorted order so the result ignores input order.
        """
        names = sorted(set(type_names))
        for name in names:
            if name not in self.types:
                raise UnknownTypeError(name)
        merged: dict[str, PropertySpec] = {}
        for name in names:
            for prop in self.types[name].properties.values():
                prev = merged.get(prop.name)
                if prev is None:
                    merged[prop.name] = prop
                    continue
                ranges = prev.ranges + tuple(r for r in prop.ranges if r not in prev.ranges)
                merged[prop.name] = PropertySpec(
                    prop.name,
                    ranges,
                    required=prev.required or prop.required,
                    multiple=prev.multiple or prop.multiple,
                )
        return merged

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "types": {
                t.name: {
                    "properties": [
                        {"name": p.name, "ranges": list(p.ranges), "required": p.required, "multiple": p.multiple}
                        for p in t.properties.values()
                    ]
                }
                for t in self.types.values()
            },
        }

    def to_json(self) -> bytes:
        return dump_json(self.to_dict())


def parse_spec(source: Source, vocabulary: Vocabulary) -> DomainSpecification:
    data = load_json(source, SPEC_SCHEMA, what="domain specification")
    types: dict[str, TypeSpec] = {}
    for type_name, body in data["types"].items():
        props: dict[str, PropertySpec] = {}
        for p in body["properties"]:
            if p["name"] in props:
                raise FormatError(f"duplicate property {p['name']!r}", path=f"/types/{type_name}")
            props[p["name"]] = PropertySpec(
                p["name"],
                tuple(dict.fromkeys(p["ranges"])),
                required=p.get("required", False),
                multiple=p.get("multiple", True),
            )
        types[type_name] = TypeSpec(type_name, props)
    spec = DomainSpecification(data["name"], types)
    check_spec(spec, vocabulary)
    return spec


def check_spec(spec: DomainSpecification, vocabulary: Vocabulary) -> None:
    """Raise unless every type, property and range is consistent with the vocabulary."""
    for type_spec in spec.types.values():
        if not vocabulary.has_type(type_spec.name):
            raise UnknownTypeError(type_spec.name)
        for prop in type_spec.properties.values():
            if prop.name not in vocabulary.properties:
                raise UnknownPropertyError(prop.name, type_spec.name)
            declared = vocabulary.property_ranges(prop.name)
            for r in prop.ranges:
                if not _narrows(vocabulary, r, declared):
                    raise RangeNotNarrowingError(
                        f"{type_spec.name}.{prop.name}: range {r} does not narrow vocabulary ranges {declared}"
                    )
                if not is_primitive(r) and r not in spec.types:
                    raise MissingClosureError(
                        f"{type_spec.name}.{prop.name}: structured range {r} has no type specification"
                    )


def _narrows(vocabulary: Vocabulary, r: str, declared: list[str]) -> bool:
    if is_primitive(r):
        return r in declared
    if not vocabulary.has_type(r):
        return False
    return any(not is_primitive(d) and vocabulary.is_subtype_of(r, d) for d in declared)


def bundled_spec(name: str, vocabulary: Vocabulary) -> DomainSpecification:
    data = resources.files("touristld").joinpath(f"data/specs/{name}.dspec.json").read_bytes()
    return parse_spec(data, vocabulary)
