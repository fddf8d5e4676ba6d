"""Conformance checks of annotation documents against a domain specification."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .annotation import AnnotationDocument, LangLiteral, Literal, Value, parse_annotation
from .domspec import DomainSpecification, PropertySpec
from .errors import TouristLDError
from .literals import conforms
from .vocabulary import Vocabulary

UNKNOWN_TYPE = "UNKNOWN_TYPE"
UNKNOWN_PROPERTY = "UNKNOWN_PROPERTY"
MISSING_REQUIRED = "MISSING_REQUIRED"
RANGE_VIOLATION = "RANGE_VIOLATION"
CARDINALITY_VIOLATION = "CARDINALITY_VIOLATION"
MALFORMED_LITERAL = "MALFORMED_LITERAL"
CODES = (UNKNOWN_TYPE, UNKNOWN_PROPERTY, MISSING_REQUIRED, RANGE_VIOLATION, CARDINALITY_VIOLATION, MALFORMED_LITERAL)


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str
    expected: str = ""
    found: str = ""


@dataclass(frozen=True)
class ViolationReport:
    document_id: str
    violations: tuple[Violation, ...] = ()

    @property
    def conforms(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"documentId": self.document_id, "violations": [asdict(v) for v in self.violations]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def validate_document(
    doc: AnnotationDocument,
    spec: DomainSpecification,
    vocabulary: Vocabulary,
    document_id: str | None = None,
) -> ViolationReport:
    """Check a document recursively and collect every violation.

    Paths are JSON pointers into the canonical serialization: an index
    segment appears only where several values are serialized as an array.
    """
    out: list[Violation] = []
    _check_entity(doc, "", spec, vocabulary, out)
    return ViolationReport(document_id or doc.id or "", tuple(out))


def _type_path(path: str, doc: AnnotationDocument, index: int) -> str:
    return f"{path}/@type" if len(doc.types) == 1 else f"{path}/@type/{index}"


def _check_entity(
    doc: AnnotationDocument, path: str, spec: DomainSpecification, vocabulary: Vocabulary, out: list[Violation]
) -> None:
    known = [t for t in doc.types if spec.has_type(t)]
    for i, t in enumerate(doc.types):
        if t not in known:
            out.append(Violation(UNKNOWN_TYPE, _type_path(path, doc, i), f"type {t} is not in the domain specification", "", t))
    if not known:
        # nothing to check properties against
        return
    allowed = spec.allowed_properties(known)
    for name, values in doc.properties.items():
        ppath = f"{path}/{name}"
        prop = allowed.get(name)
        if prop is None:
            out.append(
                Violation(UNKNOWN_PROPERTY, ppath, f"{name} is not allowed on {'/'.join(known)}", "", name)
            )
            continue
        if len(values) > 1 and not prop.multiple:
            out.append(Violation(CARDINALITY_VIOLATION, ppath, f"{name} allows a single value", "1", str(len(values))))
        for i, v in enumerate(values):
            _check_value(v, ppath if len(values) == 1 else f"{ppath}/{i}", prop, spec, vocabulary, out)
    for name, prop in allowed.items():
        if prop.required and name not in doc.properties:
            out.append(Violation(MISSING_REQUIRED, f"{path}/{name}", f"required property {name} is missing", name, ""))


def _check_value(
    v: Value,
    path: str,
    prop: PropertySpec,
    spec: DomainSpecification,
    vocabulary: Vocabulary,
    out: list[Violation],
) -> None:
    expected = "|".join(prop.ranges)
    if isinstance(v, AnnotationDocument):
        found = "/".join(v.types)
        if not prop.structured_ranges:
            out.append(Violation(RANGE_VIOLATION, path, f"{prop.name} expects a literal", expected, found))
            return
        if not any(spec.has_type(t) for t in v.types):
            _check_entity(v, path, spec, vocabulary, out)
            return
        fits = any(
            vocabulary.has_type(t) and vocabulary.is_subtype_of(t, r) for t in v.types for r in prop.structured_ranges
        )
        if not fits:
            out.append(Violation(RANGE_VIOLATION, path, f"{found} is not a {expected}", expected, found))
            return
        _check_entity(v, path, spec, vocabulary, out)
        return
    found = json.dumps(v.value, ensure_ascii=False)
    if isinstance(v, LangLiteral):
        if "Text" not in prop.primitive_ranges:
            out.append(Violation(RANGE_VIOLATION, path, "language-tagged values only satisfy Text", expected, found))
        return
    assert isinstance(v, Literal)
    if not prop.primitive_ranges:
        out.append(Violation(RANGE_VIOLATION, path, f"{prop.name} expects an entity, got a literal", expected, found))
    elif not any(conforms(v.value, r) for r in prop.primitive_ranges):
        out.append(Violation(MALFORMED_LITERAL, path, f"{found} is not a valid {expected}", expected, found))


@dataclass
class CorpusReport:
    documents_checked: int = 0
    documents_valid: int = 0
    violations_by_code: Counter = field(default_factory=Counter)
    reports: list[ViolationReport] = field(default_factory=list)
    unreadable: list[tuple[str, str]] = field(default_factory=list)

    @property
    def conforms(self) -> bool:
        return self.documents_valid == self.documents_checked

    def summary(self) -> dict:
        return {
            "documentsChecked": self.documents_checked,
            "documentsValid": self.documents_valid,
            "violationsByCode": dict(sorted(self.violations_by_code.items())),
            "unreadable": len(self.unreadable),
        }


def corpus_files(root: Path) -> list[Path]:
    """Annotation files in a repository layout (``<root>/<dataset>/<file>.json``)."""
    return sorted(
        p for p in root.glob("*/*.json") if not p.parent.name.startswith(".") and not p.name.startswith(".")
    )


def validate_corpus(root: Path, spec: DomainSpecification, vocabulary: Vocabulary) -> CorpusReport:
    report = CorpusReport()
    reports = []
    for path in corpus_files(Path(root)):
        report.documents_checked += 1
        try:
            doc = parse_annotation(path.read_bytes())
        except (OSError, TouristLDError) as exc:
            report.unreadable.append((str(path.relative_to(root)), str(exc)))
            continue
        result = validate_document(doc, spec, vocabulary, doc.id or path.stem)
        reports.append(result)
        if result.conforms:
            report.documents_valid += 1
        report.violations_by_code.update(v.code for v in result.violations)
    report.reports = sorted(reports, key=lambda r: r.document_id)
    return report
