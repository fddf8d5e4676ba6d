from __future__ import annotations

import json
import shutil

import pytest

from conftest import FIXTURES
from mutations import MUTATIONS, mutate
from touristld.annotation import AnnotationDocument, LangLiteral, Literal, canonical_serialize, parse_annotation
from touristld.mapping import execute_mapping, parse_mapping
from touristld.validator import (
    CODES,
    MALFORMED_LITERAL,
    MISSING_REQUIRED,
    RANGE_VIOLATION,
    UNKNOWN_TYPE,
    validate_corpus,
    validate_document,
)
from touristld.xmlpath import parse_xml

ALPENHOF = "0a2346a9-3b05-4dc4-a056-1f32ccf05fe8"


@pytest.fixture(scope="module")
def alpenhof(spec, vocab) -> dict:
    m = parse_mapping((FIXTURES / "mappings" / "accommodation.map.json").read_bytes(), spec, vocab)
    docs = execute_mapping(m, parse_xml((FIXTURES / "sources" / "accommodations.xml").read_bytes()))
    doc = next(d for d in docs if d.id == ALPENHOF)
    return json.loads(canonical_serialize(doc))


def check(obj: dict, spec, vocab):
    return validate_document(parse_annotation(json.dumps(obj).encode()), spec, vocab)


def test_clean_hotel(alpenhof, spec, vocab):
    assert check(alpenhof, spec, vocab).violations == ()


@pytest.mark.parametrize("code", CODES)
def test_single_mutation_detected(alpenhof, spec, vocab, code):
    mutated, path = mutate(alpenhof, code)
    report = check(mutated, spec, vocab)
    assert [(v.code, v.path) for v in report.violations] == [(code, path)]


def test_every_code_has_a_mutation():
    assert set(MUTATIONS) == set(CODES)


def test_address_as_string(alpenhof, spec, vocab):
    mutated, _ = mutate(alpenhof, RANGE_VIOLATION)
    (v,) = check(mutated, spec, vocab).violations
    assert v.expected == "PostalAddress"


def test_hotel_missing_name(spec, vocab):
    doc = parse_annotation((FIXTURES / "invalid" / "hotel-no-name.json").read_bytes())
    report = validate_document(doc, spec, vocab)
    assert [(v.code, v.path) for v in report.violations] == [(MISSING_REQUIRED, "/name")]
    assert report.document_id == "hotel-no-name"


def test_nested_paths_use_indices_only_for_arrays(spec, vocab):
    bad_offer = AnnotationDocument(("Offer",), {"priceSpecification": [AnnotationDocument(("PriceSpecification",), {"price": [Literal("cheap")]})]})
    ok_offer = AnnotationDocument(("Offer",), {"name": [Literal("x")]})
    doc = AnnotationDocument(("Hotel",), {"name": [Literal("H")], "makesOffer": [ok_offer, bad_offer]}, "h")
    (v,) = validate_document(doc, spec, vocab).violations
    assert (v.code, v.path) == (MALFORMED_LITERAL, "/makesOffer/1/priceSpecification/price")


def test_unknown_type_does_not_cascade(spec, vocab):
    doc = AnnotationDocument(("Spaceship",), {"warpSpeed": [Literal(9)]})
    assert [v.code for v in validate_document(doc, spec, vocab).violations] == [UNKNOWN_TYPE]


def test_partially_known_types(spec, vocab):
    doc = AnnotationDocument(("Hotel", "Spaceship"), {"name": [Literal("H")]})
    assert [(v.code, v.path) for v in validate_document(doc, spec, vocab).violations] == [(UNKNOWN_TYPE, "/@type/1")]


def test_entity_where_literal_expected(spec, vocab):
    doc = AnnotationDocument(("Hotel",), {"name": [AnnotationDocument(("Place",), {"name": [Literal("x")]})]})
    assert [(v.code, v.path) for v in validate_document(doc, spec, vocab).violations] == [(RANGE_VIOLATION, "/name")]


def test_wrong_nested_type(spec, vocab):
    doc = AnnotationDocument(("Hotel",), {"name": [Literal("H")], "geo": [AnnotationDocument(("PostalAddress",), {})]})
    (v,) = validate_document(doc, spec, vocab).violations
    assert (v.code, v.path, v.expected) == (RANGE_VIOLATION, "/geo", "GeoCoordinates")


def test_language_literal_needs_text(spec, vocab):
    doc = AnnotationDocument(("Hotel",), {"name": [Literal("H")], "url": [LangLiteral("https://x.org", "de")]})
    assert [v.code for v in validate_document(doc, spec, vocab).violations] == [RANGE_VIOLATION]


def test_multi_range_literal(spec, vocab):
    ok = AnnotationDocument(("Event",), {"name": [Literal("E")], "startDate": [Literal("2017-07-01")]})
    bad = AnnotationDocument(("Event",), {"name": [Literal("E")], "startDate": [Literal("July")]})
    assert validate_document(ok, spec, vocab).conforms
    assert [v.code for v in validate_document(bad, spec, vocab).violations] == [MALFORMED_LITERAL]


def test_booleans_and_numbers_are_not_interchangeable(spec, vocab):
    doc = AnnotationDocument(("Event",), {"name": [Literal("E")], "isAccessibleForFree": [Literal(1)]})
    assert [v.code for v in validate_document(doc, spec, vocab).violations] == [MALFORMED_LITERAL]


def test_manual_fixtures_are_clean(spec, vocab):
    for path in sorted((FIXTURES / "manual").glob("*/*.json")):
        report = validate_document(parse_annotation(path.read_bytes()), spec, vocab)
        assert report.conforms, (path, report.to_json())


def test_report_json(spec, vocab):
    doc = parse_annotation((FIXTURES / "invalid" / "hotel-no-name.json").read_bytes())
    data = json.loads(validate_document(doc, spec, vocab).to_json())
    assert data["documentId"] == "hotel-no-name"
    assert data["violations"][0]["code"] == MISSING_REQUIRED


def _corpus(tmp_path, files: dict[str, bytes]):
    for name, data in files.items():
        target = tmp_path / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
    return tmp_path


def test_corpus_empty(tmp_path, spec, vocab):
    assert validate_corpus(tmp_path, spec, vocab).summary() == {
        "documentsChecked": 0,
        "documentsValid": 0,
        "violationsByCode": {},
        "unreadable": 0,
    }


def test_corpus_with_one_mutation(tmp_path, alpenhof, spec, vocab):
    mutated, _ = mutate(alpenhof, MISSING_REQUIRED)
    other = dict(alpenhof, **{"@id": "other"})
    root = _corpus(
        tmp_path,
        {
            "accommodation/a.json": json.dumps(mutated).encode(),
            "accommodation/b.json": json.dumps(other).encode(),
            "manifest.json": b"{}",
        },
    )
    report = validate_corpus(root, spec, vocab)
    assert report.summary()["violationsByCode"] == {MISSING_REQUIRED: 1}
    assert (report.documents_checked, report.documents_valid) == (2, 1)
    assert not report.conforms


def test_corpus_unreadable_file(tmp_path, spec, vocab):
    root = _corpus(tmp_path, {"x/broken.json": b"{nope"})
    report = validate_corpus(root, spec, vocab)
    assert report.summary()["unreadable"] == 1 and not report.conforms


def test_manual_fixture_corpus(tmp_path, spec, vocab):
    shutil.copytree(FIXTURES / "manual", tmp_path / "manual")
    report = validate_corpus(tmp_path / "manual", spec, vocab)
    assert report.documents_checked == report.documents_valid == 5
