from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIXTURES
from touristld.errors import ExternalEntityError, PathSyntaxError, XmlSyntaxError
from touristld.xmlpath import (
    AttrEquals,
    AttrStep,
    ChildStep,
    PathExpr,
    TextStep,
    element,
    eval_path,
    eval_path_with_owner,
    format_path,
    parse_path,
    parse_xml,
)


def test_parse_simple():
    root = parse_xml(b'<A><B x="1"/></A>')
    assert root.name == "A"
    (b,) = root.elements()
    assert b.name == "B" and b.attributes == {"x": "1"} and b.children == ()


def test_parse_fixture():
    root = parse_xml((FIXTURES / "sources" / "accommodations.xml").read_bytes())
    assert root.name == "Accommodations"
    assert [c.name for c in root.elements()] == ["Accommodation"] * 5


def test_parse_merges_text_and_decodes_entities():
    root = parse_xml(b"<A>x &amp; <![CDATA[<y>]]> z</A>")
    assert root.direct_text() == "x & <y> z"
    assert len(root.children) == 1


def test_undeclared_entity_rejected():
    with pytest.raises((XmlSyntaxError, ExternalEntityError)):
        parse_xml(b"<A>&ext;</A>")


def test_internal_entity_declaration_rejected():
    data = b'<!DOCTYPE A [<!ENTITY e "boom">]><A>&e;</A>'
    with pytest.raises(ExternalEntityError):
        parse_xml(data)


def test_external_entity_rejected(tmp_path):
    secret = tmp_path / "secret.txt"
    secret.write_text("top secret")
    data = f'<!DOCTYPE A [<!ENTITY e SYSTEM "file://{secret}">]><A>&e;</A>'.encode()
    with pytest.raises(ExternalEntityError):
        parse_xml(data)


def test_syntax_error_position():
    with pytest.raises(XmlSyntaxError) as exc:
        parse_xml(b"<A>\n  <B></A>")
    assert exc.value.line == 2
    assert exc.value.column is not None


def test_non_utf8_rejected():
    with pytest.raises(XmlSyntaxError):
        parse_xml(b"<A>\xff</A>")


@pytest.mark.parametrize(
    "text, steps",
    [
        ("Address/Town/text()", (ChildStep("Address"), ChildStep("Town"), TextStep())),
        ("@Id", (AttrStep("Id"),)),
        ('Name[@lang="de"]/text()', (ChildStep("Name", AttrEquals("lang", "de")), TextStep())),
    ],
)
def test_parse_path(text, steps):
    expr = parse_path(text)
    assert expr.steps == steps and not expr.absolute


def test_parse_absolute_path():
    expr = parse_path("/Accommodations/Accommodation")
    assert expr.absolute and expr.steps == (ChildStep("Accommodations"), ChildStep("Accommodation"))


@pytest.mark.parametrize("bad", ["", "/", "A//B", "text()/A", "@x/B", "A[@x=1]", "A[x]", "A/", "A B", "/@x", 'A[@x="1"'])
def test_path_syntax_errors(bad):
    with pytest.raises(PathSyntaxError) as exc:
        parse_path(bad)
    assert 0 <= exc.value.offset <= len(bad)


def test_eval_text():
    node = parse_xml(b"<Accommodation><Name>Hotel Alpenhof</Name></Accommodation>")
    assert eval_path(parse_path("Name/text()"), node) == ["Hotel Alpenhof"]


def test_eval_missing_attribute():
    assert eval_path(parse_path("@Id"), element("X")) == []


def test_eval_predicate():
    node = parse_xml(b'<A><Name lang="de">Gasthof</Name><Name lang="en">Hotel</Name></A>')
    assert eval_path(parse_path('Name[@lang="en"]/text()'), node) == ["Hotel"]


def test_eval_text_trims_and_drops_empty():
    node = parse_xml(b"<A><N>  x  </N><N>   </N><N/></A>")
    assert eval_path(parse_path("N/text()"), node) == ["x"]


def test_eval_attribute_is_raw():
    node = element("A", {"v": "  7 "})
    assert eval_path(parse_path("@v"), node) == ["  7 "]


def test_eval_document_order():
    root = parse_xml(b"<R><I><V>1</V><V>2</V></I><I><V>3</V></I></R>")
    assert eval_path(parse_path("I/V/text()"), root) == ["1", "2", "3"]


def test_absolute_path_matches_root_itself():
    root = parse_xml(b"<R><I/><I/></R>")
    assert len(eval_path(parse_path("/R/I"), root)) == 2
    assert eval_path(parse_path("/Other/I"), root) == []


def test_owner_is_reported():
    root = parse_xml(b'<R><N lang="de">a</N><N lang="en">b</N></R>')
    pairs = eval_path_with_owner(parse_path("N/text()"), root)
    assert [(o.attributes["lang"], v) for o, v in pairs] == [("de", "a"), ("en", "b")]


def test_selects_value():
    assert parse_path("A/text()").selects_value
    assert parse_path("A/@x").selects_value
    assert not parse_path("A/B").selects_value


# -- properties ---------------------------------------------------------------

names = st.sampled_from(["A", "B", "C"])


@st.composite
def trees(draw, depth=3):
    name = draw(names)
    attrs = draw(st.dictionaries(st.sampled_from(["x", "y"]), st.sampled_from(["1", "2"]), max_size=2))
    kids = []
    if depth > 0:
        kids = draw(st.lists(trees(depth=depth - 1), max_size=3))
    text = draw(st.sampled_from(["", "t", " u "]))
    return element(name, attrs, *kids, *( [text] if text else []))


@st.composite
def element_paths(draw):
    steps = []
    for _ in range(draw(st.integers(1, 3))):
        pred = draw(st.none() | st.builds(AttrEquals, st.just("x"), st.sampled_from(["1", "2"])))
        steps.append(ChildStep(draw(names), pred))
    return steps


@given(trees(), element_paths(), element_paths())
def test_path_composition(tree, p, q):
    """Evaluating p/q equals evaluating q from every result of p."""
    whole = eval_path(PathExpr(tuple(p + q)), tree)
    stepwise = [r for mid in eval_path(PathExpr(tuple(p)), tree) for r in eval_path(PathExpr(tuple(q)), mid)]
    assert whole == stepwise


@given(element_paths(), st.sampled_from([None, TextStep(), AttrStep("x")]), st.booleans())
def test_format_parse_round_trip(steps, last, absolute):
    expr = PathExpr(tuple(steps + ([last] if last else [])), absolute)
    assert parse_path(format_path(expr)) == expr


@given(trees(), element_paths())
def test_results_are_descendants(tree, steps):
    def all_nodes(n):
        yield n
        for c in n.elements():
            yield from all_nodes(c)

    ids = {id(n) for n in all_nodes(tree)}
    for r in eval_path(PathExpr(tuple(steps)), tree):
        assert id(r) in ids and r is not tree
