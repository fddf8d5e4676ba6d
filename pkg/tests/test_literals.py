from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from touristld.literals import conforms, convert, is_lexical


@pytest.mark.parametrize(
    "text, datatype, ok",
    [
        ("148.00", "Number", True),
        ("-3", "Number", True),
        (".5", "Number", True),
        ("1e5", "Number", False),
        ("12a", "Number", False),
        ("true", "Boolean", True),
        ("0", "Boolean", True),
        ("yes", "Boolean", False),
        ("2017-02-28", "Date", True),
        ("2017-02-29", "Date", False),
        ("2016-02-29", "Date", True),
        ("2017-13-01", "Date", False),
        ("2017-07-14T20:00:00+02:00", "DateTime", True),
        ("2017-07-14T20:00Z", "DateTime", True),
        ("2017-07-14 20:00", "DateTime", False),
        ("2017-07-14T24:00", "DateTime", False),
        ("09:30", "Time", True),
        ("9:30", "Time", False),
        ("https://example.org/x", "URL", True),
        ("mailto:x@example.org", "URL", True),
        ("www.example.org", "URL", False),
        ("http://exa mple.org", "URL", False),
        ("anything at all", "Text", True),
    ],
)
def test_is_lexical(text, datatype, ok):
    assert is_lexical(text, datatype) is ok


def test_unknown_datatype():
    with pytest.raises(ValueError):
        is_lexical("x", "Colour")


def test_convert_numbers():
    assert convert("148.00", "Number") == 148.0 and isinstance(convert("148.00", "Number"), float)
    assert convert("212", "Number") == 212 and isinstance(convert("212", "Number"), int)


def test_convert_boolean():
    assert convert("1", "Boolean") is True
    assert convert("false", "Boolean") is False


def test_convert_rejects_malformed():
    with pytest.raises(ValueError):
        convert("abc", "Number")


def test_conforms():
    assert conforms(True, "Boolean")
    assert not conforms(True, "Number")
    assert conforms(4.5, "Number")
    assert not conforms("4.5", "Boolean")
    assert conforms("2017-01-01", "Date")
    assert conforms(42, "Text")


@given(st.decimals(allow_nan=False, allow_infinity=False, places=3, min_value=-10**9, max_value=10**9))
def test_converted_numbers_conform(d):
    text = format(d, "f")
    assert conforms(convert(text, "Number"), "Number")
