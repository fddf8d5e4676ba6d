"""Lexical rules for primitive datatypes, shared by mapping and validation."""

from __future__ import annotations

import calendar
import math
import re

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)")
_DATE = re.compile(r"(\d{4})-(\d{2})-(\d{2})")
_TIME = re.compile(r"(\d{2}):(\d{2})(?::(\d{2})(?:\.\d+)?)?(Z|[+-](\d{2}):(\d{2}))?")
_URL = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:\S+")
_BOOLEANS = {"true": True, "false": False, "1": True, "0": False}



def _valid_date(text: str) -> bool:
    m = _DATE.fullmatch(text)
    if not m:
        return False
    year, month, day = (int(g) for g in m.groups())
    if year == 0 or not 1 <= month <= 12:
        return False
    return 1 <= day <= calendar.monthrange(year, month)[1]


def _valid_time(text: str) -> bool:
    m = _TIME.fullmatch(text)
    if not m:
        return False
    hh, mm, ss, _zone, zh, zm = m.groups()
    if int(hh) > 23 or int(mm) > 59 or (ss is not None and int(ss) > 59):
        return False
    return zh is None or (int(zh) <= 23 and int(zm) <= 59)


def _valid_datetime(text: str) -> bool:
    date, sep, time = text.partition("T")
    return bool(sep) and _valid_date(date) and _valid_time(time)


def is_lexical(text: str, datatype: str) -> bool:
    """True if ``text`` is in the lexical space of ``datatype``."""
    if datatype == "Text":
        return True
    if datatype == "Number":
        return bool(_NUMBER.fullmatch(text))
    if datatype == "Boolean":
        return text in _BOOLEANS
    if datatype == "Date":
        return _valid_date(text)
    if datatype == "DateTime":
        return _valid_datetime(text)
    if datatype == "Time":
        return _valid_time(text)
    if datatype == "URL":
        return bool(_URL.fullmatch(text))
    raise ValueError(f"unknown datatype {datatype}")


def convert(text: str, datatype: str) -> str | int | float | bool:
    """Convert source text to its JSON value; raises ValueError when malformed."""
    if not is_lexical(text, datatype):
        raise ValueError(f"{text!r} is not a valid {datatype}")
    if datatype == "Number":
        if "." in text:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(f"{text!r} is out of range for Number")
            return value
        return int(text)
    if datatype == "Boolean":
        return _BOOLEANS[text]
    return text


def conforms(value: object, datatype: str) -> bool:
    """Whether an already-decoded JSON literal satisfies a primitive range."""
    if datatype == "Text":
        return True
    if isinstance(value, bool):
        return datatype == "Boolean"
    if isinstance(value, (int, float)):
        return datatype == "Number" and math.isfinite(value)
    if isinstance(value, str):
        return is_lexical(value, datatype)
    return False
