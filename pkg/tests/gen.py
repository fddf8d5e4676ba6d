"""Random inputs and independent oracles shared by unit and acceptance tests."""

from __future__ import annotations

import json
import random
import string
from xml.sax.saxutils import escape, quoteattr

from touristld.annotation import AnnotationDocument, LangLiteral, Literal

TYPE_NAMES = ["Hotel", "Event", "Place", "PostalAddress", "Offer", "Thing", "Ümlaut-Typ"]
LANGUAGES = ["de", "en", "it", "de-AT", "en-GB", "zh-Hant"]
_TEXT_ALPHABET = string.ascii_letters + string.digits + " äöüßé€\"\\/<>&'\t\n 漢字"


def random_text(rng: random.Random, max_len: int = 12) -> str:
    return "".join(rng.choice(_TEXT_ALPHABET) for _ in range(rng.randint(0, max_len)))


def random_property_name(rng: random.Random) -> str:
    head = rng.choice(string.ascii_letters + "äß_")
    return head + "".join(rng.choice(string.ascii_letters + string.digits + "-_:") for _ in range(rng.randint(0, 8)))


def random_literal(rng: random.Random) -> Literal | LangLiteral:
    kind = rng.randrange(6)
    if kind == 0:
        return Literal(random_text(rng))
    if kind == 1:
        return Literal(rng.randint(-10**12, 10**12))
    if kind == 2:
        return Literal(rng.choice([0.5, -1.25, 1e-7, 3.141592653589793, 1e21, rng.uniform(-1e6, 1e6)]))
    if kind == 3:
        return Literal(rng.random() < 0.5)
    return LangLiteral(random_text(rng), rng.choice(LANGUAGES))


def random_annotation(rng: random.Random, depth: int = 4, max_props: int = 8, top: bool = True) -> AnnotationDocument:
    """A document with at most ``depth`` levels and ``max_props`` properties per level."""
    types = tuple(rng.sample(TYPE_NAMES, rng.randint(1, 3)))
    props: dict[str, list] = {}
    for _ in range(rng.randint(0, max_props)):
        values = []
        for _ in range(rng.randint(1, 3)):
            if depth > 1 and rng.random() < 0.3:
                values.append(random_annotation(rng, depth - 1, max_props, top=False))
            else:
                values.append(random_literal(rng))
        props[random_property_name(rng)] = values
    doc_id = None
    if rng.random() < (0.7 if top else 0.2):
        doc_id = rng.choice(["", "urn:x:", "https://ex.org/"]) + random_text(rng, 8) + str(rng.randint(0, 999))
    return AnnotationDocument(types, props, doc_id)


def annotation_depth(doc: AnnotationDocument) -> int:
    nested = [annotation_depth(v) for vs in doc.properties.values() for v in vs if isinstance(v, AnnotationDocument)]
    return 1 + max(nested, default=0)


def flatten_to_triples(obj: dict, subject: str = "_:b0", counter: list[int] | None = None) -> list[tuple]:
    """Expand decoded JSON-LD (the subset we emit) into (s, p, o) tuples.

    Works on plain JSON data rather than the document classes, so it shares
    no code with ``count_triples``.
    """
    counter = counter if counter is not None else [0]
    if "@id" in obj:
        subject = obj["@id"]
    out = []
    types = obj["@type"]
    for t in types if isinstance(types, list) else [types]:
        out.append((subject, "rdf:type", t))
    for key, raw in obj.items():
        if key.startswith("@"):
            continue
        for value in raw if isinstance(raw, list) else [raw]:
            if isinstance(value, dict) and "@value" not in value:
                counter[0] += 1
                node = value.get("@id", f"_:b{counter[0]}")
                out.append((subject, key, node))
                out.extend(flatten_to_triples(value, node, counter))
            elif isinstance(value, dict):
                out.append((subject, key, (value["@value"], value.get("@language"))))
            else:
                out.append((subject, key, json.dumps(value)))
    return out


# -- randomized source documents in the fixture XML shapes ------------------

ACCOMMODATION_TOKENS = ()  # static typing: every item becomes a Hotel
EVENT_TOKENS = ["Konzert", "Theater/Show/Tanz/Film/Kleinkunst", "Sport", "Fest", "Brauchtum", "Sonstiges"]
INFRASTRUCTURE_TOKENS = [
    "Skischule", "Sportgeschäft", "Gasthof", "Fahrrad-Werkstätte", "Fahrrad-Verleih",
    "Skigebiet", "Aussichtspunkt", "Kirche",
]
_WORDS = ["Alpen", "Zillertal", "Hof", "Stüberl", "Berg", "Sonne", "&", "<Spezial>", "Café", "\"Nr. 1\"", "Ahorn"]


def _phrase(rng: random.Random) -> str:
    # leading/trailing whitespace exercises trimming
    pad = rng.choice(["", " ", "\n  "])
    return pad + " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 4))) + pad


def _maybe(rng: random.Random, p: float = 0.6) -> bool:
    return rng.random() < p


def _number(rng: random.Random, lo: float, hi: float, decimals: int) -> str:
    value = rng.uniform(lo, hi)
    return f"{value:.{decimals}f}" if decimals else str(int(value))


def _url(rng: random.Random) -> str:
    return rng.choice(["https", "http"]) + f"://www.example.org/{rng.randint(1, 10**6)}/"


def _datetime(rng: random.Random) -> str:
    return (
        f"{rng.randint(2000, 2030):04d}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"
        f"T{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:00{rng.choice(['Z', '+01:00', '+02:00'])}"
    )


def _id(rng: random.Random, prefix: str, used: set[str]) -> str:
    while True:
        candidate = f"{prefix}-{rng.randint(0, 10**9)}"
        if candidate not in used:
            used.add(candidate)
            return candidate


def random_accommodations_xml(rng: random.Random, max_items: int = 6) -> bytes:
    used: set[str] = set()
    out = ["<Accommodations>"]
    for _ in range(rng.randint(0, max_items)):
        out.append(f"<Accommodation Id={quoteattr(_id(rng, 'ACC', used))}>")
        out.append(f"<Name>{escape(_phrase(rng))}</Name>")
        for lang in rng.sample(["de", "en", "it"], rng.randint(0, 3)):
            out.append(f'<Description lang="{lang}">{escape(_phrase(rng))}</Description>')
        if _maybe(rng):
            out.append("<Contact>")
            if _maybe(rng):
                out.append(f"<Phone>+43 {rng.randint(1000, 9999)} {rng.randint(100, 99999)}</Phone>")
            if _maybe(rng):
                out.append(f"<Fax>+43 {rng.randint(1000, 9999)}</Fax>")
            if _maybe(rng):
                out.append(f"<Email>x{rng.randint(0, 99)}@example.org</Email>")
            if _maybe(rng):
                out.append(f"<Web>{_url(rng)}</Web>")
            out.append("</Contact>")
        if _maybe(rng):
            out.append(f"<Currencies>{rng.choice(['EUR', 'EUR, CHF', 'USD'])}</Currencies>")
        if _maybe(rng):
            parts = [("Street", _phrase(rng)), ("Town", _phrase(rng)), ("Zip", str(rng.randint(1000, 9999))),
                     ("Region", "Tirol"), ("Country", "AT")]
            chosen = [p for p in parts if _maybe(rng)]
            out.append("<Address>" + "".join(f"<{k}>{escape(v)}</{k}>" for k, v in chosen) + "</Address>")
        if _maybe(rng):
            inner = ""
            if _maybe(rng):
                inner += f"<Value>{_number(rng, 1, 5, 1)}</Value>"
            if _maybe(rng):
                inner += f"<Count>{rng.randint(0, 5000)}</Count>"
            out.append(f"<Rating>{inner}</Rating>")
        if _maybe(rng):
            out.append(f'<Position Latitude="{_number(rng, -90, 90, 4)}" Longitude="{_number(rng, -180, 180, 4)}"/>')
        if _maybe(rng):
            out.append("<Images>")
            for _ in range(rng.randint(0, 3)):
                caption = f" Caption={quoteattr(_phrase(rng))}" if _maybe(rng) else ""
                out.append(f"<Image Url={quoteattr(_url(rng) + 'img.jpg')}{caption}/>")
            out.append("</Images>")
        if _maybe(rng):
            out.append("<Offers>")
            for _ in range(rng.randint(0, 3)):
                out.append("<Offer>")
                if _maybe(rng, 0.8):
                    out.append(f"<Name>{escape(_phrase(rng))}</Name>")
                if _maybe(rng):
                    out.append(f"<Availability>{rng.choice(['InStock', 'SoldOut'])}</Availability>")
                if _maybe(rng):
                    out.append(f'<Price Currency="EUR">{_number(rng, 10, 900, rng.choice([0, 2]))}</Price>')
                out.append("</Offer>")
            out.append("</Offers>")
        out.append("</Accommodation>")
    out.append("</Accommodations>")
    return "\n".join(out).encode("utf-8")


def random_events_xml(rng: random.Random, max_items: int = 6) -> bytes:
    used: set[str] = set()
    out = ["<Events>"]
    for _ in range(rng.randint(0, max_items)):
        out.append(f"<Event Id={quoteattr(_id(rng, 'EV', used))}>")
        out.append(f"<Type>{escape(rng.choice(EVENT_TOKENS))}</Type>")
        for lang in ["de"] + rng.sample(["en", "it"], rng.randint(0, 2)):
            out.append(f'<Name lang="{lang}">{escape(_phrase(rng))}</Name>')
        if _maybe(rng):
            out.append(f'<Description lang="de">{escape(_phrase(rng))}</Description>')
        out.append(f"<Start>{_datetime(rng)}</Start>")
        if _maybe(rng):
            out.append(f"<End>{_datetime(rng)}</End>")
        if _maybe(rng):
            addr = f"<Address><Town>{escape(_phrase(rng))}</Town><Zip>{rng.randint(1000, 9999)}</Zip></Address>" if _maybe(rng) else ""
            out.append(f"<Location><Name>{escape(_phrase(rng))}</Name>{addr}</Location>")
        if _maybe(rng):
            web = f"<Web>{_url(rng)}</Web>" if _maybe(rng) else ""
            out.append(f"<Organizer><Name>{escape(_phrase(rng))}</Name>{web}</Organizer>")
        if _maybe(rng):
            out.append(f"<Free>{rng.choice(['true', 'false', '1', '0'])}</Free>")
        if _maybe(rng):
            out.append("<Tickets>")
            for _ in range(rng.randint(1, 3)):
                out.append(f'<Ticket><Name>{escape(_phrase(rng))}</Name><Price Currency="EUR">{_number(rng, 0, 200, 2)}</Price></Ticket>')
            out.append("</Tickets>")
        if _maybe(rng):
            out.append(f"<Link>{_url(rng)}</Link>")
        out.append("</Event>")
    out.append("</Events>")
    return "\n".join(out).encode("utf-8")


def random_infrastructure_xml(rng: random.Random, max_items: int = 8) -> bytes:
    used: set[str] = set()
    out = ["<Infrastructure>"]
    for _ in range(rng.randint(0, max_items)):
        out.append(f"<Item Id={quoteattr(_id(rng, 'INF', used))}>")
        out.append(f"<Type>{escape(rng.choice(INFRASTRUCTURE_TOKENS))}</Type>")
        out.append(f"<Name>{escape(_phrase(rng))}</Name>")
        if _maybe(rng):
            out.append(f"<Phone>+43 {rng.randint(1000, 9999)}</Phone>")
        if _maybe(rng):
            out.append(f"<Web>{_url(rng)}</Web>")
        if _maybe(rng):
            out.append(f"<Address><Street>{escape(_phrase(rng))}</Street><Town>Mayrhofen</Town><Zip>6290</Zip></Address>")
        if _maybe(rng):
            out.append(f'<Position Latitude="{_number(rng, -90, 90, 4)}" Longitude="{_number(rng, -180, 180, 4)}"/>')
        for _ in range(rng.randint(0, 2)):
            out.append(f"<OpeningHours>Mo-Fr {rng.randint(6, 11):02d}:00-{rng.randint(12, 22):02d}:00</OpeningHours>")
        out.append("</Item>")
    out.append("</Infrastructure>")
    return "\n".join(out).encode("utf-8")


RANDOM_SOURCES = {
    "accommodation": random_accommodations_xml,
    "event": random_events_xml,
    "infrastructure": random_infrastructure_xml,
}
