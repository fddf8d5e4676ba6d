"""Link pages to annotation files and inject JSON-LD into HTML.

Injection is textual: the script block is inserted before the first
``</head>`` (or after the first ``<body>`` tag), every other byte of the
page is kept as-is. Re-injecting the same annotation id replaces the
existing block instead of adding another one.
"""

from __future__ import annotations

import html as html_lib
import json
import logging
import re
import threading
from dataclasses import dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import parse_qs, unquote, urlsplit

from ._jsonio import Source, load_json
from .errors import DuplicateKeyError, FormatError, NotInjectableError
from .repository import Repository

logger = logging.getLogger(__name__)

LD_JSON = "application/ld+json"
_HEAD_CLOSE = re.compile(rb"</head\s*>", re.IGNORECASE)
_BODY_OPEN = re.compile(rb"<body(?:\s[^>]*)?>", re.IGNORECASE)


@dataclass(frozen=True)
class PageMap:
    entries: Mapping[str, str]
    warnings: tuple[str, ...] = ()

    def lookup(self, request_key: str) -> str | None:
        """Exact match for page ids; URL paths ignore the query string and one trailing slash."""
        if not request_key.startswith("/"):
            return self.entries.get(request_key)
        path = request_key.split("?", 1)[0].split("#", 1)[0]
        if len(path) > 1 and path.endswith("/"):
            path = path[:-1]
        return self.entries.get(path)


def _reject_duplicates(pairs: list[tuple[str, object]]) -> dict:
    out: dict = {}
    for k, v in pairs:
        if k in out:
            raise DuplicateKeyError(f"duplicate page map key {k!r}")
        out[k] = v
    return out


def load_page_map(source: Source, known_files: Iterable[str] | None = None) -> PageMap:
    """Parse a ``{key: filename}`` object; filenames missing from ``known_files`` are dropped with a warning."""
    data = load_json(source, what="page map", object_pairs_hook=_reject_duplicates)
    if not isinstance(data, dict) or not all(isinstance(v, str) and v for v in data.values()):
        raise FormatError("page map must be an object mapping keys to filenames")
    if known_files is None:
        return PageMap(dict(data))
    known = set(known_files)
    entries, warnings = {}, []
    for key, filename in data.items():
        if filename in known:
            entries[key] = filename
        else:
            warnings.append(f"{key}: {filename} is not in the repository")
    for w in warnings:
        logger.warning("page map: %s", w)
    return PageMap(entries, tuple(warnings))


def lookup(page_map: PageMap, request_key: str) -> str | None:
    return page_map.lookup(request_key)


def script_block(annotation: bytes, annotation_id: str) -> bytes:
    return script_open(annotation_id) + _escape_payload(annotation) + b"</script>"


def script_open(annotation_id: str) -> bytes:
    attr = html_lib.escape(annotation_id, quote=True)
    return f'<script type="{LD_JSON}" data-annotation-id="{attr}">'.encode("utf-8")


def _escape_payload(annotation: bytes) -> bytes:
    # keeps "</script" out of the block; "<\/" is still valid JSON
    return annotation.replace(b"</", b"<\\/")


def inject(html: bytes, annotation: bytes, annotation_id: str) -> bytes:
    opener = script_open(annotation_id)
    payload = _escape_payload(annotation)
    start = html.find(opener)
    if start >= 0:
        content_start = start + len(opener)
        end = html.find(b"</script>", content_start)
        if end >= 0:
            return html[:content_start] + payload + html[end:]
    block = opener + payload + b"</script>"
    m = _HEAD_CLOSE.search(html)
    if m:
        return html[: m.start()] + block + html[m.start():]
    m = _BODY_OPEN.search(html)
    if m:
        return html[: m.end()] + block + html[m.end():]
    raise NotInjectableError("page has neither </head> nor <body>")


# -- service ----------------------------------------------------------------


@dataclass(frozen=True)
class Snapshot:
    """Immutable view served to requests: page map plus the mapped files' bytes."""

    page_map: PageMap
    files: Mapping[str, tuple[str, bytes]] = field(default_factory=dict)  # filename -> (id, bytes)


def load_snapshot(repo_root: str | Path, page_map_path: str | Path) -> Snapshot:
    repo = Repository(repo_root)
    manifest = repo.load_manifest()
    by_filename = manifest.by_filename()
    page_map = load_page_map(Path(page_map_path).read_bytes(), by_filename)
    files = {}
    for filename in sorted(set(page_map.entries.values())):
        doc_id = by_filename[filename]
        files[filename] = (doc_id, repo.document_path(manifest.entries[doc_id]).read_bytes())
    return Snapshot(page_map, files)


class AnnotationServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128  # the stdlib default of 5 drops bursts of clients

    def __init__(self, bind: tuple[str, int], loader: Callable[[], Snapshot]) -> None:
        self.loader = loader
        self.snapshot = loader()
        self._reload_lock = threading.Lock()
        super().__init__(bind, _Handler)

    def reload(self) -> None:
        """Build a new snapshot and swap it in; on failure the old one keeps serving."""
        with self._reload_lock:
            self.snapshot = self.loader()

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, name="annotation-server", daemon=True)
        thread.start()
        return thread


class _Handler(BaseHTTPRequestHandler):
    server: AnnotationServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args: object) -> None:
        logger.debug("%s - %s", self.address_string(), format % args)

    def _send(self, status: int, body: bytes, content_type: str = "text/plain; charset=utf-8") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def do_GET(self) -> None:
        snap = self.server.snapshot
        url = urlsplit(self.path)
        if url.path == "/healthz":
            self._send(200, b"ok\n")
            return
        if url.path.startswith("/annotation/"):
            key = unquote(url.path[len("/annotation/"):])
            filename = snap.page_map.lookup(key)
            if filename is None or filename not in snap.files:
                self._send(404, f"no annotation for {key}\n".encode())
                return
            self._send(200, snap.files[filename][1], LD_JSON)
            return
        self._send(404, b"not found\n")

    def do_POST(self) -> None:
        url = urlsplit(self.path)
        body = self._read_body()
        if url.path == "/reload":
            try:
                self.server.reload()
            except Exception as exc:  # keep serving the previous snapshot
                logger.error("reload failed: %s", exc)
                self._send(500, json.dumps({"status": "error", "error": str(exc)}).encode(), "application/json")
                return
            self._send(200, b'{"status":"reloaded"}', "application/json")
            return
        if url.path == "/embed":
            snap = self.server.snapshot
            keys = parse_qs(url.query).get("key")
            if not keys:
                self._send(400, b"missing key parameter\n")
                return
            filename = snap.page_map.lookup(keys[0])
            if filename is None or filename not in snap.files:
                self._send(404, f"no annotation for {keys[0]}\n".encode())
                return
            doc_id, data = snap.files[filename]
            try:
                out = inject(body, data, doc_id)
            except NotInjectableError as exc:
                self._send(HTTPStatus.UNPROCESSABLE_ENTITY, f"{exc}\n".encode())
                return
            self._send(200, out, "text/html; charset=utf-8")
            return
        self._send(404, b"not found\n")


def parse_bind(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"bind address must be host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def serve(repo_root: str | Path, page_map_path: str | Path, bind: str | tuple[str, int]) -> AnnotationServer:
    """Create (not start) the service; call ``serve_forever`` or ``start_background``."""
    address = parse_bind(bind) if isinstance(bind, str) else bind
    return AnnotationServer(address, lambda: load_snapshot(repo_root, page_map_path))
