"""Source connectors: XML over HTTP (request/response style APIs) and local files."""

from __future__ import annotations

import glob
import logging
import os
import re
import string
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ._jsonio import PACKAGE_PREFIX, load_json
from .errors import ConfigError, FetchError, HttpStatusError, SourceNotFoundError

logger = logging.getLogger(__name__)

_ENV_REF = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")

_SOURCE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "kind", "mapping"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "kind": {"enum": ["http", "file"]},
        "endpoint": {"type": "string"},
        "method": {"enum": ["GET", "POST"]},
        "body": {"type": "string"},
        "headers": {"type": "object", "additionalProperties": {"type": "string"}},
        "bindings": {"type": "object", "additionalProperties": {"type": "string"}},
        "timeout": {"type": "number", "exclusiveMinimum": 0},
        "retries": {"type": "integer", "minimum": 0},
        "retryDelay": {"type": "number", "minimum": 0},
        "path": {"type": "string"},
        "dataset": {"type": "string", "minLength": 1},
        "mapping": {"type": "string"},
    },
    "if": {"properties": {"kind": {"const": "http"}}},
    "then": {"required": ["endpoint"]},
    "else": {"required": ["path"]},
}
PIPELINE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["sources", "spec", "vocabulary", "repository"],
    "properties": {
        "sources": {"type": "array", "items": _SOURCE_SCHEMA},
        "manual": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["path", "dataset"],
                "properties": {"path": {"type": "string"}, "dataset": {"type": "string", "minLength": 1}},
            },
        },
        "spec": {"type": "string"},
        "vocabulary": {"type": "string"},
        "repository": {"type": "string"},
        "pageMap": {"type": "string"},
    },
}


@dataclass(frozen=True)
class SourceConfig:
    name: str
    kind: str
    mapping: str
    dataset: str | None = None
    endpoint: str = ""
    method: str = "POST"
    body: str | None = None
    headers: Mapping[str, str] = field(default_factory=dict)
    bindings: Mapping[str, str] = field(default_factory=dict)
    timeout: float = 30.0
    retries: int = 2
    retry_delay: float = 0.5
    path: str = ""

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> SourceConfig:
        def resolve(p: str) -> str:
            return _resolve(p, base) if base is not None else p

        return cls(
            name=d["name"],
            kind=d["kind"],
            mapping=resolve(d["mapping"]),
            dataset=d.get("dataset"),
            endpoint=d.get("endpoint", ""),
            method=d.get("method", "POST"),
            body=d.get("body"),
            headers=dict(d.get("headers", {})),
            bindings=dict(d.get("bindings", {})),
            timeout=d.get("timeout", 30.0),
            retries=d.get("retries", 2),
            retry_delay=d.get("retryDelay", 0.5),
            path=resolve(d["path"]) if "path" in d else "",
        )


@dataclass(frozen=True)
class Payload:
    source_tag: str
    data: bytes


@dataclass
class FetchResult:
    """Payloads and errors of one fetch; together they cover every planned request or file."""

    payloads: list[Payload] = field(default_factory=list)
    errors: list[FetchError] = field(default_factory=list)

    def raise_first(self) -> None:
        if self.errors:
            raise self.errors[0]


def interpolate_env(text: str, environ: Mapping[str, str] | None = None) -> str:
    env = os.environ if environ is None else environ

    def sub(m: re.Match) -> str:
        if m.group(1) not in env:
            raise ConfigError(f"environment variable {m.group(1)} is not set")
        return env[m.group(1)]

    return _ENV_REF.sub(sub, text)


def fetch(cfg: SourceConfig, bindings: Mapping[str, str] | None = None) -> FetchResult:
    if cfg.kind == "file":
        return _fetch_files(cfg)
    if cfg.kind == "http":
        return _fetch_http(cfg, {**cfg.bindings, **(bindings or {})})
    raise ConfigError(f"unknown source kind {cfg.kind!r}")


def _fetch_files(cfg: SourceConfig) -> FetchResult:
    result = FetchResult()
    matches = sorted(glob.glob(cfg.path))
    if not matches:
        result.errors.append(SourceNotFoundError(cfg.path, "no file matches"))
        return result
    for path in matches:
        try:
            result.payloads.append(Payload(path, Path(path).read_bytes()))
        except OSError as exc:
            result.errors.append(SourceNotFoundError(path, exc.strerror or str(exc)))
    return result


def _fetch_http(cfg: SourceConfig, bindings: Mapping[str, str]) -> FetchResult:
    tag = f"{cfg.name}:{cfg.method} {cfg.endpoint}"
    result = FetchResult()
    try:
        url = interpolate_env(cfg.endpoint)
        headers = {k: interpolate_env(v) for k, v in cfg.headers.items()}
        body = None
        if cfg.body is not None:
            try:
                body = string.Template(cfg.body).substitute(bindings).encode("utf-8")
            except KeyError as exc:
                raise ConfigError(f"body placeholder {exc.args[0]!r} has no binding") from None
    except ConfigError as exc:
        result.errors.append(FetchError(tag, str(exc)))
        return result

    attempts = cfg.retries + 1
    for attempt in range(1, attempts + 1):
        request = urllib.request.Request(url, data=body, headers=headers, method=cfg.method)
        try:
            with urllib.request.urlopen(request, timeout=cfg.timeout) as response:
                result.payloads.append(Payload(tag, response.read()))
                return result
        except urllib.error.HTTPError as exc:
            exc.close()
            if exc.code < 500 or attempt == attempts:
                result.errors.append(HttpStatusError(tag, exc.code, attempt))
                return result
            logger.warning("%s: HTTP %s, retrying (%d/%d)", tag, exc.code, attempt, attempts)
        except (urllib.error.URLError, OSError) as exc:
            if attempt == attempts:
                reason = getattr(exc, "reason", exc)
                result.errors.append(FetchError(tag, f"network error after {attempt} attempt(s): {reason}"))
                return result
            logger.warning("%s: %s, retrying (%d/%d)", tag, exc, attempt, attempts)
        time.sleep(cfg.retry_delay)
    return result


@dataclass(frozen=True)
class ManualSource:
    path: str
    dataset: str


@dataclass(frozen=True)
class PipelineConfig:
    sources: tuple[SourceConfig, ...]
    spec: str
    vocabulary: str
    repository: str
    manual: tuple[ManualSource, ...] = ()
    page_map: str | None = None


def _resolve(p: str, base: Path) -> str:
    if p.startswith(PACKAGE_PREFIX) or os.path.isabs(p):
        return p
    return str(base / p)


def load_pipeline_config(path: str | os.PathLike) -> PipelineConfig:
    """Read a pipeline config; relative paths are resolved against its directory."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    data = load_json(raw, PIPELINE_SCHEMA, what="pipeline config")
    base = path.parent

    def resolve(p: str) -> str:
        return _resolve(p, base)

    return PipelineConfig(
        sources=tuple(SourceConfig.from_dict(s, base) for s in data["sources"]),
        spec=resolve(data["spec"]),
        vocabulary=resolve(data["vocabulary"]),
        repository=resolve(data["repository"]),
        manual=tuple(ManualSource(resolve(m["path"]), m["dataset"]) for m in data.get("manual", [])),
        page_map=resolve(data["pageMap"]) if "pageMap" in data else None,
    )
