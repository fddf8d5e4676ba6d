"""File-per-document annotation repository with a hash manifest.

Layout::

    <root>/manifest.json          entries + stats log
    <root>/<dataset>/<id>.json    canonical JSON-LD, one per document
    <root>/.lock                  advisory single-writer lock

Writes go to temporary files first and are renamed into place; the
manifest is swapped last, so readers see either the old or the new state.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
import tempfile
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import filelock

from ._jsonio import dump_json, load_json
from .annotation import (
    AnnotationDocument,
    canonical_serialize,
    content_hash,
    count_triples,
    document_filename,
    parse_annotation,
)
from .domspec import DomainSpecification
from .errors import IdCollisionError, RepositoryError, RepositoryLockedError, TouristLDError
from .validator import ViolationReport, validate_document
from .vocabulary import Vocabulary

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
LOCK = ".lock"
MODES = ("incremental", "full")
ORIGINS = ("automatic", "manual")
STATS_HEADER = ("date", "dataset", "documents", "triples", "added", "updated", "removed")
_DATASET = re.compile(r"[A-Za-z0-9_-][A-Za-z0-9._-]*")


def utc_today() -> date:
    return datetime.now(timezone.utc).date()


@dataclass(frozen=True)
class ManifestEntry:
    filename: str
    content_hash: str
    triple_count: int
    dataset: str
    origin: str
    first_seen: str
    last_updated: str

    def to_dict(self) -> dict:
        return {
            "filename": self.filename,
            "contentHash": self.content_hash,
            "tripleCount": self.triple_count,
            "dataset": self.dataset,
            "origin": self.origin,
            "firstSeen": self.first_seen,
            "lastUpdated": self.last_updated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ManifestEntry:
        return cls(
            d["filename"], d["contentHash"], d["tripleCount"], d["dataset"], d["origin"], d["firstSeen"], d["lastUpdated"]
        )


@dataclass(frozen=True)
class StatsSnapshot:
    date: str
    dataset: str
    documents: int
    triples: int
    added: int = 0
    updated: int = 0
    removed: int = 0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in STATS_HEADER}


@dataclass
class Manifest:
    entries: dict[str, ManifestEntry] = field(default_factory=dict)
    stats_log: list[StatsSnapshot] = field(default_factory=list)

    def to_json(self) -> bytes:
        return dump_json(
            {
                "entries": {k: self.entries[k].to_dict() for k in sorted(self.entries)},
                "statsLog": [s.to_dict() for s in sorted(self.stats_log, key=lambda s: (s.date, s.dataset))],
            }
        )

    @classmethod
    def from_json(cls, data: bytes) -> Manifest:
        raw = load_json(data, what="manifest")
        return cls(
            {k: ManifestEntry.from_dict(v) for k, v in raw.get("entries", {}).items()},
            [StatsSnapshot(**s) for s in raw.get("statsLog", [])],
        )

    def by_filename(self) -> dict[str, str]:
        return {e.filename: doc_id for doc_id, e in self.entries.items()}


@dataclass
class Rejection:
    name: str
    reason: str
    report: ViolationReport | None = None


@dataclass
class SyncReport:
    added: list[str] = field(default_factory=list)
    updated: list[str] = field(default_factory=list)
    unchanged: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    rejected: list[Rejection] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        return {
            "added": len(self.added),
            "updated": len(self.updated),
            "unchanged": len(self.unchanged),
            "removed": len(self.removed),
        }

    def merge(self, other: SyncReport) -> SyncReport:
        return SyncReport(
            self.added + other.added,
            self.updated + other.updated,
            self.unchanged + other.unchanged,
            self.removed + other.removed,
            self.rejected + other.rejected,
        )

    def to_dict(self) -> dict:
        d: dict = {**self.counts()}
        for k in ("added", "updated", "unchanged", "removed"):
            d[f"{k}Ids"] = sorted(getattr(self, k))
        if self.rejected:
            d["rejected"] = [
                {"file": r.name, "reason": r.reason, **({"violations": r.report.to_dict()["violations"]} if r.report else {})}
                for r in self.rejected
            ]
        return d


@dataclass(frozen=True)
class FsckIssue:
    document_id: str | None
    filename: str
    problem: str

    def __str__(self) -> str:
        return f"{self.document_id or '<orphan>'} ({self.filename}): {self.problem}"


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class Repository:
    def __init__(self, root: str | os.PathLike, clock: Callable[[], date] = utc_today) -> None:
        self.root = Path(root)
        self.clock = clock
        self._lock = filelock.FileLock(str(self.root / LOCK), timeout=0)

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST

    @contextmanager
    def locked(self) -> Iterator[None]:
        """Hold the single-writer lock; reentrant within one thread."""
        self.root.mkdir(parents=True, exist_ok=True)
        try:
            self._lock.acquire()
        except filelock.Timeout:
            raise RepositoryLockedError(f"repository {self.root} is locked by another writer") from None
        try:
            yield
        finally:
            self._lock.release()

    def load_manifest(self) -> Manifest:
        try:
            data = self.manifest_path.read_bytes()
        except FileNotFoundError:
            return Manifest()
        return Manifest.from_json(data)

    def document_path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.dataset / entry.filename

    def read_document_bytes(self, doc_id: str, manifest: Manifest | None = None) -> bytes:
        manifest = manifest or self.load_manifest()
        return self.document_path(manifest.entries[doc_id]).read_bytes()

    def sync(
        self,
        incoming: Sequence[AnnotationDocument],
        dataset: str,
        mode: str = "incremental",
        origin: str = "automatic",
    ) -> SyncReport:
        """Store ``incoming`` for ``dataset``; rewrite only documents whose hash changed.

        In full mode, entries of the same dataset and origin that are absent
        from ``incoming`` are removed.
        """
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}")
        if not _DATASET.fullmatch(dataset):
            raise ValueError(f"invalid dataset name {dataset!r}")
        ids = [d.id for d in incoming]
        if any(i is None for i in ids):
            raise IdCollisionError("every stored document needs an @id")
        dupes = sorted({i for i in ids if ids.count(i) > 1})  # type: ignore[misc]
        if dupes:
            raise IdCollisionError(f"duplicate ids in batch: {dupes}")

        with self.locked():
            manifest = self.load_manifest()
            today = self.clock().isoformat()
            report = SyncReport()
            entries = dict(manifest.entries)
            owners = manifest.by_filename()
            staged: list[tuple[Path, bytes]] = []
            for doc in incoming:
                assert doc.id is not None
                data = canonical_serialize(doc)
                digest = content_hash(data)
                existing = entries.get(doc.id)
                if existing is not None and existing.dataset != dataset:
                    raise IdCollisionError(f"id {doc.id!r} already belongs to dataset {existing.dataset!r}")
                filename = document_filename(doc.id)
                if owners.get(filename, doc.id) != doc.id:
                    raise IdCollisionError(f"ids {doc.id!r} and {owners[filename]!r} map to the same file {filename}")
                owners[filename] = doc.id
                if existing is None:
                    report.added.append(doc.id)
                    entries[doc.id] = ManifestEntry(filename, digest, count_triples(doc), dataset, origin, today, today)
                elif existing.content_hash != digest:
                    report.updated.append(doc.id)
                    entries[doc.id] = replace(
                        existing, content_hash=digest, triple_count=count_triples(doc), origin=origin, last_updated=today
                    )
                else:
                    report.unchanged.append(doc.id)
                    continue
                staged.append((self.root / dataset / filename, data))

            if mode == "full":
                keep = set(ids)
                for doc_id, entry in manifest.entries.items():
                    if entry.dataset == dataset and entry.origin == origin and doc_id not in keep:
                        report.removed.append(doc_id)
                        del entries[doc_id]

            stats_log = _record_snapshot(manifest.stats_log, entries, today, dataset, report)
            new_manifest = Manifest(entries, stats_log)
            self._commit(staged, new_manifest, [self.document_path(manifest.entries[i]) for i in report.removed])
        logger.info("synced %s: %s", dataset, report.counts())
        return report

    def _commit(self, staged: list[tuple[Path, bytes]], manifest: Manifest, obsolete: list[Path]) -> None:
        temps: list[tuple[str, Path]] = []
        try:
            for final, data in staged:
                final.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(prefix=f".{final.name}.", suffix=".tmp", dir=final.parent)
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                temps.append((tmp, final))
            manifest_bytes = manifest.to_json()
        except OSError as exc:
            for tmp, _ in temps:
                Path(tmp).unlink(missing_ok=True)
            raise RepositoryError(f"storage error, repository left unchanged: {exc}") from exc
        for tmp, final in temps:
            os.replace(tmp, final)
        _atomic_write(self.manifest_path, manifest_bytes)
        for path in obsolete:
            path.unlink(missing_ok=True)

    def export_stats_csv(self) -> bytes:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(STATS_HEADER)
        for snap in sorted(self.load_manifest().stats_log, key=lambda s: (s.date, s.dataset)):
            writer.writerow([getattr(snap, k) for k in STATS_HEADER])
        return buf.getvalue().encode("utf-8")

    def fsck(self) -> list[FsckIssue]:
        """Re-hash and re-count every stored document against the manifest."""
        manifest = self.load_manifest()
        issues = []
        known: set[Path] = set()
        for doc_id, entry in sorted(manifest.entries.items()):
            path = self.document_path(entry)
            known.add(path)
            try:
                data = path.read_bytes()
            except OSError as exc:
                issues.append(FsckIssue(doc_id, entry.filename, f"unreadable: {exc.strerror or exc}"))
                continue
            if content_hash(data) != entry.content_hash:
                issues.append(FsckIssue(doc_id, entry.filename, "content hash mismatch"))
                continue
            try:
                triples = count_triples(parse_annotation(data))
            except TouristLDError as exc:
                issues.append(FsckIssue(doc_id, entry.filename, f"unparseable: {exc}"))
                continue
            if triples != entry.triple_count:
                issues.append(FsckIssue(doc_id, entry.filename, f"triple count {triples} != {entry.triple_count}"))
        if self.root.is_dir():
            for path in sorted(self.root.glob("*/*.json")):
                if path not in known and not path.name.startswith("."):
                    issues.append(FsckIssue(None, str(path.relative_to(self.root)), "file not in manifest"))
        return issues


def _record_snapshot(
    log: list[StatsSnapshot],
    entries: dict[str, ManifestEntry],
    today: str,
    dataset: str,
    report: SyncReport,
) -> list[StatsSnapshot]:
    """Fold this run into the (date, dataset) snapshot; counts of the day accumulate."""
    live = [e for e in entries.values() if e.dataset == dataset]
    snap = StatsSnapshot(
        today,
        dataset,
        len(live),
        sum(e.triple_count for e in live),
        len(report.added),
        len(report.updated),
        len(report.removed),
    )
    out = []
    for old in log:
        if (old.date, old.dataset) == (today, dataset):
            snap = replace(
                snap, added=snap.added + old.added, updated=snap.updated + old.updated, removed=snap.removed + old.removed
            )
        else:
            out.append(old)
    out.append(snap)
    return sorted(out, key=lambda s: (s.date, s.dataset))


# -- manual annotations -----------------------------------------------------


@dataclass(frozen=True)
class ManualFile:
    """A hand-written annotation file; ``dataset`` may come from a ``<file>.meta`` sidecar."""

    name: str
    data: bytes
    dataset: str | None = None

    @classmethod
    def from_path(cls, path: str | os.PathLike) -> ManualFile:
        path = Path(path)
        dataset = None
        sidecar = path.with_name(path.name + ".meta")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            dataset = meta.get("dataset")
        return cls(str(path), path.read_bytes(), dataset)

    @property
    def stem(self) -> str:
        return Path(self.name).stem


def prepare_manual(
    files: Iterable[ManualFile],
    spec: DomainSpecification,
    vocabulary: Vocabulary,
    dataset: str | None = None,
) -> tuple[dict[str, list[AnnotationDocument]], list[Rejection]]:
    """Parse and validate manual files; returns accepted documents per dataset and rejections.

    Documents without ``@id`` are identified by their file stem.
    """
    accepted: dict[str, list[AnnotationDocument]] = defaultdict(list)
    rejected: list[Rejection] = []
    for f in files:
        target = dataset or f.dataset
        if not target:
            rejected.append(Rejection(f.name, "no dataset given (use a flag or a .meta sidecar)"))
            continue
        try:
            doc = parse_annotation(f.data)
        except TouristLDError as exc:
            rejected.append(Rejection(f.name, f"parse error: {exc}"))
            continue
        if doc.id is None:
            doc = doc.with_id(f.stem)
        result = validate_document(doc, spec, vocabulary)
        if not result.conforms:
            codes = ", ".join(sorted({v.code for v in result.violations}))
            rejected.append(Rejection(f.name, f"validation failed: {codes}", result))
            continue
        accepted[target].append(doc)
    return dict(accepted), rejected


def ingest_manual(
    repo: Repository,
    files: Iterable[ManualFile],
    spec: DomainSpecification,
    vocabulary: Vocabulary,
    dataset: str | None = None,
    mode: str = "incremental",
) -> SyncReport:
    """Validate and store manual annotations; invalid files are skipped and reported."""
    accepted, rejected = prepare_manual(files, spec, vocabulary, dataset)
    report = SyncReport(rejected=rejected)
    with repo.locked():
        for name in sorted(accepted):
            report = report.merge(repo.sync(accepted[name], name, mode=mode, origin="manual"))
    return report
