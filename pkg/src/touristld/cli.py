"""Command-line entry point: ``touristld run|validate|stats|ingest|embed|fsck``.

Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 validation violations.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Callable, Iterable

import click

from . import __version__
from ._jsonio import read_ref
from .annotation import AnnotationDocument, parse_annotation
from .domspec import DomainSpecification, parse_spec
from .embedder import inject, load_page_map, serve
from .errors import ConfigError, TouristLDError
from .mapping import MappingDocument, MappingStats, execute_mapping, mapping_stats, parse_mapping, render_mapping_table
from .repository import MODES, ManualFile, Rejection, Repository, SyncReport, prepare_manual, utc_today
from .source import PipelineConfig, SourceConfig, fetch, load_pipeline_config
from .validator import ViolationReport, validate_corpus, validate_document
from .vocabulary import Vocabulary, load_vocabulary
from .xmlpath import parse_xml

logger = logging.getLogger("touristld")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_INVALID = 3

DEFAULT_VOCABULARY = "package:vocabulary.json"
DEFAULT_SPEC = "package:specs/tourism.dspec.json"


# -- pipeline ---------------------------------------------------------------


@dataclass
class RunResult:
    reports: dict[str, SyncReport] = field(default_factory=dict)
    stats: dict[str, MappingStats] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    rejected: list[Rejection] = field(default_factory=list)

    @property
    def total(self) -> SyncReport:
        out = SyncReport()
        for name in sorted(self.reports):
            out = out.merge(self.reports[name])
        return out

    @property
    def exit_code(self) -> int:
        if self.errors:
            return EXIT_ERROR
        return EXIT_INVALID if self.rejected else EXIT_OK

    def to_dict(self) -> dict:
        d: dict = {
            "datasets": {k: self.reports[k].to_dict() for k in sorted(self.reports)},
            "mappingStats": [{"dataset": k, **s.counts()} for k, s in self.stats.items()],
            "total": self.total.counts(),
        }
        if self.errors:
            d["errors"] = self.errors
        if self.rejected:
            d["rejected"] = [{"file": r.name, "reason": r.reason} for r in self.rejected]
        return d


def load_schema_pair(vocabulary_ref: str, spec_ref: str) -> tuple[Vocabulary, DomainSpecification]:
    vocabulary = load_vocabulary(read_ref(vocabulary_ref))
    return vocabulary, parse_spec(read_ref(spec_ref), vocabulary)


def _manual_files(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        return sorted(p.glob("*.json"))
    if p.is_file():
        return [p]
    raise ConfigError(f"manual annotation path {path} does not exist")


def _source_dataset(src: SourceConfig, mapping: MappingDocument) -> str:
    return src.dataset or mapping.dataset


def run_pipeline(
    config: PipelineConfig,
    mode: str = "incremental",
    dataset: str | None = None,
    clock: Callable[[], date] = utc_today,
) -> RunResult:
    """Fetch, map and validate every source, then sync; nothing is stored if any step fails."""
    vocabulary, spec = load_schema_pair(config.vocabulary, config.spec)
    # fail fast: every mapping and manual path must load before any fetch
    mappings = {src.name: parse_mapping(read_ref(src.mapping), spec, vocabulary) for src in config.sources}
    sources = [s for s in config.sources if dataset is None or _source_dataset(s, mappings[s.name]) == dataset]
    manual = [m for m in config.manual if dataset is None or m.dataset == dataset]
    manual_files = {m: _manual_files(m.path) for m in manual}

    result = RunResult()
    automatic: dict[str, list[AnnotationDocument]] = defaultdict(list)
    for src in sources:
        mapping = mappings[src.name]
        name = _source_dataset(src, mapping)
        fetched = fetch(src)
        result.errors.extend(str(e) for e in fetched.errors)
        trees = []
        for payload in fetched.payloads:
            try:
                tree = parse_xml(payload.data)
                docs = execute_mapping(mapping, tree)
            except TouristLDError as exc:
                result.errors.append(f"{payload.source_tag}: {exc}")
                continue
            trees.append(tree)
            for doc in docs:
                report = validate_document(doc, spec, vocabulary)
                if report.conforms:
                    automatic[name].append(doc)
                else:
                    result.errors.append(f"{payload.source_tag}: {_describe(report)}")
        stats = mapping_stats(mapping, trees)
        result.stats[name] = result.stats[name].merge(stats) if name in result.stats else stats

    manual_docs: dict[str, list[AnnotationDocument]] = defaultdict(list)
    for m, paths in manual_files.items():
        accepted, rejected = prepare_manual((ManualFile.from_path(p) for p in paths), spec, vocabulary, m.dataset)
        result.rejected.extend(rejected)
        for name, docs in accepted.items():
            manual_docs[name].extend(docs)

    if result.errors or result.rejected:
        return result

    repo = Repository(config.repository, clock)
    with repo.locked():
        for name in sorted({_source_dataset(s, mappings[s.name]) for s in sources}):
            result.reports[name] = repo.sync(automatic[name], name, mode=mode, origin="automatic")
        for name in sorted({m.dataset for m in manual}):
            report = repo.sync(manual_docs[name], name, mode=mode, origin="manual")
            result.reports[name] = result.reports[name].merge(report) if name in result.reports else report
    return result


def _describe(report: ViolationReport) -> str:
    parts = [f"{v.code} at {v.path or '/'}" for v in report.violations]
    return f"{report.document_id}: " + ", ".join(parts)


# -- click plumbing ---------------------------------------------------------


@dataclass
class Context:
    config_path: str | None
    as_json: bool
    quiet: bool
    today: date | None

    @functools.cached_property
    def config(self) -> PipelineConfig:
        if self.config_path is None:
            raise click.UsageError("this command needs --config or explicit paths")
        return load_pipeline_config(self.config_path)

    def clock(self) -> date:
        return self.today or utc_today()

    def say(self, text: str = "") -> None:
        if not self.quiet:
            click.echo(text)

    def emit(self, data: object) -> None:
        click.echo(json.dumps(data, ensure_ascii=False, sort_keys=True))

    def repository(self, repo: str | None) -> str:
        return repo or self.config.repository

    def schema(self, vocab: str | None, spec: str | None) -> tuple[Vocabulary, DomainSpecification]:
        if self.config_path is not None:
            vocab = vocab or self.config.vocabulary
            spec = spec or self.config.spec
        return load_schema_pair(vocab or DEFAULT_VOCABULARY, spec or DEFAULT_SPEC)


pass_ctx = click.make_pass_decorator(Context)


def handle_errors(fn: Callable) -> Callable:
    """Turn library errors into exit code 1 with a one-line message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (TouristLDError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_ERROR)

    return wrapper


def _parse_today(ctx: click.Context, param: click.Parameter, value: str | None) -> date | None:
    if value is None:
        return None
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise click.BadParameter("expected YYYY-MM-DD") from None


@click.group()
@click.version_option(__version__, prog_name="touristld")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Pipeline config (JSON).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--quiet", "-q", is_flag=True, help="Only errors.")
@click.option("--today", callback=_parse_today, metavar="YYYY-MM-DD", help="Override the date used for stats.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, as_json: bool, quiet: bool, today: date | None) -> None:
    """Generate, validate, store and embed schema.org annotations."""
    logging.basicConfig(level=logging.ERROR if quiet else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = Context(config_path, as_json, quiet, today)


@main.command()
@click.option("--mode", type=click.Choice(MODES), default="incremental", show_default=True)
@click.option("--dataset", help="Only run sources and manual entries of this dataset.")
@pass_ctx
@handle_errors
def run(ctx: Context, mode: str, dataset: str | None) -> None:
    """Fetch, map, validate and sync every configured source."""
    result = run_pipeline(ctx.config, mode=mode, dataset=dataset, clock=ctx.clock)
    for err in result.errors:
        click.echo(f"error: {err}", err=True)
    for r in result.rejected:
        click.echo(f"rejected: {r.name}: {r.reason}", err=True)
    if ctx.as_json:
        ctx.emit(result.to_dict())
    elif result.reports:
        for name in sorted(result.reports):
            ctx.say(_counts_line(name, result.reports[name]))
        ctx.say(_counts_line("total", result.total))
        if result.stats:
            ctx.say()
            ctx.say(render_mapping_table(list(result.stats.items())))
    if result.exit_code and not ctx.as_json:
        click.echo("run aborted; repository left unchanged", err=True)
    sys.exit(result.exit_code)


def _counts_line(name: str, report: SyncReport) -> str:
    counts = report.counts()
    return f"{name}: " + ", ".join(f"{k} {counts[k]}" for k in ("added", "updated", "unchanged", "removed"))


@main.command()
@click.argument("target", type=click.Path(exists=True))
@click.option("--spec", help="Domain specification (path or package:...).")
@click.option("--vocab", help="Vocabulary (path or package:...).")
@pass_ctx
@handle_errors
def validate(ctx: Context, target: str, spec: str | None, vocab: str | None) -> None:
    """Validate one annotation file or a whole repository directory."""
    vocabulary, dspec = ctx.schema(vocab, spec)
    path = Path(target)
    if path.is_dir():
        corpus = validate_corpus(path, dspec, vocabulary)
        reports, unreadable, summary = corpus.reports, corpus.unreadable, corpus.summary()
    else:
        try:
            doc = parse_annotation(path.read_bytes())
        except TouristLDError as exc:
            reports, unreadable = [], [(str(path), str(exc))]
        else:
            reports, unreadable = [validate_document(doc, dspec, vocabulary, doc.id or path.stem)], []
        valid = sum(r.conforms for r in reports)
        summary = {"documentsChecked": 1, "documentsValid": valid, "unreadable": len(unreadable)}
    ok = not unreadable and all(r.conforms for r in reports)
    if ctx.as_json:
        for r in reports:
            click.echo(r.to_json())
        for name, reason in unreadable:
            ctx.emit({"file": name, "error": reason})
        ctx.emit({"summary": summary})
    else:
        for r in reports:
            for v in r.violations:
                ctx.say(f"{r.document_id}: {v.code} at {v.path or '/'}: {v.message}")
        for name, reason in unreadable:
            ctx.say(f"{name}: unreadable: {reason}")
        ctx.say(f"{summary['documentsValid']}/{summary['documentsChecked']} documents valid")
    sys.exit(EXIT_OK if ok else EXIT_INVALID)


@main.command()
@click.option("--repo", help="Repository directory (defaults to the config's).")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False, allow_dash=True), help="Write the CSV here ('-' for stdout).")
@pass_ctx
@handle_errors
def stats(ctx: Context, repo: str | None, csv_out: str | None) -> None:
    """Print the per-dataset statistics history."""
    repository = Repository(ctx.repository(repo))
    data = repository.export_stats_csv()
    if csv_out == "-":
        click.echo(data.decode("utf-8"), nl=False)
        return
    if csv_out:
        Path(csv_out).write_bytes(data)
    snapshots = sorted(repository.load_manifest().stats_log, key=lambda s: (s.date, s.dataset))
    if ctx.as_json:
        ctx.emit([s.to_dict() for s in snapshots])
        return
    rows = data.decode("utf-8").splitlines()
    table = [r.split(",") for r in rows]
    widths = [max(len(r[c]) for r in table) for c in range(len(table[0]))]
    for r in table:
        ctx.say("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())


def _expand(paths: Iterable[str]) -> list[Path]:
    out: list[Path] = []
    for p in map(Path, paths):
        out.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    return out


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--repo", help="Repository directory (defaults to the config's).")
@click.option("--spec", help="Domain specification (path or package:...).")
@click.option("--vocab", help="Vocabulary (path or package:...).")
@click.option("--dataset", help="Dataset for every file; otherwise read from <file>.meta.")
@click.option("--mode", type=click.Choice(MODES), default="incremental", show_default=True)
@pass_ctx
@handle_errors
def ingest(ctx: Context, files: tuple[str, ...], repo: str | None, spec: str | None, vocab: str | None, dataset: str | None, mode: str) -> None:
    """Validate and store hand-written annotation files."""
    vocabulary, dspec = ctx.schema(vocab, spec)
    repository = Repository(ctx.repository(repo), ctx.clock)
    manual = [ManualFile.from_path(p) for p in _expand(files)]
    accepted, rejected = prepare_manual(manual, dspec, vocabulary, dataset)
    report = SyncReport(rejected=rejected)
    with repository.locked():
        for name in sorted(accepted):
            report = report.merge(repository.sync(accepted[name], name, mode=mode, origin="manual"))
    if ctx.as_json:
        ctx.emit(report.to_dict())
    else:
        ctx.say(_counts_line("ingest", report))
        for r in rejected:
            ctx.say(f"rejected {r.name}: {r.reason}")
    sys.exit(EXIT_INVALID if rejected else EXIT_OK)


@main.command()
@click.argument("pages", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--repo", help="Repository directory (defaults to the config's).")
@click.option("--map", "page_map_path", type=click.Path(dir_okay=False), help="Page map (defaults to the config's).")
@click.option("--key", "keys", multiple=True, help="Page key per HTML file, in order; one key applies to all.")
@click.option("--out-dir", type=click.Path(file_okay=False), help="Write results here; stdout for a single page otherwise.")
@click.option("--serve", "serve_mode", is_flag=True, help="Run the annotation service instead.")
@click.option("--bind", default="127.0.0.1:8080", show_default=True, help="host:port for --serve.")
@pass_ctx
@handle_errors
def embed(
    ctx: Context,
    pages: tuple[str, ...],
    repo: str | None,
    page_map_path: str | None,
    keys: tuple[str, ...],
    out_dir: str | None,
    serve_mode: bool,
    bind: str,
) -> None:
    """Inject annotations into HTML pages, or serve them over HTTP."""
    repo_root = ctx.repository(repo)
    if page_map_path is None:
        page_map_path = ctx.config.page_map
        if page_map_path is None:
            raise click.UsageError("no page map: pass --map or set pageMap in the config")
    if serve_mode:
        try:
            server = serve(repo_root, page_map_path, bind)
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--bind") from None
        host, port = server.server_address[:2]
        ctx.say(f"serving annotations on http://{host}:{port}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return

    if not pages:
        raise click.UsageError("give HTML files with --key, or --serve")
    if len(keys) not in (1, len(pages)):
        raise click.UsageError("pass one --key, or one per HTML file")
    if out_dir is None and len(pages) > 1:
        raise click.UsageError("--out-dir is required for several pages")

    repository = Repository(repo_root)
    manifest = repository.load_manifest()
    by_filename = manifest.by_filename()
    page_map = load_page_map(Path(page_map_path).read_bytes(), by_filename)
    pairs = zip(pages, keys if len(keys) == len(pages) else keys * len(pages))
    failed = False
    for page, key in pairs:
        filename = page_map.lookup(key)
        if filename is None:
            click.echo(f"error: {page}: no annotation mapped for key {key!r}", err=True)
            failed = True
            continue
        doc_id = by_filename[filename]
        annotation = repository.read_document_bytes(doc_id, manifest)
        try:
            html = inject(Path(page).read_bytes(), annotation, doc_id)
        except TouristLDError as exc:
            click.echo(f"error: {page}: {exc}", err=True)
            failed = True
            continue
        if out_dir is None:
            sys.stdout.buffer.write(html)
            sys.stdout.flush()
        else:
            target = Path(out_dir) / Path(page).name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(html)
            ctx.say(f"{page} -> {target} ({doc_id})")
    sys.exit(EXIT_ERROR if failed else EXIT_OK)


@main.command()
@click.option("--repo", help="Repository directory (defaults to the config's).")
@pass_ctx
@handle_errors
def fsck(ctx: Context, repo: str | None) -> None:
    """Re-hash and re-count every stored document against the manifest."""
    issues = Repository(ctx.repository(repo)).fsck()
    if ctx.as_json:
        ctx.emit({"ok": not issues, "issues": [{"documentId": i.document_id, "filename": i.filename, "problem": i.problem} for i in issues]})
    else:
        for issue in issues:
            click.echo(str(issue), err=True)
        ctx.say("ok" if not issues else f"{len(issues)} problem(s)")
    sys.exit(EXIT_ERROR if issues else EXIT_OK)


if __name__ == "__main__":  # pragma: no cover
    main()
