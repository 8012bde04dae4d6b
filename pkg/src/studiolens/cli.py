"""Command-line client: analyze documents, explain findings, diff versions,
roll up courses, export labels, and run the service.

Output is JSON first (canonical bytes, identical to the service's) with an
optional table mode for humans. Exit codes: 0 ok, 2 parse error, 3
validation error, 4 not found, 1 anything else.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import feedback as feedback_mod
from . import report as report_mod
from .config import EngineConfig
from .model import (
    DocumentError,
    InvariantFault,
    SchemaFault,
    SyntaxFault,
    parse_document,
    parse_process_log,
)
from .semantics import load_embeddings

EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NOT_FOUND = 4

CONFIG_ENV_VAR = "STUDIOLENS_CONFIG"


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _load_engine_config(config_path: str | None) -> EngineConfig:
    path = config_path or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return EngineConfig()
    if not Path(path).exists():
        _fail(EXIT_NOT_FOUND, f"config file not found: {path}")
    return EngineConfig.from_file(path)


def _read_document(path: str):
    p = Path(path)
    if not p.exists():
        _fail(EXIT_NOT_FOUND, f"document file not found: {path}")
    try:
        return parse_document(p.read_bytes())
    except SyntaxFault as exc:
        _fail(EXIT_PARSE, f"parse error: {exc}")
    except (SchemaFault, InvariantFault) as exc:
        _fail(EXIT_VALIDATION, f"validation error: {exc}")


def _load_table(path: str):
    table = load_embeddings(path)
    if table.duplicate_count:
        click.echo(
            f"warning: {table.duplicate_count} duplicate term(s) in {path}; last occurrence wins",
            err=True,
        )
    return table


def _emit(payload: str, out: str | None):
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    else:
        click.echo(payload, nl=False)
        if not payload.endswith("\n"):
            click.echo()


def _report_table(report: dict) -> str:
    lines = [f"document {report['doc_id']} v{report['version']}  (config {report['config_hash']})"]
    lines.append(f"{'analytic':<26} {'score':>10}  findings")
    for kind, entry in sorted(report["results"].items()):
        payload = entry["payload"]
        n_findings = len(
            payload.get("findings", [])
            or payload.get("imbalance_findings", [])
            or payload.get("loud_area_findings", [])
        )
        lines.append(f"{kind:<26} {entry['score']:>10.3g}  {n_findings}")
    for warning in report.get("warnings", []):
        lines.append(f"warning: {warning}")
    return "\n".join(lines) + "\n"


@click.group()
def main():
    """Design-creativity analytics over versioned design documents."""


@main.command()
@click.argument("document", type=str)
@click.option("--config", "config_path", type=str, default=None, help="Engine config JSON path.")
@click.option("--embeddings", "embeddings_path", type=str, default=None, help="Word-vector file.")
@click.option("--process-log", "process_log", type=str, default=None, help="NDJSON process event log.")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="json")
@click.option("--pretty", is_flag=True, help="Indent JSON output.")
@click.option("--out", type=str, default=None, help="Write output to a file.")
def analyze(document, config_path, embeddings_path, process_log, fmt, pretty, out):
    """Run the full analytic suite over DOCUMENT."""
    doc = _read_document(document)
    config = _load_engine_config(config_path)
    embeddings = None
    path = embeddings_path or config.embeddings_path
    if path:
        if not Path(path).exists():
            _fail(EXIT_NOT_FOUND, f"embeddings file not found: {path}")
        embeddings = _load_table(path)
    events = None
    if process_log:
        if not Path(process_log).exists():
            _fail(EXIT_NOT_FOUND, f"process log not found: {process_log}")
        events = parse_process_log(Path(process_log).read_bytes())
    try:
        report = report_mod.analyze(doc, config, embeddings, events)
    except report_mod.ReportValidationError as exc:
        _fail(EXIT_VALIDATION, f"report validation failed: {exc}")
    if fmt == "table":
        _emit(_report_table(report), out)
    elif pretty:
        _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", out)
    else:
        _emit(report_mod.report_bytes(report).decode("utf-8"), out)


@main.command()
@click.argument("document", type=str)
@click.argument("analytic", type=str)
@click.argument("ref", type=str)
@click.option("--config", "config_path", type=str, default=None)
@click.option("--embeddings", "embeddings_path", type=str, default=None)
@click.option("--pretty", is_flag=True)
@click.option("--out", type=str, default=None)
def explain(document, analytic, ref, config_path, embeddings_path, pretty, out):
    """Resolve an item REF from ANALYTIC into element ids and geometry."""
    doc = _read_document(document)
    config = _load_engine_config(config_path)
    embeddings = None
    path = embeddings_path or config.embeddings_path
    if path and Path(path).exists():
        embeddings = _load_table(path)
    report = report_mod.analyze(doc, config, embeddings)
    try:
        explanation = report_mod.resolve_explanation(report, doc, analytic, ref)
    except report_mod.ExplanationError as exc:
        _fail(EXIT_NOT_FOUND, f"unknown item: {exc}")
    indent = 2 if pretty else None
    _emit(json.dumps(explanation, sort_keys=True, indent=indent,
                     separators=None if pretty else (",", ":")) + "\n", out)


@main.command("diff")
@click.argument("from_doc", type=str)
@click.argument("to_doc", type=str)
@click.option("--pretty", is_flag=True)
@click.option("--out", type=str, default=None)
def diff_cmd(from_doc, to_doc, pretty, out):
    """Element-level diff between two versions of a document."""
    v_from = _read_document(from_doc)
    v_to = _read_document(to_doc)
    if v_from.doc_id == v_to.doc_id and v_from.version == v_to.version:
        # Same version twice; an identical file is an empty diff.
        if v_from.to_json() != v_to.to_json():
            _fail(EXIT_VALIDATION, "same version number but different content")
        result = feedback_mod.VersionDiff(
            doc_id=v_from.doc_id, from_version=v_from.version,
            to_version=v_to.version, added=(), removed=(), modified=(),
        )
    else:
        try:
            result = feedback_mod.diff(v_from, v_to)
        except feedback_mod.FeedbackError as exc:
            _fail(EXIT_VALIDATION, f"diff error: {exc}")
    indent = 2 if pretty else None
    _emit(json.dumps(result.to_json(), sort_keys=True, indent=indent,
                     separators=None if pretty else (",", ":")) + "\n", out)


@main.command()
@click.argument("document", type=str)
def validate(document):
    """Parse and validate DOCUMENT; report the first problem found."""
    _read_document(document)
    click.echo("ok")


@main.command()
@click.argument("reports", type=str, nargs=-1, required=True)
@click.option("--annotations-dir", type=str, default=None,
              help="Annotation store directory to fold into the rollup.")
@click.option("--recurrence-threshold", type=int, default=2)
@click.option("--pretty", is_flag=True)
@click.option("--out", type=str, default=None)
def rollup(reports, annotations_dir, recurrence_threshold, pretty, out):
    """Aggregate report files at student, team, and course levels."""
    loaded = []
    for path in reports:
        p = Path(path)
        if not p.exists():
            _fail(EXIT_NOT_FOUND, f"report file not found: {path}")
        try:
            loaded.append(json.loads(p.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            _fail(EXIT_PARSE, f"bad report JSON in {path}: {exc}")
    annotations_by_doc = {}
    if annotations_dir:
        store = feedback_mod.AnnotationStore(annotations_dir)
        for doc_id in store.doc_ids():
            annotations_by_doc[doc_id] = store.for_doc(doc_id)
    result = report_mod.rollup(loaded, annotations_by_doc, recurrence_threshold)
    indent = 2 if pretty else None
    _emit(json.dumps(result, sort_keys=True, indent=indent,
                     separators=None if pretty else (",", ":")) + "\n", out)


@main.command("export-labels")
@click.option("--data-dir", type=str, required=True, help="Service data directory.")
@click.option("--doc-id", type=str, default=None)
@click.option("--analytic", type=str, default=None)
@click.option("--out", type=str, default=None)
def export_labels(data_dir, doc_id, analytic, out):
    """Stream stored contest records as labeled data, one JSON per line."""
    contests_dir = Path(data_dir) / "contests"
    store = feedback_mod.ContestStore(contests_dir)
    lines = list(feedback_mod.export_labels(store, doc_id=doc_id, analytic=analytic))
    payload = "\n".join(lines) + ("\n" if lines else "")
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    else:
        click.echo(payload, nl=False)


@main.command()
@click.option("--service-config", type=str, default=None, help="Service config JSON path.")
@click.option("--listen", type=str, default=None, help="host:port override.")
@click.option("--data-dir", type=str, default=None)
@click.option("--config", "engine_config_path", type=str, default=None)
@click.option("--embeddings", type=str, default=None)
def serve(service_config, listen, data_dir, engine_config_path, embeddings):
    """Run the analytics service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    if service_config:
        cfg = ServiceConfig.from_file(service_config)
    else:
        cfg = ServiceConfig()
    overrides = {}
    if listen:
        overrides["listen"] = listen
    if data_dir:
        overrides["data_dir"] = data_dir
    if engine_config_path:
        overrides["engine_config_path"] = engine_config_path
    if embeddings:
        overrides["embeddings_path"] = embeddings
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    host, _, port = cfg.listen.partition(":")
    uvicorn.run(create_app(cfg), host=host or "127.0.0.1", port=int(port or 8777))


if __name__ == "__main__":
    main()
