"""HTTP service exposing the analytics engine and feedback stores.

Every read endpoint returns canonical bytes so repeated calls are
byte-identical; reports are computed lazily and cached content-addressed on
(document hash, config hash). Mutating endpoints accept an Idempotency-Key
header and replay the original response on retry.

Auth is static bearer tokens with two roles (instructor, student). With no
tokens configured the service runs open, treating every caller as an
instructor; that mode is for local use and tests.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import feedback as feedback_mod
from .. import report as report_mod
from ..config import ANALYTIC_KINDS, EngineConfig
from ..model import (
    DocumentError,
    InvariantFault,
    SchemaFault,
    SyntaxFault,
    document_from_json,
    validate_version_chain,
)
from ..semantics import load_embeddings
from .schemas import (
    AnnotationRequest,
    AnnotationResponse,
    ContestRequest,
    ContestResponse,
    PutDocumentResponse,
    StatusActionRequest,
)
from .store import (
    ConflictError,
    DocumentStore,
    IdempotencyStore,
    NotFoundError,
    NotificationFeed,
    ReportCache,
)


@dataclass(frozen=True)
class ServiceConfig:
    listen: str = "127.0.0.1:8777"
    data_dir: str = "./studiolens-data"
    engine_config_path: str | None = None
    embeddings_path: str | None = None
    tokens: dict[str, str] = field(default_factory=dict)        # token -> user id
    roles: dict[str, str] = field(default_factory=dict)         # user id -> role
    instructor_only_actions: tuple[str, ...] = ("validate",)
    student_sees_cross_member: bool = False
    cors_origins: tuple[str, ...] = ("*",)

    def __post_init__(self):
        uncovered = [u for u in self.tokens.values() if u not in self.roles]
        if uncovered:
            raise ValueError(f"tokens map to users without roles: {uncovered}")

    @staticmethod
    def from_file(path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return ServiceConfig(
            listen=obj.get("listen", "127.0.0.1:8777"),
            data_dir=obj.get("data_dir", "./studiolens-data"),
            engine_config_path=obj.get("engine_config_path"),
            embeddings_path=obj.get("embeddings_path"),
            tokens=obj.get("tokens", {}),
            roles=obj.get("roles", {}),
            instructor_only_actions=tuple(obj.get("instructor_only_actions", ["validate"])),
            student_sees_cross_member=obj.get("student_sees_cross_member", False),
            cors_origins=tuple(obj.get("cors_origins", ["*"])),
        )


@dataclass(frozen=True)
class Caller:
    user_id: str
    role: str


def _error(status_code: int, error: str, detail: str = "") -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": error, "detail": detail})


class ApiError(Exception):
    def __init__(self, status_code: int, error: str, detail: str = ""):
        super().__init__(detail or error)
        self.status_code = status_code
        self.error = error
        self.detail = detail


def create_app(config: ServiceConfig) -> FastAPI:
    data_dir = Path(config.data_dir)
    documents = DocumentStore(data_dir / "documents")
    reports = ReportCache(data_dir / "reports")
    annotations = feedback_mod.AnnotationStore(data_dir / "annotations")
    contests = feedback_mod.ContestStore(data_dir / "contests")
    idempotency = IdempotencyStore(data_dir / "idempotency")
    notifications = NotificationFeed(data_dir / "notifications.ndjson")

    engine_config = (
        EngineConfig.from_file(config.engine_config_path)
        if config.engine_config_path
        else EngineConfig()
    )
    embeddings_path = config.embeddings_path or engine_config.embeddings_path
    embeddings = load_embeddings(embeddings_path) if embeddings_path else None

    app = FastAPI(title="studiolens", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.service_config = config
    app.state.engine_config = engine_config

    def caller_from(authorization: str | None = Header(default=None)) -> Caller:
        if not config.tokens:
            return Caller(user_id="anonymous", role="instructor")
        if not authorization or not authorization.startswith("Bearer "):
            raise ApiError(401, "unauthorized", "missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        user_id = config.tokens.get(token)
        if user_id is None:
            raise ApiError(401, "unauthorized", "unknown token")
        return Caller(user_id=user_id, role=config.roles[user_id])

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return _error(exc.status_code, exc.error, exc.detail)

    def _report_bytes_for(doc_id: str, version: int) -> bytes:
        doc_hash = documents.content_hash(doc_id, version)
        config_hash = engine_config.config_hash()
        cached = reports.get(doc_hash, config_hash)
        if cached is not None:
            return cached
        doc = documents.get(doc_id, version)
        payload = report_mod.report_bytes(report_mod.analyze(doc, engine_config, embeddings))
        reports.put(doc_hash, config_hash, payload)
        return payload

    def _report_for(doc_id: str, version: int) -> dict:
        return json.loads(_report_bytes_for(doc_id, version))

    def _refresh_touched(doc_id: str) -> None:
        """Move open annotations to touched when later edits hit their targets."""
        versions = documents.versions(doc_id)
        if len(versions) < 2:
            return
        chain = validate_version_chain(documents.chain(doc_id))
        stored = annotations.for_doc(doc_id)
        if not stored:
            return
        updated, events = feedback_mod.update_statuses(chain, stored)
        for before, after in zip(stored, updated):
            if before.status != after.status:
                annotations.put(after)
        for event in events:
            notifications.append(dict(event.to_json(), doc_id=doc_id))

    def _next_timestamp() -> str:
        now = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")
        existing = [r.timestamp for r in contests.all_records()]
        last = max(existing) if existing else ""
        if now > last:
            return now
        # Clock stalled or went backwards; nudge past the last record so
        # export order stays append order.
        base = _dt.datetime.strptime(last.rstrip("Z"), "%Y-%m-%dT%H:%M:%S.%f")
        return (base + _dt.timedelta(microseconds=1)).strftime("%Y-%m-%dT%H:%M:%S.%fZ")

    async def _idempotent(request: Request, key: str | None, handler):
        if key:
            stored = idempotency.get(key)
            if stored is not None:
                return Response(
                    content=stored["body"],
                    status_code=stored["status_code"],
                    media_type=stored["media_type"],
                )
        response = await handler()
        if key and response.status_code < 500:
            body = response.body.decode("utf-8") if isinstance(response.body, bytes) else str(response.body)
            idempotency.put(key, response.status_code, body, response.media_type or "application/json")
        return response

    @app.get("/health")
    def health():
        return {"status": "ok", "config_hash": engine_config.config_hash()}

    @app.get("/config")
    def get_config(_caller: Caller = Depends(caller_from)):
        return {"engine": engine_config.to_json(), "config_hash": engine_config.config_hash()}

    @app.post("/documents", response_model=PutDocumentResponse, status_code=201)
    async def put_document(
        request: Request,
        caller: Caller = Depends(caller_from),
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ):
        async def handler():
            raw = await request.body()
            try:
                obj = json.loads(raw.decode("utf-8"))
                doc = document_from_json(obj)
            except SyntaxFault as exc:
                return _error(400, "syntax", str(exc))
            except SchemaFault as exc:
                return _error(422, "schema", str(exc))
            except InvariantFault as exc:
                return _error(422, "invariant", str(exc))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                return _error(400, "syntax", str(exc))
            try:
                documents.put(doc)
            except ConflictError as exc:
                return _error(409, "conflict", str(exc))
            _refresh_touched(doc.doc_id)
            return JSONResponse(status_code=201, content={"doc_id": doc.doc_id, "version": doc.version})

        return await _idempotent(request, idempotency_key, handler)

    @app.get("/documents")
    def list_documents(_caller: Caller = Depends(caller_from)):
        return {doc_id: documents.versions(doc_id) for doc_id in documents.doc_ids()}

    @app.get("/documents/{doc_id}/versions/{version}")
    def get_document(doc_id: str, version: int, _caller: Caller = Depends(caller_from)):
        try:
            payload = documents.document_bytes(doc_id, version)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        return Response(content=payload, media_type="application/json")

    @app.get("/documents/{doc_id}/versions/{version}/report")
    def get_report(doc_id: str, version: int, caller: Caller = Depends(caller_from)):
        try:
            payload = _report_bytes_for(doc_id, version)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        if caller.role == "student" and not config.student_sees_cross_member:
            report = json.loads(payload)
            report["member_breakdown"] = {
                author: entry
                for author, entry in report["member_breakdown"].items()
                if author == caller.user_id
            }
            payload = report_mod.report_bytes(report)
        return Response(content=payload, media_type="application/json")

    @app.get("/documents/{doc_id}/versions/{version}/explanations/{analytic}")
    def get_explanation(
        doc_id: str,
        version: int,
        analytic: str,
        ref: str = Query(...),
        config_hash: str | None = Query(default=None),
        _caller: Caller = Depends(caller_from),
    ):
        if config_hash is not None and config_hash != engine_config.config_hash():
            raise ApiError(
                409, "stale_item_ref",
                f"report was computed with config {config_hash}, server now runs {engine_config.config_hash()}",
            )
        try:
            doc = documents.get(doc_id, version)
            report = _report_for(doc_id, version)
            explanation = report_mod.resolve_explanation(report, doc, analytic, ref)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        except report_mod.ExplanationError as exc:
            raise ApiError(404, "unknown_item_ref", str(exc))
        return Response(
            content=json.dumps(explanation, sort_keys=True, separators=(",", ":")),
            media_type="application/json",
        )

    @app.post("/annotations", response_model=AnnotationResponse, status_code=201)
    async def post_annotation(
        request: Request,
        body: AnnotationRequest,
        caller: Caller = Depends(caller_from),
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ):
        async def handler():
            if not documents.exists(body.doc_id, body.created_version):
                return _error(404, "not_found", f"unknown document {body.doc_id!r} version {body.created_version}")
            region = None
            if body.target_region is not None:
                from ..model import BBox
                region = BBox(body.target_region.x, body.target_region.y,
                              body.target_region.w, body.target_region.h)
            doc = documents.get(body.doc_id, body.created_version)
            unknown = [eid for eid in body.target_element_ids if doc.element_by_id(eid) is None]
            if unknown:
                return _error(422, "invariant", f"unknown target elements: {unknown}")
            try:
                annotation = feedback_mod.Annotation(
                    id=annotations.next_id(body.doc_id),
                    doc_id=body.doc_id,
                    created_version=body.created_version,
                    author_id=caller.user_id,
                    kind=body.kind,
                    body=body.body,
                    target_element_ids=tuple(body.target_element_ids),
                    target_region=region,
                    category=body.category,
                    flag=body.flag,
                    source_item_ref=body.source_item_ref,
                )
            except feedback_mod.FeedbackError as exc:
                return _error(422, "invariant", str(exc))
            annotations.put(annotation)
            return JSONResponse(status_code=201, content={"id": annotation.id, "status": annotation.status})

        return await _idempotent(request, idempotency_key, handler)

    @app.get("/documents/{doc_id}/annotations")
    def get_annotations(doc_id: str, _caller: Caller = Depends(caller_from)):
        return [a.to_json() for a in annotations.for_doc(doc_id)]

    @app.post("/status-actions", status_code=200)
    async def post_status_action(
        request: Request,
        body: StatusActionRequest,
        caller: Caller = Depends(caller_from),
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ):
        async def handler():
            if body.action in config.instructor_only_actions and caller.role != "instructor":
                return _error(403, "forbidden", f"action {body.action!r} requires the instructor role")
            stored = annotations.for_doc(body.doc_id)
            target = next((a for a in stored if a.id == body.annotation_id), None)
            if target is None:
                return _error(404, "not_found", f"unknown annotation {body.annotation_id!r}")
            try:
                chain_docs = documents.chain(body.doc_id)
                chain = validate_version_chain(chain_docs)
                action = feedback_mod.StatusAction(
                    annotation_id=body.annotation_id,
                    actor_id=caller.user_id,
                    role=caller.role,
                    action=body.action,
                    version=body.version,
                )
                updated, events = feedback_mod.update_statuses(chain, [target], diffs=[], actions=[action])
            except feedback_mod.TransitionError as exc:
                return _error(409, "invalid_transition", str(exc))
            except feedback_mod.FeedbackError as exc:
                return _error(422, "invariant", str(exc))
            annotations.put(updated[0])
            for event in events:
                notifications.append(dict(event.to_json(), doc_id=body.doc_id))
            return JSONResponse(status_code=200, content=updated[0].to_json())

        return await _idempotent(request, idempotency_key, handler)

    @app.post("/contests", response_model=ContestResponse, status_code=201)
    async def post_contest(
        request: Request,
        body: ContestRequest,
        caller: Caller = Depends(caller_from),
        idempotency_key: str | None = Header(default=None, alias="Idempotency-Key"),
    ):
        async def handler():
            if body.analytic not in ANALYTIC_KINDS:
                return _error(422, "invariant", f"unknown analytic {body.analytic!r}")
            computed = body.computed_value
            if computed is None:
                try:
                    report = _report_for(body.doc_id, body.version)
                except NotFoundError as exc:
                    return _error(404, "not_found", str(exc))
                entry = report["results"].get(body.analytic)
                computed = entry["score"] if entry else None
            elif not documents.exists(body.doc_id, body.version):
                return _error(404, "not_found", f"unknown document {body.doc_id!r} version {body.version}")
            try:
                record = feedback_mod.ContestRecord(
                    id=contests.next_id(),
                    doc_id=body.doc_id,
                    version=body.version,
                    analytic=body.analytic,
                    computed_value=computed,
                    verdict=body.verdict,
                    rationale=body.rationale,
                    author_id=caller.user_id,
                    timestamp=body.timestamp or _next_timestamp(),
                    user_value=body.user_value,
                    config_snapshot_ref=engine_config.config_hash(),
                )
                feedback_mod.record_contest(record, contests, report_exists=documents.exists)
            except feedback_mod.FeedbackError as exc:
                return _error(422, "invariant", str(exc))
            return JSONResponse(status_code=201, content={"id": record.id})

        return await _idempotent(request, idempotency_key, handler)

    @app.get("/documents/{doc_id}/diff")
    def get_diff(
        doc_id: str,
        from_version: int = Query(...),
        to_version: int = Query(...),
        _caller: Caller = Depends(caller_from),
    ):
        try:
            v_from = documents.get(doc_id, from_version)
            v_to = documents.get(doc_id, to_version)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        try:
            result = feedback_mod.diff(v_from, v_to)
        except feedback_mod.FeedbackError as exc:
            raise ApiError(422, "invariant", str(exc))
        return Response(
            content=json.dumps(result.to_json(), sort_keys=True, separators=(",", ":")),
            media_type="application/json",
        )

    @app.get("/documents/{doc_id}/feedback-graph")
    def get_feedback_graph(doc_id: str, _caller: Caller = Depends(caller_from)):
        chain_docs = documents.chain(doc_id)
        if not chain_docs:
            raise ApiError(404, "not_found", f"unknown document {doc_id!r}")
        chain = validate_version_chain(chain_docs)
        doc_reports = [_report_for(doc_id, v.version) for v in chain.versions]
        graph = feedback_mod.feedback_graph(chain, annotations.for_doc(doc_id), doc_reports)
        return Response(
            content=json.dumps(graph, sort_keys=True, separators=(",", ":")),
            media_type="application/json",
        )

    @app.get("/rollup")
    def get_rollup(
        recurrence_threshold: int = Query(default=2, ge=1),
        _caller: Caller = Depends(caller_from),
    ):
        all_reports = []
        annotations_by_doc = {}
        for doc_id in documents.doc_ids():
            for version in documents.versions(doc_id):
                all_reports.append(_report_for(doc_id, version))
            doc_annotations = annotations.for_doc(doc_id)
            if doc_annotations:
                annotations_by_doc[doc_id] = doc_annotations
        result = report_mod.rollup(all_reports, annotations_by_doc, recurrence_threshold)
        return Response(
            content=json.dumps(result, sort_keys=True, separators=(",", ":")),
            media_type="application/json",
        )

    @app.get("/labels/export")
    def get_label_export(
        doc_id: str | None = Query(default=None),
        analytic: str | None = Query(default=None),
        _caller: Caller = Depends(caller_from),
    ):
        lines = list(feedback_mod.export_labels(contests, doc_id=doc_id, analytic=analytic))
        body = "\n".join(lines) + ("\n" if lines else "")
        return Response(content=body, media_type="application/x-ndjson")

    @app.get("/notifications")
    def get_notifications(since: int = Query(default=0, ge=0), _caller: Caller = Depends(caller_from)):
        return notifications.since(since)

    return app
