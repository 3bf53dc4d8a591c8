"""HTTP facade over the store and governance engine.

Agents submit candidates and read scoped views; operators work the
review queue, decide, and supersede; anyone can inspect lineage and the
governance metrics. Responses are canonical JSON (sorted keys, compact)
so clients can re-verify content hashes, and no endpoint ever rewrites
an existing log line.

Authentication is deliberately minimal: agents identify with the
X-Agent-Id header, operators with one static bearer token.
"""

from __future__ import annotations

import os
from datetime import datetime, timezone
from typing import Any, Optional

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .canonical import canonical_dumps, parse_timestamp
from .engine import GovernanceEngine, utc_clock
from .errors import (
    BoundaryViolation,
    ConfigError,
    ConflictError,
    GovMemError,
    NotFoundError,
    PreconditionError,
    ValidationError,
)
from .fixtures import fixture_counts
from .metrics import provenance_fidelity, selection_traceability
from .model import EvidenceRef, MemoryKind, MemoryLayer, MemoryRecord
from .store import StoreHandle

DEFAULT_PAGE_SIZE = 500
MAX_PAGE_SIZE = 1000

_STATUS_BY_CODE = {
    "validation": 400,
    "not_found": 404,
    "conflict": 409,
    "boundary_violation": 403,
    "precondition": 412,
    "config": 500,
}


def _error_response(exc: GovMemError, status: Optional[int] = None) -> Response:
    body: dict[str, Any] = {"code": exc.code, "message": str(exc)}
    if isinstance(exc, ValidationError) and exc.violations:
        body["detail"] = {"violations": exc.violations}
    return _canonical_response(body, status or _STATUS_BY_CODE.get(exc.code, 500))


def _canonical_response(payload: Any, status: int = 200) -> Response:
    return Response(
        content=canonical_dumps(payload) + "\n",
        status_code=status,
        media_type="application/json",
    )


def _record_out(record: MemoryRecord) -> dict[str, Any]:
    return record.to_dict()


class CandidateIn(BaseModel):
    payload: dict[str, Any]
    kind: str
    function_tag: str
    evidence: list[dict[str, Any]] = Field(default_factory=list)
    resource_id: Optional[str] = None
    project_id: Optional[str] = None
    ttl_rounds: Optional[int] = None


class DecisionIn(BaseModel):
    candidate_id: str
    outcome: str
    note: str = ""


class SupersedeIn(BaseModel):
    resource_id: str
    new_payload: dict[str, Any]
    evidence: list[dict[str, Any]] = Field(default_factory=list)
    note: str = ""


def create_app(
    store_root: str | os.PathLike,
    operator_token: Optional[str] = None,
    engine: Optional[GovernanceEngine] = None,
) -> FastAPI:
    """Build the service over one store root (creating it if needed)."""
    if engine is None:
        store = StoreHandle(store_root, create=True)
        engine = GovernanceEngine(store)
    token = operator_token or os.environ.get("GOVMEM_OPERATOR_TOKEN") or "operator-token"

    app = FastAPI(title="govmem", version="0.1.0")
    app.state.engine = engine
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_operator(authorization: str = Header(default="")) -> None:
        if authorization != f"Bearer {token}":
            raise PermissionError("operator token required")

    @app.exception_handler(GovMemError)
    async def _domain_error(request: Request, exc: GovMemError) -> Response:
        return _error_response(exc)

    @app.exception_handler(PermissionError)
    async def _token_error(request: Request, exc: PermissionError) -> Response:
        return _canonical_response(
            {"code": "boundary_violation", "message": str(exc)}, 401
        )

    @app.post("/candidates")
    def post_candidate(
        body: CandidateIn, x_agent_id: str = Header(default="")
    ) -> Response:
        if not x_agent_id:
            return _canonical_response(
                {"code": "validation", "message": "X-Agent-Id header required"}, 400
            )
        if not engine.is_registered(x_agent_id) and x_agent_id != engine.config.ratifier:
            return _canonical_response(
                {
                    "code": "boundary_violation",
                    "message": f"agent {x_agent_id!r} is not registered",
                },
                401,
            )
        try:
            kind = MemoryKind(body.kind)
            layer = MemoryLayer(body.function_tag)
            evidence = [EvidenceRef.from_dict(e) for e in body.evidence]
        except (ValueError, KeyError) as exc:
            return _canonical_response(
                {"code": "validation", "message": f"malformed field: {exc}"}, 400
            )
        try:
            record = engine.submit_candidate(
                payload=body.payload,
                kind=kind,
                author=x_agent_id,
                function_tag=layer,
                evidence=evidence,
                resource_id=body.resource_id,
                project_id=body.project_id,
                ttl_rounds=body.ttl_rounds,
            )
        except PreconditionError as exc:
            # submission preconditions are client errors, not state conflicts
            return _error_response(exc, status=400)
        return _canonical_response(_record_out(record), 201)

    @app.get("/memories")
    def get_memories(
        layer: str = "shared_institutional",
        status: Optional[str] = None,
        resource_id: Optional[str] = None,
        kind: Optional[str] = None,
        cursor: int = 0,
        limit: int = DEFAULT_PAGE_SIZE,
        x_agent_id: str = Header(default=""),
    ) -> Response:
        filters: dict[str, Any] = {}
        if status is not None:
            filters["status"] = status
        if resource_id is not None:
            filters["resource_id"] = resource_id
        if kind is not None:
            filters["kind"] = kind
        records = engine.store.read_scoped(
            x_agent_id, MemoryLayer(layer), filters, now=utc_clock()
        )
        limit = max(1, min(limit, MAX_PAGE_SIZE))
        cursor = max(0, cursor)
        page = records[cursor : cursor + limit]
        next_cursor = cursor + limit if cursor + limit < len(records) else None
        return _canonical_response(
            {
                "records": [_record_out(r) for r in page],
                "next_cursor": next_cursor,
                "total": len(records),
            }
        )

    @app.get("/review-queue")
    def review_queue(_: None = Depends(require_operator)) -> Response:
        now = datetime.now(timezone.utc)
        entries = []
        for entry in engine.queue_view():
            age = 0
            if entry["enqueued_at"]:
                age = max(
                    0, int((now - parse_timestamp(entry["enqueued_at"])).total_seconds())
                )
            resolved = []
            for ref in entry["evidence"]:
                summary = ref.get("note") or ref["value"]
                if ref["kind"] == "record_id" and engine.store.has(ref["value"]):
                    cited = engine.store.get(ref["value"])
                    summary = f"{cited.kind.value} {cited.resource_id}"
                resolved.append({**ref, "summary": summary})
            entries.append(
                {
                    "candidate_id": entry["candidate_id"],
                    "kind": entry["kind"],
                    "resource_id": entry["resource_id"],
                    "payload": entry["payload"],
                    "drafted_by": entry["drafted_by"],
                    "evidence": resolved,
                    "enqueued_at": entry["enqueued_at"],
                    "age_seconds": age,
                }
            )
        return _canonical_response({"entries": entries})

    @app.post("/decisions")
    def post_decision(
        body: DecisionIn, _: None = Depends(require_operator)
    ) -> Response:
        record = engine.apply_decision(
            body.candidate_id,
            body.outcome,
            ratifier=engine.config.ratifier,
            note=body.note,
        )
        return _canonical_response(_record_out(record))

    @app.post("/supersede")
    def post_supersede(
        body: SupersedeIn, _: None = Depends(require_operator)
    ) -> Response:
        if engine.store.active_version(body.resource_id) is None:
            known = body.resource_id in engine.store.resources()
            if not known:
                raise NotFoundError(f"unknown resource {body.resource_id!r}")
        record = engine.supersede(
            body.resource_id,
            body.new_payload,
            evidence=[EvidenceRef.from_dict(e) for e in body.evidence],
            author=engine.config.ratifier,
            note=body.note,
        )
        return _canonical_response(_record_out(record))

    @app.get("/lineage/{resource_id}")
    def get_lineage(resource_id: str) -> Response:
        chain = engine.store.lineage(resource_id).to_dict()
        for version in chain["versions"]:
            record = engine.store.get(version["id"])
            version["supersedes"] = record.provenance.supersedes
        return _canonical_response(chain)

    @app.get("/metrics")
    def get_metrics() -> Response:
        store = engine.store
        now = datetime.now(timezone.utc)
        max_age = 0
        for _, enqueued_at in engine.queue.entries():
            if enqueued_at:
                age = int((now - parse_timestamp(enqueued_at)).total_seconds())
                max_age = max(max_age, age)
        snapshot = {
            "provenance_fidelity": provenance_fidelity(store),
            "selection_traceability": selection_traceability(store),
            "status_counts": store.status_counts(MemoryLayer.SHARED_INSTITUTIONAL),
            "store_counts": fixture_counts(store),
            "queue_depth": len(engine.queue),
            "queue_max_age_seconds": max(0, max_age),
            "regime": engine.config.regime.value,
        }
        return _canonical_response(snapshot)

    return app


def serve(
    store_root: str | os.PathLike,
    host: str = "127.0.0.1",
    port: int = 8077,
    operator_token: Optional[str] = None,
) -> None:
    import uvicorn

    app = create_app(store_root, operator_token=operator_token)
    uvicorn.run(app, host=host, port=port, log_level="warning")
