"""Domain vocabulary: records, layers, statuses, provenance, evidence.

Every value here is immutable after construction and safe to share
across threads. Records are content-addressed: a record's id is the
SHA-256 of its canonical serialization with the id field itself left
out, so provenance chains are tamper-evident by construction.

Validation never raises for bad domain content; ``validate_record``
returns every violated invariant as data so callers (store, engine,
API) decide what to do with them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional

from .canonical import (
    HEX64_RE,
    Scalar,
    canonical_bytes,
    content_hash,
    is_rfc3339_utc,
)
from .errors import ValidationError

RecordId = str
AgentId = str
RatifierId = str

LEGACY_IMPORT_AGENT: AgentId = "legacy-import"


class MemoryLayer(str, Enum):
    AGENT_LOCAL = "agent_local"
    SHARED_INSTITUTIONAL = "shared_institutional"
    ARCHIVE = "archive"
    PROJECT_CONTINUITY = "project_continuity"


class RecordStatus(str, Enum):
    PROPOSED = "proposed"
    PENDING_REVIEW = "pending_review"
    RATIFIED = "ratified"
    REJECTED = "rejected"
    ABSTAINED = "abstained"
    SUPERSEDED = "superseded"
    UNSELECTED = "unselected"
    FAILED = "failed"
    PASSED = "passed"


#: Terminal outcomes a governance decision can assign to an institutional candidate.
TERMINAL_DECISIONS = frozenset(
    {RecordStatus.RATIFIED, RecordStatus.REJECTED, RecordStatus.ABSTAINED}
)

#: Statuses that make a version the active one for its resource.
ACCEPTED_STATUSES = frozenset({RecordStatus.RATIFIED, RecordStatus.PASSED})


class MemoryKind(str, Enum):
    EVENT = "event"
    PRINCIPLE = "principle"
    LESSON = "lesson"
    PROTOCOL_CHANGE = "protocol_change"
    FAILURE_REPORT = "failure_report"
    REVISION = "revision"
    VERSION_RECORD = "version_record"
    LOCAL_NOTE = "local_note"
    ARCHIVE_ARTIFACT = "archive_artifact"
    CONTINUITY_STATE = "continuity_state"


class EvidenceKind(str, Enum):
    RECORD_ID = "record_id"
    URI = "uri"
    CONTENT_HASH = "content_hash"
    FREE_TEXT = "free_text"


@dataclass(frozen=True)
class EvidenceRef:
    kind: EvidenceKind
    value: str
    note: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value, "value": self.value}
        if self.note is not None:
            out["note"] = self.note
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvidenceRef":
        return cls(
            kind=EvidenceKind(data["kind"]),
            value=data["value"],
            note=data.get("note"),
        )


@dataclass(frozen=True)
class Provenance:
    drafted_by: AgentId
    evidence: tuple[EvidenceRef, ...] = ()
    ratified_by: Optional[RatifierId] = None
    regime: Optional[str] = None
    supersedes: Optional[RecordId] = None
    decided_at: Optional[str] = None
    decision_note: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "drafted_by": self.drafted_by,
            "evidence": [ref.to_dict() for ref in self.evidence],
        }
        for name in ("ratified_by", "regime", "supersedes", "decided_at", "decision_note"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Provenance":
        return cls(
            drafted_by=data["drafted_by"],
            evidence=tuple(EvidenceRef.from_dict(e) for e in data.get("evidence", [])),
            ratified_by=data.get("ratified_by"),
            regime=data.get("regime"),
            supersedes=data.get("supersedes"),
            decided_at=data.get("decided_at"),
            decision_note=data.get("decision_note"),
        )


@dataclass(frozen=True)
class MemoryRecord:
    resource_id: str
    kind: MemoryKind
    layer: MemoryLayer
    status: RecordStatus
    payload: dict[str, Scalar]
    provenance: Provenance
    created_at: str
    owner_agent: Optional[AgentId] = None
    project_id: Optional[str] = None
    ttl_rounds: Optional[int] = None
    id: Optional[RecordId] = None

    def to_dict(self, include_id: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {
            "resource_id": self.resource_id,
            "kind": self.kind.value,
            "layer": self.layer.value,
            "status": self.status.value,
            "payload": dict(self.payload),
            "provenance": self.provenance.to_dict(),
            "created_at": self.created_at,
        }
        if self.owner_agent is not None:
            out["owner_agent"] = self.owner_agent
        if self.project_id is not None:
            out["project_id"] = self.project_id
        if self.ttl_rounds is not None:
            out["ttl_rounds"] = self.ttl_rounds
        if include_id and self.id is not None:
            out["id"] = self.id
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MemoryRecord":
        return cls(
            resource_id=data["resource_id"],
            kind=MemoryKind(data["kind"]),
            layer=MemoryLayer(data["layer"]),
            status=RecordStatus(data["status"]),
            payload=dict(data["payload"]),
            provenance=Provenance.from_dict(data["provenance"]),
            created_at=data["created_at"],
            owner_agent=data.get("owner_agent"),
            project_id=data.get("project_id"),
            ttl_rounds=data.get("ttl_rounds"),
            id=data.get("id"),
        )

    def with_id(self) -> "MemoryRecord":
        """Return a copy carrying its content-derived id."""
        return replace(self, id=compute_record_id(self))

    def with_status(self, status: RecordStatus) -> "MemoryRecord":
        return replace(self, status=status)

    def with_provenance(self, provenance: Provenance) -> "MemoryRecord":
        return replace(self, provenance=provenance)


@dataclass(frozen=True)
class AgentIdentity:
    agent_id: AgentId
    role_label: str
    private_store_ref: str = ""


def canonical_serialize(record: MemoryRecord) -> bytes:
    """Canonical bytes of ``record`` excluding its id field.

    These are the bytes that get hashed into the record's id; the log
    line for a record is the same serialization with the id added back.
    """
    return canonical_bytes(record.to_dict(include_id=False))


def compute_record_id(record: MemoryRecord) -> RecordId:
    return content_hash(record.to_dict(include_id=False))


def verify_record_id(record: MemoryRecord) -> bool:
    """True when the record's stored id matches its content hash."""
    return record.id is not None and record.id == compute_record_id(record)


_SOURCE_MARKER_KEYS = ("cites_unread_source",)


def validate_record(
    record: MemoryRecord, resolver: Optional[Any] = None
) -> list[str]:
    """Return every violated invariant of ``record`` (empty list = ok).

    ``resolver`` is an optional callable ``id -> bool`` used to check
    that record_id evidence resolves inside the same store; without it,
    reference resolution is skipped (pure structural validation).
    """
    violations: list[str] = []
    prov = record.provenance

    if not record.resource_id:
        violations.append("resource_id must be non-empty")
    if not prov.drafted_by:
        violations.append("provenance.drafted_by must be non-empty")
    if not is_rfc3339_utc(record.created_at):
        violations.append(f"created_at is not an RFC 3339 UTC timestamp: {record.created_at!r}")

    for key, value in record.payload.items():
        if not isinstance(key, str):
            violations.append(f"payload key {key!r} is not a string")
        elif not isinstance(value, (str, int, float, bool, type(None))):
            violations.append(f"payload[{key!r}] is not a scalar or string")

    # Layer-conditional field rules (private by default; promotable).
    if record.layer is MemoryLayer.AGENT_LOCAL:
        if not record.owner_agent:
            violations.append("owner_agent required for agent_local records")
    elif record.owner_agent is not None:
        violations.append(f"owner_agent forbidden for {record.layer.value} layer")

    if record.layer is MemoryLayer.PROJECT_CONTINUITY:
        if not record.project_id:
            violations.append("project_id required for project_continuity records")
    elif record.project_id is not None:
        violations.append(f"project_id forbidden for {record.layer.value} layer")

    if record.ttl_rounds is not None:
        if record.layer is not MemoryLayer.PROJECT_CONTINUITY:
            violations.append("ttl_rounds applies only to project_continuity records")
        elif not isinstance(record.ttl_rounds, int) or record.ttl_rounds <= 0:
            violations.append("ttl_rounds must be a positive integer")

    # Status vocabulary restrictions.
    if record.status is RecordStatus.FAILED and record.kind is not MemoryKind.VERSION_RECORD:
        violations.append("status 'failed' is registry review vocabulary (version_record only)")
    if record.status is RecordStatus.PASSED:
        lighter = record.layer in (
            MemoryLayer.AGENT_LOCAL,
            MemoryLayer.ARCHIVE,
            MemoryLayer.PROJECT_CONTINUITY,
        )
        if not lighter and record.kind is not MemoryKind.VERSION_RECORD:
            violations.append(
                "status 'passed' applies to version_record or lighter-governance layers only"
            )

    # Terminal decisions must carry a complete decision trail.
    if record.status in TERMINAL_DECISIONS:
        if not prov.ratified_by:
            violations.append(f"status {record.status.value} requires provenance.ratified_by")
        if not prov.regime:
            violations.append(f"status {record.status.value} requires provenance.regime")
        if not prov.decided_at:
            violations.append(f"status {record.status.value} requires provenance.decided_at")
        elif not is_rfc3339_utc(prov.decided_at):
            violations.append("provenance.decided_at is not an RFC 3339 UTC timestamp")

    # Ratified institutional memory must be evidence-backed, except under
    # the ungoverned regime, which deliberately models the failure mode.
    if (
        record.layer is MemoryLayer.SHARED_INSTITUTIONAL
        and record.status is RecordStatus.RATIFIED
        and not prov.evidence
        and prov.regime != "ungoverned"
    ):
        violations.append(
            "ratified shared_institutional records require inspectable evidence"
        )

    if record.kind is MemoryKind.PRINCIPLE:
        text = record.payload.get("text")
        if not isinstance(text, str) or not text.strip():
            violations.append("principle records carry normative text in payload['text']")

    for i, ref in enumerate(prov.evidence):
        if ref.kind is EvidenceKind.CONTENT_HASH and not HEX64_RE.match(ref.value):
            violations.append(
                f"evidence[{i}] content_hash must be 64 lowercase hex characters"
            )
        if ref.kind is EvidenceKind.RECORD_ID:
            if not HEX64_RE.match(ref.value):
                violations.append(f"evidence[{i}] record_id is not a 64-hex record id")
            elif resolver is not None and not resolver(ref.value):
                violations.append(
                    f"evidence[{i}] record_id {ref.value[:12]}... does not resolve in this store"
                )

    if prov.supersedes is not None and not HEX64_RE.match(prov.supersedes):
        violations.append("provenance.supersedes is not a 64-hex record id")

    if record.id is not None and not verify_record_id(record):
        violations.append("id does not match the record's content hash")

    return violations


def require_valid(record: MemoryRecord, resolver: Optional[Any] = None) -> None:
    violations = validate_record(record, resolver)
    if violations:
        raise ValidationError(
            f"record {record.resource_id!r} violates {len(violations)} invariant(s)",
            violations,
        )
