"""Append-only, supersede-not-erase persistence for the four memory layers.

On-disk layout under one root:

    <root>/events.log        shared layer, event kind-group (catch-all)
    <root>/principles.log    shared layer, principles
    <root>/versions.log      shared layer, version registry
    <root>/archive.log       archive layer
    <root>/continuity.log    project-continuity layer
    <root>/agents/<id>.log   one private log per agent
    <root>/LOCK              single-writer lock (pid)

Each line is the canonical serialization of one entry: either a memory
record or a status-transition entry (discriminated by its "entry"
field). Nothing is ever rewritten; corrections and decisions append.
The in-memory index is a cache reconstructed by replaying the logs from
byte zero, and the incremental fold applies exactly the same functions
as a replay, so the two can never drift.

Supersession is folded from two sources: the explicit transition entry
appended by the engine, and, as a crash-safety backstop, the
``provenance.supersedes`` field of any record that reaches an accepted
status. A log truncated between the two entries still folds to a state
with a single active version per resource.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional

from .canonical import (
    canonical_bytes,
    canonical_loads,
    content_hash,
    is_rfc3339_utc,
    parse_timestamp,
    timestamp_round,
)
from .errors import (
    BoundaryViolation,
    ConflictError,
    LockError,
    NotFoundError,
    PreconditionError,
    ValidationError,
)
from .model import (
    ACCEPTED_STATUSES,
    LEGACY_IMPORT_AGENT,
    TERMINAL_DECISIONS,
    AgentId,
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    Provenance,
    RecordId,
    RecordStatus,
    compute_record_id,
    validate_record,
)

SHARED_LOGS = ("events.log", "principles.log", "versions.log")
FIXED_LOGS = SHARED_LOGS + ("archive.log", "continuity.log")
AGENT_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


def log_for_record(record: MemoryRecord) -> str:
    """Which log file a record belongs to, by (layer, kind-group)."""
    if record.layer is MemoryLayer.AGENT_LOCAL:
        return f"agents/{record.owner_agent}.log"
    if record.layer is MemoryLayer.ARCHIVE:
        return "archive.log"
    if record.layer is MemoryLayer.PROJECT_CONTINUITY:
        return "continuity.log"
    if record.kind is MemoryKind.PRINCIPLE:
        return "principles.log"
    if record.kind is MemoryKind.VERSION_RECORD:
        return "versions.log"
    return "events.log"


def _log_rank(log_name: str) -> tuple[int, str]:
    try:
        return (FIXED_LOGS.index(log_name), "")
    except ValueError:
        return (len(FIXED_LOGS), log_name)


@dataclass(frozen=True)
class LineageChain:
    resource_id: str
    versions: tuple[tuple[RecordId, RecordStatus, Optional[str]], ...]

    def statuses(self) -> list[RecordStatus]:
        return [status for _, status, _ in self.versions]

    def to_dict(self) -> dict[str, Any]:
        return {
            "resource_id": self.resource_id,
            "versions": [
                {"id": rid, "status": status.value, "decided_at": decided_at}
                for rid, status, decided_at in self.versions
            ],
        }


@dataclass
class _Stored:
    record: MemoryRecord
    log_name: str
    line_no: int
    status: RecordStatus
    decision: dict[str, str] = field(default_factory=dict)

    @property
    def sort_key(self) -> tuple[tuple[int, str], int]:
        return (_log_rank(self.log_name), self.line_no)

    def effective(self) -> MemoryRecord:
        prov = self.record.provenance
        if self.decision:
            prov = replace(
                prov,
                ratified_by=self.decision.get("ratified_by", prov.ratified_by),
                regime=self.decision.get("regime", prov.regime),
                decided_at=self.decision.get("decided_at", prov.decided_at),
                decision_note=self.decision.get("note", prov.decision_note),
            )
        return replace(self.record, status=self.status, provenance=prov)


class StoreHandle:
    """Single-writer handle over one store root.

    All appends are serialized through this handle; a second writer on
    the same root fails fast with :class:`LockError`. Open read-only for
    concurrent inspection (the reader sees a consistent prefix).
    """

    def __init__(
        self,
        root: str | os.PathLike,
        create: bool = False,
        read_only: bool = False,
        ttl_unit: str = "rounds",
    ):
        self.root = Path(root)
        self.read_only = read_only
        if ttl_unit not in ("rounds", "days"):
            raise ValidationError(f"unknown ttl_unit {ttl_unit!r}")
        self.ttl_unit = ttl_unit
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / "agents").mkdir(exist_ok=True)
        elif not self.root.is_dir():
            raise NotFoundError(f"store root {self.root} does not exist (init first)")

        self._locked = False
        if not read_only:
            self._acquire_lock()
        self._handles: dict[str, Any] = {}
        self._reset_state()
        self._replay_all()

    # -- lifecycle -----------------------------------------------------

    def _acquire_lock(self) -> None:
        lock_path = self.root / "LOCK"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            holder = None
            try:
                holder = int(lock_path.read_text().strip() or 0)
            except (ValueError, OSError):
                pass
            if holder and _pid_alive(holder):
                raise LockError(
                    f"store {self.root} is locked by live writer pid {holder}"
                ) from None
            # Stale lock from a dead process: take it over.
            lock_path.unlink(missing_ok=True)
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        self._locked = True

    def close(self) -> None:
        for handle in self._handles.values():
            handle.close()
        self._handles.clear()
        if self._locked:
            (self.root / "LOCK").unlink(missing_ok=True)
            self._locked = False

    def __enter__(self) -> "StoreHandle":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    # -- fold state ----------------------------------------------------

    def _reset_state(self) -> None:
        self._entries: dict[RecordId, _Stored] = {}
        self._transition_ids: set[RecordId] = set()
        self._resource_index: dict[str, list[RecordId]] = {}
        self._active_shared: dict[str, RecordId] = {}
        self._line_counts: dict[str, int] = {}
        self._orphan_transitions: list[dict[str, Any]] = []

    def _replay_all(self) -> None:
        self._reset_state()
        for log_name in self._log_names():
            path = self.root / log_name
            if not path.exists():
                continue
            with open(path, "rb") as fh:
                for line_no, raw in enumerate(fh):
                    line = raw.rstrip(b"\n")
                    if not line:
                        continue
                    entry = canonical_loads(line.decode("utf-8"))
                    self._fold_entry(entry, log_name, line_no)

    def _log_names(self) -> list[str]:
        names = [n for n in FIXED_LOGS]
        agents_dir = self.root / "agents"
        if agents_dir.is_dir():
            names.extend(
                f"agents/{p.name}" for p in sorted(agents_dir.glob("*.log"))
            )
        return names

    def _fold_entry(self, entry: dict[str, Any], log_name: str, line_no: int) -> None:
        if entry.get("entry") == "transition":
            self._fold_transition(entry)
        else:
            record = MemoryRecord.from_dict(entry)
            self._fold_record(record, log_name, line_no)
        self._line_counts[log_name] = line_no + 1

    def _fold_record(self, record: MemoryRecord, log_name: str, line_no: int) -> None:
        stored = _Stored(record, log_name, line_no, record.status)
        self._entries[record.id] = stored
        self._resource_index.setdefault(record.resource_id, []).append(record.id)
        if record.status in ACCEPTED_STATUSES:
            self._fold_accepted(stored)

    def _fold_transition(self, entry: dict[str, Any]) -> None:
        self._transition_ids.add(entry["id"])
        target = self._entries.get(entry["target_id"])
        if target is None:
            # Only possible on a corrupted copy (a deleted record line);
            # keep folding so the damage stays inspectable.
            self._orphan_transitions.append(entry)
            return
        new_status = RecordStatus(entry["new_status"])
        if target.status == new_status:
            return  # audit duplicate of a derived supersession
        target.status = new_status
        if new_status in TERMINAL_DECISIONS or new_status in (
            RecordStatus.FAILED,
            RecordStatus.PASSED,
        ):
            target.decision = {
                key: entry[key]
                for key in ("ratified_by", "regime", "note")
                if key in entry
            }
            target.decision["decided_at"] = entry["at"]
        if new_status in ACCEPTED_STATUSES:
            self._fold_accepted(target)
        elif new_status is RecordStatus.SUPERSEDED:
            resource = target.record.resource_id
            if self._active_shared.get(resource) == target.record.id:
                del self._active_shared[resource]

    def _fold_accepted(self, stored: _Stored) -> None:
        """A record reached ratified/passed: claim the resource's active slot.

        The superseded predecessor is folded here (derived from the
        record's own supersedes field) so that a log truncated before
        the explicit supersession transition still folds to exactly one
        active version per resource.
        """
        supersedes = stored.record.provenance.supersedes
        if supersedes is not None:
            predecessor = self._entries.get(supersedes)
            if predecessor is not None and predecessor.status is not RecordStatus.SUPERSEDED:
                predecessor.status = RecordStatus.SUPERSEDED
                resource = predecessor.record.resource_id
                if self._active_shared.get(resource) == predecessor.record.id:
                    del self._active_shared[resource]
        if stored.record.layer is not MemoryLayer.SHARED_INSTITUTIONAL:
            return
        resource = stored.record.resource_id
        current = self._active_shared.get(resource)
        if current is not None and current != stored.record.id:
            raise ConflictError(
                f"resource {resource!r} already has an active version; supersede it"
            )
        self._active_shared[resource] = stored.record.id

    # -- write path ----------------------------------------------------

    def _write_line(self, log_name: str, payload: dict[str, Any]) -> int:
        if self.read_only:
            raise PreconditionError("store opened read-only")
        handle = self._handles.get(log_name)
        if handle is None:
            path = self.root / log_name
            path.parent.mkdir(exist_ok=True)
            handle = open(path, "ab")
            self._handles[log_name] = handle
        handle.write(canonical_bytes(payload) + b"\n")
        handle.flush()
        line_no = self._line_counts.get(log_name, 0)
        self._line_counts[log_name] = line_no + 1
        return line_no

    def append(self, record: MemoryRecord) -> RecordId:
        """Durably append one record; assigns and returns its content id."""
        if record.id is None:
            record = record.with_id()
        violations = validate_record(record, resolver=self.has)
        if (
            record.layer is MemoryLayer.AGENT_LOCAL
            and record.owner_agent
            and not AGENT_ID_RE.match(record.owner_agent)
        ):
            violations.append(f"owner_agent {record.owner_agent!r} is not path-safe")
        if violations:
            raise ValidationError(
                f"record {record.resource_id!r} failed validation", violations
            )
        if record.id in self._entries or record.id in self._transition_ids:
            raise ConflictError(f"duplicate record id {record.id[:12]}...")

        supersedes = record.provenance.supersedes
        if supersedes is not None:
            self._check_supersedes_target(record, supersedes)

        log_name = log_for_record(record)
        extra: list[dict[str, Any]] = []
        if record.status in ACCEPTED_STATUSES and supersedes is not None:
            extra.append(self._supersession_transition(supersedes, record))

        line_no = self._write_line(log_name, record.to_dict())
        self._fold_record(record, log_name, line_no)
        for transition in extra:
            self._append_transition_entry(transition)
        return record.id

    def _check_supersedes_target(self, record: MemoryRecord, supersedes: RecordId) -> None:
        target = self._entries.get(supersedes)
        if target is None:
            raise NotFoundError(
                f"supersedes references unknown record {supersedes[:12]}..."
            )
        if target.record.resource_id != record.resource_id:
            raise PreconditionError(
                "a superseding version must share its predecessor's resource_id"
            )
        if target.status not in ACCEPTED_STATUSES:
            raise PreconditionError(
                f"supersedes target is {target.status.value}, not the active version"
            )

    def _supersession_transition(
        self, target_id: RecordId, successor: MemoryRecord
    ) -> dict[str, Any]:
        entry = {
            "entry": "transition",
            "target_id": target_id,
            "new_status": RecordStatus.SUPERSEDED.value,
            "at": successor.provenance.decided_at or successor.created_at,
            "caused_by": successor.id,
        }
        entry["id"] = content_hash(entry)
        return entry

    def _append_transition_entry(self, entry: dict[str, Any]) -> RecordId:
        target = self._entries[entry["target_id"]]
        line_no = self._write_line(target.log_name, entry)
        self._fold_transition(entry)
        return entry["id"]

    def transition(
        self,
        target_id: RecordId,
        new_status: RecordStatus,
        at: str,
        ratified_by: Optional[str] = None,
        regime: Optional[str] = None,
        note: Optional[str] = None,
        evidence: Iterable[EvidenceRef] = (),
    ) -> RecordId:
        """Append a status-transition entry for an existing record.

        Terminal decisions are unique: a second terminal transition for
        the same target conflicts. Transitions to an accepted status
        fold the predecessor named by the record's supersedes field.
        """
        stored = self._entries.get(target_id)
        if stored is None:
            raise NotFoundError(f"unknown record id {target_id[:12]}...")
        if new_status is RecordStatus.SUPERSEDED:
            raise PreconditionError(
                "supersession happens by accepting a superseding record, "
                "not by direct transition"
            )
        if new_status is RecordStatus.UNSELECTED:
            raise PreconditionError("use mark_unselected for audit-backed quarantine")
        if new_status is RecordStatus.PROPOSED:
            raise PreconditionError("proposed is an initial status, not a transition")
        if stored.status == new_status:
            raise ConflictError(f"record is already {new_status.value}")
        if new_status is RecordStatus.PENDING_REVIEW:
            if stored.status is not RecordStatus.PROPOSED:
                raise ConflictError(
                    f"cannot enqueue a record whose status is {stored.status.value}"
                )
        else:
            if stored.status not in (RecordStatus.PROPOSED, RecordStatus.PENDING_REVIEW):
                raise ConflictError(
                    f"record already decided: status is {stored.status.value}"
                )
        if new_status in TERMINAL_DECISIONS and not (ratified_by and regime and at):
            raise ValidationError(
                "terminal decisions require ratified_by, regime, and a timestamp"
            )
        if not is_rfc3339_utc(at):
            raise ValidationError(f"transition timestamp is not RFC 3339 UTC: {at!r}")

        # Ratifying a superseding version requires its target to still be active.
        supersedes = stored.record.provenance.supersedes
        extra: list[dict[str, Any]] = []
        if new_status in ACCEPTED_STATUSES:
            if supersedes is not None:
                predecessor = self._entries.get(supersedes)
                if predecessor is None or predecessor.status not in ACCEPTED_STATUSES:
                    raise ConflictError(
                        "supersedes target is no longer the active version"
                    )
            self._check_single_active(stored, supersedes)

        entry: dict[str, Any] = {
            "entry": "transition",
            "target_id": target_id,
            "new_status": new_status.value,
            "at": at,
        }
        if ratified_by is not None:
            entry["ratified_by"] = ratified_by
        if regime is not None:
            entry["regime"] = regime
        if note is not None:
            entry["note"] = note
        evidence = tuple(evidence)
        if evidence:
            entry["evidence"] = [ref.to_dict() for ref in evidence]
        entry["id"] = content_hash(entry)

        # Validate the post-transition effective record before writing.
        preview = _Stored(stored.record, stored.log_name, stored.line_no, new_status)
        preview.decision = {
            key: value
            for key, value in (
                ("ratified_by", ratified_by),
                ("regime", regime),
                ("decided_at", at),
                ("note", note),
            )
            if value is not None
        }
        if new_status in TERMINAL_DECISIONS:
            # The id hash covers the record as appended, not fold products.
            effective = replace(preview.effective(), id=None)
            violations = validate_record(effective, resolver=self.has)
            if violations:
                raise ValidationError(
                    "decision would leave the record in an invalid state", violations
                )

        if new_status in ACCEPTED_STATUSES and supersedes is not None:
            successor = replace(
                stored.record, provenance=replace(stored.record.provenance, decided_at=at)
            )
            extra.append(self._supersession_transition(supersedes, successor))

        transition_id = self._append_transition_entry(entry)
        for follow_up in extra:
            # Derived fold already superseded the target; the explicit
            # entry is appended for the audit trail.
            self._append_transition_entry(follow_up)
        return transition_id

    def _check_single_active(self, stored: _Stored, supersedes: Optional[RecordId]) -> None:
        if stored.record.layer is not MemoryLayer.SHARED_INSTITUTIONAL:
            return
        current = self._active_shared.get(stored.record.resource_id)
        if current is not None and current != stored.record.id and current != supersedes:
            raise ConflictError(
                f"resource {stored.record.resource_id!r} already has an active version"
            )

    # -- queries -------------------------------------------------------

    def has(self, record_id: RecordId) -> bool:
        return record_id in self._entries

    def has_entry(self, entry_id: RecordId) -> bool:
        """True for any appended entry id: records and transitions alike."""
        return entry_id in self._entries or entry_id in self._transition_ids

    def get(self, record_id: RecordId) -> MemoryRecord:
        """The record as appended, carrying its current effective status."""
        stored = self._entries.get(record_id)
        if stored is None:
            raise NotFoundError(f"unknown record id {record_id[:12]}...")
        return stored.effective()

    def all_records(self) -> list[MemoryRecord]:
        return [s.effective() for s in sorted(self._entries.values(), key=lambda s: s.sort_key)]

    def records_in_layer(self, layer: MemoryLayer) -> list[MemoryRecord]:
        return [r for r in self.all_records() if r.layer is layer]

    def active_view(
        self,
        layer: MemoryLayer,
        owner: Optional[AgentId] = None,
        now: Optional[str] = None,
    ) -> list[MemoryRecord]:
        """The behavior-shaping subset of a layer, in append order."""
        if layer is MemoryLayer.SHARED_INSTITUTIONAL:
            stored = [self._entries[rid] for rid in self._active_shared.values()]
            return [s.effective() for s in sorted(stored, key=lambda s: s.sort_key)]
        if layer is MemoryLayer.ARCHIVE:
            return [
                r
                for r in self.records_in_layer(layer)
                if self._provenance_resolvable(r)
            ]
        if layer is MemoryLayer.PROJECT_CONTINUITY:
            return [
                r
                for r in self.records_in_layer(layer)
                if r.status is not RecordStatus.SUPERSEDED and self._ttl_alive(r, now)
            ]
        if layer is MemoryLayer.AGENT_LOCAL:
            if owner is None:
                raise PreconditionError(
                    "agent_local views are scoped; pass owner or use read_scoped"
                )
            return [
                r
                for r in self.records_in_layer(layer)
                if r.owner_agent == owner and r.status is not RecordStatus.SUPERSEDED
            ]
        raise ValidationError(f"unknown layer {layer!r}")

    def _provenance_resolvable(self, record: MemoryRecord) -> bool:
        if not record.provenance.drafted_by or not record.provenance.evidence:
            return False
        return all(
            ref.kind is not EvidenceKind.RECORD_ID or self.has(ref.value)
            for ref in record.provenance.evidence
        )

    def _ttl_alive(self, record: MemoryRecord, now: Optional[str]) -> bool:
        if record.ttl_rounds is None:
            return True
        if now is None:
            return True
        if self.ttl_unit == "rounds":
            elapsed = timestamp_round(now) - timestamp_round(record.created_at)
        else:
            delta = parse_timestamp(now) - parse_timestamp(record.created_at)
            elapsed = delta.days
        return elapsed < record.ttl_rounds

    def lineage(self, resource_id: str) -> LineageChain:
        """Full ordered version chain, failed and superseded versions included."""
        ids = self._resource_index.get(resource_id)
        if not ids:
            raise NotFoundError(f"unknown resource {resource_id!r}")
        versions = []
        for rid in ids:
            effective = self._entries[rid].effective()
            versions.append((rid, effective.status, effective.provenance.decided_at))
        return LineageChain(resource_id=resource_id, versions=tuple(versions))

    def resources(self) -> list[str]:
        return sorted(self._resource_index)

    def active_version(self, resource_id: str) -> Optional[RecordId]:
        """Id of the shared layer's current accepted version, if any."""
        return self._active_shared.get(resource_id)

    # -- governance-adjacent operations ---------------------------------

    def mark_unselected(
        self,
        record_id: RecordId,
        audit_evidence: Iterable[EvidenceRef],
        at: str,
    ) -> RecordId:
        """Mark a never-governed record unselected, recording the audit trail."""
        stored = self._entries.get(record_id)
        if stored is None:
            raise NotFoundError(f"unknown record id {record_id[:12]}...")
        if stored.status is RecordStatus.UNSELECTED:
            raise ConflictError("record is already unselected")
        if stored.status in ACCEPTED_STATUSES:
            raise PreconditionError(
                "governed records are superseded, not unselected; use supersede"
            )
        if stored.status not in (RecordStatus.PROPOSED, RecordStatus.PENDING_REVIEW):
            raise PreconditionError(
                f"status {stored.status.value} is already a terminal selection outcome"
            )
        entry: dict[str, Any] = {
            "entry": "transition",
            "target_id": record_id,
            "new_status": RecordStatus.UNSELECTED.value,
            "at": at,
        }
        evidence = tuple(audit_evidence)
        if evidence:
            entry["evidence"] = [ref.to_dict() for ref in evidence]
        entry["id"] = content_hash(entry)
        return self._append_transition_entry(entry)

    def ingest_legacy(
        self,
        records: Iterable[MemoryRecord],
        at: Optional[str] = None,
    ) -> tuple[list[RecordId], list[tuple[int, str]]]:
        """Import pre-governance records as unselected, one failure per record.

        Provenance is stamped ``legacy-import`` with empty evidence.
        Returns (appended ids, [(index, reason)] for records that failed).
        """
        ids: list[RecordId] = []
        failures: list[tuple[int, str]] = []
        for index, record in enumerate(records):
            stamped = replace(
                record,
                status=RecordStatus.UNSELECTED,
                provenance=Provenance(drafted_by=LEGACY_IMPORT_AGENT, evidence=()),
                created_at=at or record.created_at,
                id=None,
            )
            try:
                ids.append(self.append(stamped))
            except (ValidationError, ConflictError) as exc:
                failures.append((index, str(exc)))
        return ids, failures

    def read_scoped(
        self,
        reader: AgentId,
        layer: MemoryLayer,
        filters: Optional[dict[str, Any]] = None,
        now: Optional[str] = None,
    ) -> list[MemoryRecord]:
        """Boundary-enforcing read: private stays private, shared stays shared.

        A cross-agent local read raises and, when the store is writable,
        appends an event record documenting the violation attempt.
        """
        filters = dict(filters or {})
        if layer is MemoryLayer.AGENT_LOCAL:
            owner = filters.pop("owner", reader)
            if owner != reader:
                self._record_violation(reader, owner, now)
                raise BoundaryViolation(
                    f"agent {reader!r} may not read agent {owner!r}'s local store"
                )
            records = self.active_view(layer, owner=owner)
        elif layer is MemoryLayer.PROJECT_CONTINUITY:
            records = self.active_view(layer, now=now)
            records = [
                r for r in records if reader in self._project_members(r.project_id)
            ]
            wanted = filters.pop("project_id", None)
            if wanted is not None:
                if reader not in self._project_members(wanted):
                    raise BoundaryViolation(
                        f"agent {reader!r} is not a member of project {wanted!r}"
                    )
                records = [r for r in records if r.project_id == wanted]
        elif layer is MemoryLayer.SHARED_INSTITUTIONAL:
            status = filters.pop("status", None)
            if status is None:
                records = self.active_view(layer)
            else:
                status = RecordStatus(status)
                records = [
                    r for r in self.records_in_layer(layer) if r.status is status
                ]
        else:
            records = self.active_view(layer, now=now)

        kind = filters.pop("kind", None)
        if kind is not None:
            kind = MemoryKind(kind)
            records = [r for r in records if r.kind is kind]
        resource_id = filters.pop("resource_id", None)
        if resource_id is not None:
            records = [r for r in records if r.resource_id == resource_id]
        if filters:
            raise ValidationError(f"unknown filters: {sorted(filters)}")
        return records

    def _project_members(self, project_id: Optional[str]) -> set[AgentId]:
        if project_id is None:
            return set()
        members = set()
        for stored in self._entries.values():
            if stored.record.project_id == project_id:
                members.add(stored.record.provenance.drafted_by)
        return members

    def _record_violation(
        self, reader: AgentId, owner: AgentId, now: Optional[str]
    ) -> None:
        if self.read_only:
            return
        event = MemoryRecord(
            resource_id=f"boundary-violation-{reader}-{self._line_counts.get('events.log', 0)}",
            kind=MemoryKind.EVENT,
            layer=MemoryLayer.SHARED_INSTITUTIONAL,
            status=RecordStatus.PROPOSED,
            payload={
                "topic": "boundary-violation",
                "reader": reader,
                "attempted_owner": owner,
            },
            provenance=Provenance(drafted_by=reader, evidence=()),
            created_at=now or "1970-01-01T00:00:00Z",
        )
        self.append(event)

    # -- agent registry -------------------------------------------------

    def known_agents(self) -> set[AgentId]:
        agents_dir = self.root / "agents"
        if not agents_dir.is_dir():
            return set()
        return {p.stem for p in agents_dir.glob("*.log")}

    def create_agent_log(self, agent_id: AgentId) -> None:
        if not AGENT_ID_RE.match(agent_id):
            raise ValidationError(f"agent id {agent_id!r} is not path-safe")
        if self.read_only:
            raise PreconditionError("store opened read-only")
        path = self.root / "agents" / f"{agent_id}.log"
        if path.exists():
            raise ConflictError(f"agent {agent_id!r} is already registered")
        path.parent.mkdir(exist_ok=True)
        path.touch()

    # -- introspection ---------------------------------------------------

    def status_counts(self, layer: Optional[MemoryLayer] = None) -> dict[str, int]:
        counts: dict[str, int] = {}
        for stored in self._entries.values():
            if layer is not None and stored.record.layer is not layer:
                continue
            counts[stored.status.value] = counts.get(stored.status.value, 0) + 1
        return counts


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True
