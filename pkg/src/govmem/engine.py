"""Candidate routing, evaluation, ratification, supersession, promotion.

Candidates are routed by memory function: agent-local, archive, and
project-continuity memory persist under their lighter burdens, while
shared institutional candidates enter the full governance path and
receive an explicit outcome from the configured regime. Every terminal
decision is appended with who decided, under which regime, and when,
so the selection chain of any active record reconstructs from store
contents alone.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Iterable, Optional

from .canonical import content_hash, format_timestamp
from .errors import (
    BoundaryViolation,
    ConfigError,
    ConflictError,
    NotFoundError,
    PreconditionError,
)
from .model import (
    AgentId,
    AgentIdentity,
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    Provenance,
    RatifierId,
    RecordId,
    RecordStatus,
)
from .regimes import (
    ConstitutionRule,
    GovernanceConfig,
    MetricFn,
    Outcome,
    RegimeDecision,
    RegimeId,
    decide_automatic,
    decide_constitutional,
    decide_human,
    decide_ungoverned,
    load_governance_config,
    rule_from_principle,
)
from .store import StoreHandle

Clock = Callable[[], str]


def utc_clock() -> str:
    return format_timestamp(datetime.now(timezone.utc))


class GovernancePath(str, Enum):
    LOCAL_PERSIST = "local-persist"
    PROVENANCE_CHECK = "provenance-check"
    TTL_PERSIST = "ttl-persist"
    FULL_GOVERNANCE = "full-governance"


_ROUTES = {
    MemoryLayer.AGENT_LOCAL: GovernancePath.LOCAL_PERSIST,
    MemoryLayer.ARCHIVE: GovernancePath.PROVENANCE_CHECK,
    MemoryLayer.PROJECT_CONTINUITY: GovernancePath.TTL_PERSIST,
    MemoryLayer.SHARED_INSTITUTIONAL: GovernancePath.FULL_GOVERNANCE,
}


def route(function_tag: MemoryLayer) -> GovernancePath:
    """Total mapping from memory function to governance burden."""
    return _ROUTES[function_tag]


@dataclass(frozen=True)
class Decision:
    candidate_id: RecordId
    outcome: RecordStatus
    ratifier: RatifierId
    regime: RegimeId
    note: str
    decided_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "candidate_id": self.candidate_id,
            "outcome": self.outcome.value,
            "ratifier": self.ratifier,
            "regime": self.regime.value,
            "note": self.note,
            "decided_at": self.decided_at,
        }


class ReviewQueue:
    """FIFO queue of candidates awaiting an external ratifier."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.pending: list[tuple[RecordId, str]] = []
        self.decisions_log: list[Decision] = []
        self.peak = 0

    def enqueue(self, candidate_id: RecordId, at: str = "") -> None:
        with self._lock:
            if any(cid == candidate_id for cid, _ in self.pending):
                raise ConflictError(f"candidate {candidate_id[:12]}... is already enqueued")
            self.pending.append((candidate_id, at))
            self.peak = max(self.peak, len(self.pending))

    def remove(self, candidate_id: RecordId) -> None:
        with self._lock:
            self.pending = [(cid, at) for cid, at in self.pending if cid != candidate_id]

    def pending_ids(self) -> list[RecordId]:
        with self._lock:
            return [cid for cid, _ in self.pending]

    def entries(self) -> list[tuple[RecordId, str]]:
        with self._lock:
            return list(self.pending)

    def __len__(self) -> int:
        with self._lock:
            return len(self.pending)


_OUTCOME_TO_STATUS = {
    Outcome.RATIFY: RecordStatus.RATIFIED,
    Outcome.REJECT: RecordStatus.REJECTED,
    Outcome.ABSTAIN: RecordStatus.ABSTAINED,
}

_DECISION_ALIASES = {
    "ratify": RecordStatus.RATIFIED,
    "ratified": RecordStatus.RATIFIED,
    "reject": RecordStatus.REJECTED,
    "rejected": RecordStatus.REJECTED,
    "abstain": RecordStatus.ABSTAINED,
    "abstained": RecordStatus.ABSTAINED,
}


def _as_terminal_status(outcome: Any) -> RecordStatus:
    if isinstance(outcome, RecordStatus):
        status = outcome
    elif isinstance(outcome, Outcome):
        status = _OUTCOME_TO_STATUS.get(outcome)  # type: ignore[assignment]
        if status is None:
            raise PreconditionError("pending is not a terminal outcome")
    else:
        status = _DECISION_ALIASES.get(str(outcome).lower())
    if status not in (RecordStatus.RATIFIED, RecordStatus.REJECTED, RecordStatus.ABSTAINED):
        raise PreconditionError(f"not a terminal decision outcome: {outcome!r}")
    return status


class GovernanceEngine:
    """Single-ecosystem governance over one store.

    All state transitions funnel through one writer lock; per-candidate
    decisions are mutually exclusive, so exactly one of two racing
    decisions wins and the loser sees a conflict.
    """

    def __init__(
        self,
        store: StoreHandle,
        config: Optional[GovernanceConfig] = None,
        clock: Optional[Clock] = None,
        metric_registry: Optional[dict[str, MetricFn]] = None,
    ):
        self.store = store
        self.config = config or load_governance_config(store.root)
        self.clock = clock or utc_clock
        self.queue = ReviewQueue()
        self._metrics = dict(metric_registry or {})
        self._rules: list[ConstitutionRule] = list(self.config.constitution)
        self._lock = threading.RLock()
        self._rebuild_queue()

    # -- construction helpers -------------------------------------------

    def _rebuild_queue(self) -> None:
        for record in self.store.records_in_layer(MemoryLayer.SHARED_INSTITUTIONAL):
            if record.status is RecordStatus.PENDING_REVIEW:
                self.queue.enqueue(record.id, record.created_at)

    def active_rules(self) -> list[ConstitutionRule]:
        return list(self._rules)

    def reload_rules(self) -> int:
        """Fold ratified rule-shaped principles into the constitution.

        Closes the governance-as-learning loop: a ratified principle
        changes decisions for subsequent candidates, never past ones.
        """
        merged: dict[str, ConstitutionRule] = {
            rule.rule_id: rule for rule in self.config.constitution
        }
        for record in self.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL):
            rule = rule_from_principle(record)
            if rule is not None:
                merged[rule.rule_id] = rule
        self._rules = [merged[rule_id] for rule_id in sorted(merged)]
        return len(self._rules)

    def register_metric(self, name: str, fn: MetricFn) -> None:
        self._metrics[name] = fn

    # -- agent registry ---------------------------------------------------

    def register_agent(self, identity: AgentIdentity) -> MemoryRecord:
        """Create the agent's private log and record the join as an event.

        The join itself never copies anything into shared stores; the
        join event is an ordinary institutional candidate.
        """
        with self._lock:
            self.store.create_agent_log(identity.agent_id)
        return self.submit_candidate(
            payload={
                "topic": "agent-join",
                "agent": identity.agent_id,
                "role": identity.role_label,
            },
            kind=MemoryKind.EVENT,
            author=identity.agent_id,
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=[
                EvidenceRef(
                    EvidenceKind.FREE_TEXT,
                    f"joining thread for {identity.agent_id} ({identity.role_label})",
                )
            ],
            resource_id=f"agent-join-{identity.agent_id}",
        )

    def is_registered(self, agent_id: AgentId) -> bool:
        return agent_id in self.store.known_agents()

    # -- candidate lifecycle ----------------------------------------------

    def submit_candidate(
        self,
        payload: dict[str, Any],
        kind: MemoryKind,
        author: AgentId,
        function_tag: MemoryLayer,
        evidence: Iterable[EvidenceRef] = (),
        resource_id: Optional[str] = None,
        project_id: Optional[str] = None,
        ttl_rounds: Optional[int] = None,
        supersedes: Optional[RecordId] = None,
    ) -> MemoryRecord:
        """Route one candidate by memory function and persist it."""
        if not self.is_registered(author) and author != self.config.ratifier:
            raise BoundaryViolation(f"author {author!r} is not a registered agent")
        path = route(function_tag)
        if resource_id is None:
            resource_id = f"{kind.value}-{content_hash(dict(payload))[:12]}"
        provenance = Provenance(
            drafted_by=author, evidence=tuple(evidence), supersedes=supersedes
        )
        now = self.clock()

        if path is GovernancePath.FULL_GOVERNANCE:
            status = RecordStatus.PROPOSED
        elif path is GovernancePath.PROVENANCE_CHECK:
            if not provenance.evidence:
                raise PreconditionError(
                    "archive requires provenance: attach evidence refs"
                )
            status = RecordStatus.PASSED
        else:
            status = RecordStatus.PASSED

        record = MemoryRecord(
            resource_id=resource_id,
            kind=kind,
            layer=function_tag,
            status=status,
            payload=dict(payload),
            provenance=provenance,
            created_at=now,
            owner_agent=author if function_tag is MemoryLayer.AGENT_LOCAL else None,
            project_id=project_id if function_tag is MemoryLayer.PROJECT_CONTINUITY else None,
            ttl_rounds=ttl_rounds if function_tag is MemoryLayer.PROJECT_CONTINUITY else None,
        )
        with self._lock:
            record_id = self.store.append(record)
        if path is GovernancePath.FULL_GOVERNANCE:
            self.evaluate(record_id)
        return self.store.get(record_id)

    def evaluate(self, candidate_id: RecordId) -> RegimeDecision:
        """Run the configured regime; apply non-pending outcomes immediately."""
        candidate = self.store.get(candidate_id)
        if candidate.layer is not MemoryLayer.SHARED_INSTITUTIONAL:
            raise PreconditionError("only shared institutional candidates are evaluated")
        if candidate.status is not RecordStatus.PROPOSED:
            raise PreconditionError(
                f"candidate already evaluated: status {candidate.status.value}"
            )
        regime = self.config.regime
        if regime is RegimeId.UNGOVERNED:
            decision = decide_ungoverned(candidate)
            ratifier = "auto:ungoverned"
        elif regime is RegimeId.CONSTITUTIONAL:
            decision = decide_constitutional(candidate, self._rules)
            ratifier = "auto:constitutional"
        elif regime is RegimeId.AUTOMATIC:
            decision = decide_automatic(candidate, self.config.metric, self._metrics)
            ratifier = f"auto:metric:{self.config.metric.metric_id}"
        elif regime is RegimeId.HUMAN_RATIFIED:
            with self._lock:
                decision = decide_human(candidate, self.queue)
                self.store.transition(
                    candidate_id, RecordStatus.PENDING_REVIEW, at=self.clock()
                )
            return decision
        else:  # pragma: no cover - enum is closed
            raise ConfigError(f"no regime configured: {regime!r}")

        self.apply_decision(
            candidate_id, decision.outcome, ratifier=ratifier, note=decision.rationale
        )
        return decision

    def apply_decision(
        self,
        candidate_id: RecordId,
        outcome: Any,
        ratifier: RatifierId,
        note: str = "",
    ) -> MemoryRecord:
        """Apply the terminal decision; exactly one decision per candidate wins."""
        status = _as_terminal_status(outcome)
        with self._lock:
            if not self.store.has(candidate_id):
                raise NotFoundError(f"unknown candidate {candidate_id[:12]}...")
            decided_at = self.clock()
            self.store.transition(
                candidate_id,
                status,
                at=decided_at,
                ratified_by=ratifier,
                regime=self.config.regime.value,
                note=note or None,
            )
            self.queue.remove(candidate_id)
            self.queue.decisions_log.append(
                Decision(
                    candidate_id=candidate_id,
                    outcome=status,
                    ratifier=ratifier,
                    regime=self.config.regime,
                    note=note,
                    decided_at=decided_at,
                )
            )
        return self.store.get(candidate_id)

    def supersede(
        self,
        resource_id: str,
        new_payload: dict[str, Any],
        evidence: Iterable[EvidenceRef],
        author: AgentId,
        note: str = "",
    ) -> MemoryRecord:
        """Propose a correcting version; the old version is never erased.

        The correction takes effect only if the regime (or a later human
        decision) ratifies it; a rejected correction stays visible in
        the resource's lineage.
        """
        active_id = self.store.active_version(resource_id)
        if active_id is None:
            raise PreconditionError(
                f"resource {resource_id!r} has no active version to supersede"
            )
        old = self.store.get(active_id)
        payload = dict(new_payload)
        if note:
            payload.setdefault("correction_note", note)
        return self.submit_candidate(
            payload=payload,
            kind=old.kind,
            author=author,
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=evidence,
            resource_id=resource_id,
            supersedes=active_id,
        )

    def promote(
        self,
        local_record_id: RecordId,
        author: AgentId,
        evidence: Iterable[EvidenceRef],
        rationale: str,
        target_kind: MemoryKind = MemoryKind.LESSON,
        resource_id: Optional[str] = None,
    ) -> MemoryRecord:
        """Promote a private record into an institutional candidate.

        The local record stays untouched in the agent's own store; the
        candidate cites it as evidence.
        """
        source = self.store.get(local_record_id)
        if source.layer is not MemoryLayer.AGENT_LOCAL or source.owner_agent != author:
            raise BoundaryViolation(
                f"agent {author!r} may promote only records from its own local store"
            )
        payload = dict(source.payload)
        payload["promotion_rationale"] = rationale
        combined = [
            EvidenceRef(EvidenceKind.RECORD_ID, local_record_id, note="promoted source")
        ]
        combined.extend(evidence)
        return self.submit_candidate(
            payload=payload,
            kind=target_kind,
            author=author,
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=combined,
            resource_id=resource_id or f"promoted-{source.resource_id}",
        )

    def propose_principle_from_event(
        self,
        event_id: RecordId,
        principle_text: str,
        author: AgentId,
        extra_payload: Optional[dict[str, Any]] = None,
        resource_id: Optional[str] = None,
    ) -> MemoryRecord:
        """Convert a documented failure (or any event) into a principle candidate."""
        try:
            event = self.store.get(event_id)
        except NotFoundError as exc:
            raise NotFoundError(f"event reference does not resolve: {exc}") from exc
        if event.status not in (RecordStatus.RATIFIED, RecordStatus.UNSELECTED):
            raise PreconditionError(
                "principles grow from ratified or unselected events, "
                f"not {event.status.value}"
            )
        payload: dict[str, Any] = {"text": principle_text}
        if extra_payload:
            payload.update(extra_payload)
        return self.submit_candidate(
            payload=payload,
            kind=MemoryKind.PRINCIPLE,
            author=author,
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=[
                EvidenceRef(EvidenceKind.RECORD_ID, event_id, note="source event")
            ],
            resource_id=resource_id or f"principle-from-{event.resource_id}",
        )

    # -- observability ------------------------------------------------------

    def queue_view(self) -> list[dict[str, Any]]:
        entries = []
        for candidate_id, enqueued_at in self.queue.entries():
            record = self.store.get(candidate_id)
            entries.append(
                {
                    "candidate_id": candidate_id,
                    "kind": record.kind.value,
                    "resource_id": record.resource_id,
                    "payload": dict(record.payload),
                    "evidence": [ref.to_dict() for ref in record.provenance.evidence],
                    "drafted_by": record.provenance.drafted_by,
                    "enqueued_at": enqueued_at,
                }
            )
        return entries
