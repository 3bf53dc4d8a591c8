import threading

import pytest

from govmem.canonical import round_timestamp
from govmem.engine import GovernanceEngine, GovernancePath, route
from govmem.errors import (
    BoundaryViolation,
    ConflictError,
    NotFoundError,
    PreconditionError,
)
from govmem.model import (
    AgentIdentity,
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    RecordStatus,
)
from govmem.regimes import GovernanceConfig, MetricSpec, RegimeId
from govmem.store import StoreHandle

EVIDENCE = [EvidenceRef(EvidenceKind.FREE_TEXT, "observed in session log")]


class RoundClock:
    """Deterministic clock: each call may share or advance a logical round."""

    def __init__(self):
        self.round = 0

    def advance(self):
        self.round += 1

    def __call__(self):
        return round_timestamp(self.round)


def build_engine(tmp_path, regime=RegimeId.HUMAN_RATIFIED, **config_kwargs):
    store = StoreHandle(tmp_path / "store", create=True)
    config = GovernanceConfig(regime=regime, **config_kwargs)
    engine = GovernanceEngine(store, config=config, clock=RoundClock())
    for agent_id, role in (("agent-a", "architect"), ("agent-b", "ops")):
        join = engine.register_agent(AgentIdentity(agent_id, role))
        if join.status is RecordStatus.PENDING_REVIEW:
            engine.apply_decision(join.id, "ratified", ratifier="operator-0")
    return engine


@pytest.fixture
def engine(tmp_path):
    e = build_engine(tmp_path)
    yield e
    e.store.close()


def test_route_is_total():
    assert route(MemoryLayer.SHARED_INSTITUTIONAL) is GovernancePath.FULL_GOVERNANCE
    assert route(MemoryLayer.AGENT_LOCAL) is GovernancePath.LOCAL_PERSIST
    assert route(MemoryLayer.ARCHIVE) is GovernancePath.PROVENANCE_CHECK
    assert route(MemoryLayer.PROJECT_CONTINUITY) is GovernancePath.TTL_PERSIST


class TestSubmit:
    def test_local_candidate_persists_directly_without_queue(self, engine):
        record = engine.submit_candidate(
            payload={"note": "my heuristic"},
            kind=MemoryKind.LOCAL_NOTE,
            author="agent-a",
            function_tag=MemoryLayer.AGENT_LOCAL,
        )
        assert record.status is RecordStatus.PASSED
        assert record.owner_agent == "agent-a"
        assert len(engine.queue) == 0
        assert (engine.store.root / "agents" / "agent-a.log").read_bytes()

    def test_institutional_candidate_pends_under_human_regime(self, engine):
        record = engine.submit_candidate(
            payload={"topic": "observation"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        assert record.status is RecordStatus.PENDING_REVIEW
        assert engine.queue.pending_ids() == [record.id]

    def test_archive_without_evidence_rejected_at_submission(self, engine):
        with pytest.raises(PreconditionError, match="archive requires provenance"):
            engine.submit_candidate(
                payload={"artifact": "old report"},
                kind=MemoryKind.ARCHIVE_ARTIFACT,
                author="agent-a",
                function_tag=MemoryLayer.ARCHIVE,
            )

    def test_unregistered_author_is_rejected(self, engine):
        with pytest.raises(BoundaryViolation):
            engine.submit_candidate(
                payload={"x": 1},
                kind=MemoryKind.EVENT,
                author="ghost",
                function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            )

    def test_no_candidate_remains_proposed_after_submission(self, tmp_path):
        for regime in RegimeId:
            engine = build_engine(tmp_path / regime.value, regime=regime)
            record = engine.submit_candidate(
                payload={"topic": "t"},
                kind=MemoryKind.EVENT,
                author="agent-a",
                function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
                evidence=EVIDENCE,
            )
            assert record.status is not RecordStatus.PROPOSED
            engine.store.close()


class TestEvaluate:
    def test_ungoverned_ratifies_immediately(self, tmp_path):
        engine = build_engine(tmp_path, regime=RegimeId.UNGOVERNED)
        record = engine.submit_candidate(
            payload={"topic": "anything"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
        )
        assert record.status is RecordStatus.RATIFIED
        assert record.provenance.ratified_by == "auto:ungoverned"
        assert record.provenance.regime == "ungoverned"
        engine.store.close()

    def test_constitutional_rejection_carries_rule_id(self, tmp_path):
        engine = build_engine(tmp_path, regime=RegimeId.CONSTITUTIONAL)
        record = engine.submit_candidate(
            payload={"topic": "bare claim"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=[],
        )
        assert record.status is RecordStatus.REJECTED
        assert "require-evidence" in (record.provenance.decision_note or "")
        engine.store.close()

    def test_automatic_records_score(self, tmp_path):
        engine = build_engine(
            tmp_path,
            regime=RegimeId.AUTOMATIC,
            metric=MetricSpec(metric_id="evidence-coverage", threshold=0.75),
        )
        record = engine.submit_candidate(
            payload={"claim:a": "x", "claim:b": "y"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=[EvidenceRef(EvidenceKind.FREE_TEXT, "log", note="claim:a")],
        )
        assert record.status is RecordStatus.REJECTED  # coverage 0.5 < 0.75
        engine.store.close()


class TestApplyDecision:
    def _pending(self, engine):
        return engine.submit_candidate(
            payload={"topic": "observation"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )

    def test_ratify_completes_provenance_and_activates(self, engine):
        record = self._pending(engine)
        decided = engine.apply_decision(record.id, "ratified", ratifier="operator-1")
        assert decided.status is RecordStatus.RATIFIED
        assert decided.provenance.ratified_by == "operator-1"
        assert decided.provenance.regime == "human_ratified"
        assert decided.provenance.decided_at is not None
        active = engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
        assert record.id in {r.id for r in active}
        assert engine.queue.pending_ids() == []

    def test_second_decision_conflicts(self, engine):
        record = self._pending(engine)
        engine.apply_decision(record.id, "ratified", ratifier="operator-1")
        with pytest.raises(ConflictError):
            engine.apply_decision(record.id, "rejected", ratifier="operator-2")

    def test_abstained_candidate_is_archived_inspectably_and_resubmittable(self, engine):
        record = self._pending(engine)
        engine.apply_decision(record.id, "abstain", ratifier="operator-1", note="need more")
        effective = engine.store.get(record.id)
        assert effective.status is RecordStatus.ABSTAINED
        assert effective.id not in {
            r.id for r in engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
        }
        # resubmission with new evidence is a new candidate
        again = engine.submit_candidate(
            payload={"topic": "observation", "revised": True},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE + [EvidenceRef(EvidenceKind.RECORD_ID, record.id, note="prior attempt")],
        )
        assert again.id != record.id

    def test_unknown_candidate_not_found(self, engine):
        with pytest.raises(NotFoundError):
            engine.apply_decision("d" * 64, "ratified", ratifier="operator-1")

    def test_concurrent_decisions_exactly_one_wins(self, engine):
        record = self._pending(engine)
        results = []
        barrier = threading.Barrier(2)

        def decide(outcome, ratifier):
            barrier.wait()
            try:
                engine.apply_decision(record.id, outcome, ratifier=ratifier)
                results.append("ok")
            except ConflictError:
                results.append("conflict")

        t1 = threading.Thread(target=decide, args=("ratified", "op-1"))
        t2 = threading.Thread(target=decide, args=("rejected", "op-2"))
        t1.start(); t2.start(); t1.join(); t2.join()
        assert sorted(results) == ["conflict", "ok"]


class TestSupersede:
    def _ratified(self, engine, payload=None):
        record = engine.submit_candidate(
            payload=payload or {"topic": "original", "claim": "x is 5"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        return engine.apply_decision(record.id, "ratified", ratifier="operator-1")

    def test_correcting_a_ratified_false_event(self, engine):
        v1 = self._ratified(engine)
        v2 = engine.supersede(
            v1.resource_id,
            {"topic": "original", "claim": "x is 7"},
            evidence=EVIDENCE,
            author="agent-b",
        )
        engine.apply_decision(v2.id, "ratified", ratifier="operator-1")
        chain = engine.store.lineage(v1.resource_id)
        assert chain.statuses() == [RecordStatus.SUPERSEDED, RecordStatus.RATIFIED]
        assert engine.store.get(v1.id).payload["claim"] == "x is 5"  # intact

    def test_rejected_supersession_leaves_v1_active_and_visible(self, engine):
        v1 = self._ratified(engine)
        v2 = engine.supersede(
            v1.resource_id, {"worse": True}, evidence=EVIDENCE, author="agent-b"
        )
        engine.apply_decision(v2.id, "rejected", ratifier="operator-1", note="not better")
        assert engine.store.active_version(v1.resource_id) == v1.id
        chain = engine.store.lineage(v1.resource_id)
        assert chain.statuses() == [RecordStatus.RATIFIED, RecordStatus.REJECTED]

    def test_no_active_version_is_a_precondition_error(self, engine):
        with pytest.raises(PreconditionError):
            engine.supersede("never-seen", {"x": 1}, evidence=EVIDENCE, author="agent-a")


class TestPromote:
    def _local(self, engine, author="agent-a"):
        return engine.submit_candidate(
            payload={"text": "always check units", "note": "lesson"},
            kind=MemoryKind.LESSON,
            author=author,
            function_tag=MemoryLayer.AGENT_LOCAL,
        )

    def test_promotion_creates_candidate_and_preserves_local_store(self, engine):
        local = self._local(engine)
        before = engine.store.read_scoped("agent-a", MemoryLayer.AGENT_LOCAL)
        candidate = engine.promote(
            local.id, "agent-a", evidence=EVIDENCE, rationale="applies to every agent"
        )
        assert candidate.status is RecordStatus.PENDING_REVIEW
        after = engine.store.read_scoped("agent-a", MemoryLayer.AGENT_LOCAL)
        assert [r.id for r in before] == [r.id for r in after]
        refs = [e.value for e in candidate.provenance.evidence]
        assert local.id in refs

    def test_promoting_anothers_record_is_boundary_violation(self, engine):
        local = self._local(engine, author="agent-b")
        with pytest.raises(BoundaryViolation):
            engine.promote(local.id, "agent-a", evidence=EVIDENCE, rationale="mine now")

    def test_ratified_promotion_grows_shared_view_only(self, engine):
        local = self._local(engine)
        candidate = engine.promote(
            local.id, "agent-a", evidence=EVIDENCE, rationale="cross-agent"
        )
        local_before = len(engine.store.read_scoped("agent-a", MemoryLayer.AGENT_LOCAL))
        shared_before = len(engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL))
        engine.apply_decision(candidate.id, "ratified", ratifier="operator-1")
        assert len(engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)) == shared_before + 1
        assert len(engine.store.read_scoped("agent-a", MemoryLayer.AGENT_LOCAL)) == local_before


class TestPrincipleFromEvent:
    def test_failure_event_becomes_ratified_principle(self, engine):
        event = engine.submit_candidate(
            payload={"topic": "fabrication", "detail": "analysis cited an unread source"},
            kind=MemoryKind.EVENT,
            author="agent-b",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        engine.apply_decision(event.id, "ratified", ratifier="operator-1")
        candidate = engine.propose_principle_from_event(
            event.id, "Abstain rather than cite unread sources.", author="agent-a"
        )
        assert candidate.kind is MemoryKind.PRINCIPLE
        assert any(
            ref.kind is EvidenceKind.RECORD_ID and ref.value == event.id
            for ref in candidate.provenance.evidence
        )
        ratified = engine.apply_decision(candidate.id, "ratified", ratifier="operator-1")
        principles = [
            r
            for r in engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
            if r.kind is MemoryKind.PRINCIPLE
        ]
        assert ratified.id in {r.id for r in principles}

    def test_dangling_event_reference_errors(self, engine):
        with pytest.raises(NotFoundError):
            engine.propose_principle_from_event("e" * 64, "text", author="agent-a")

    def test_rule_shaped_principle_changes_constitutional_decisions(self, tmp_path):
        engine = build_engine(tmp_path, regime=RegimeId.CONSTITUTIONAL)
        # Phase 1: a confabulation-flagged candidate passes the default rules.
        first = engine.submit_candidate(
            payload={"topic": "analysis", "cites_unread_source": True},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        assert first.status is RecordStatus.RATIFIED
        # The failure is documented and converted into a rule-shaped principle.
        principle = engine.propose_principle_from_event(
            first.id,
            "Abstain rather than cite unread sources.",
            author="agent-a",
            extra_payload={
                "rule_id": "abstain-over-confabulation",
                "rule_predicate": '{"check":"payload_absent","key":"cites_unread_source"}',
                "rule_on_fail": "abstain",
            },
        )
        assert principle.status is RecordStatus.RATIFIED  # passes require-evidence
        assert engine.reload_rules() == 2
        # Phase 2: the same shape of candidate is now abstained.
        second = engine.submit_candidate(
            payload={"topic": "analysis 2", "cites_unread_source": True},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        assert second.status is RecordStatus.ABSTAINED
        # and the past decision is untouched
        assert engine.store.get(first.id).status is RecordStatus.RATIFIED
        engine.store.close()


class TestRegisterAgent:
    def test_join_leaves_shared_counts_and_local_stores_unchanged(self, engine):
        seeded = engine.submit_candidate(
            payload={"topic": "pre-join"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        engine.apply_decision(seeded.id, "ratified", ratifier="operator-1")
        active_before = {r.id for r in engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)}
        join_event = engine.register_agent(AgentIdentity("agent-new", "critic"))
        active_after = {r.id for r in engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)}
        assert active_before == active_after  # join pends, nothing merged
        assert engine.store.read_scoped("agent-new", MemoryLayer.AGENT_LOCAL) == []
        # once ratified the join event is ordinary institutional memory
        engine.apply_decision(join_event.id, "ratified", ratifier="operator-1")
        assert len(engine.store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)) == len(active_before) + 1

    def test_duplicate_registration_conflicts(self, engine):
        with pytest.raises(ConflictError):
            engine.register_agent(AgentIdentity("agent-a", "architect"))

    def test_new_agent_reads_full_shared_set(self, engine):
        record = engine.submit_candidate(
            payload={"text": "cite evidence"},
            kind=MemoryKind.PRINCIPLE,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        engine.apply_decision(record.id, "ratified", ratifier="operator-1")
        engine.register_agent(AgentIdentity("agent-new", "critic"))
        seen = engine.store.read_scoped("agent-new", MemoryLayer.SHARED_INSTITUTIONAL)
        assert record.id in {r.id for r in seen}


class TestSelectionTraceability:
    def test_chain_reconstructs_from_store_alone(self, engine):
        from govmem.metrics import provenance_fidelity, selection_traceability

        record = engine.submit_candidate(
            payload={"topic": "t"},
            kind=MemoryKind.EVENT,
            author="agent-a",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=EVIDENCE,
        )
        engine.apply_decision(record.id, "ratified", ratifier="operator-1")
        v2 = engine.supersede(record.resource_id, {"topic": "t2"}, EVIDENCE, "agent-b")
        engine.apply_decision(v2.id, "ratified", ratifier="operator-1")
        assert provenance_fidelity(engine.store) == 1.0
        assert selection_traceability(engine.store) == 1.0
        # Reopen from bytes only: no engine-private state needed.
        engine.store.close()
        with StoreHandle(engine.store.root) as reopened:
            active = reopened.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
            (v2_again,) = [r for r in active if r.resource_id == record.resource_id]
            assert v2_again.provenance.ratified_by == "operator-1"
            assert v2_again.provenance.supersedes == record.id
