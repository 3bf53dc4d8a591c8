from hypothesis import given, settings
from hypothesis import strategies as st

from govmem.model import (
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    RecordStatus,
    compute_record_id,
    validate_record,
    verify_record_id,
)

from .conftest import make_record


def test_agent_local_with_owner_is_ok():
    record = make_record(layer=MemoryLayer.AGENT_LOCAL, owner_agent="agent-a")
    assert validate_record(record) == []


def test_owner_agent_forbidden_for_shared_layer():
    record = make_record(owner_agent="agent-a")
    violations = validate_record(record)
    assert any("owner_agent forbidden" in v for v in violations)


def test_agent_local_without_owner_violates():
    record = make_record(layer=MemoryLayer.AGENT_LOCAL)
    assert any("owner_agent required" in v for v in validate_record(record))


def test_ratified_institutional_record_requires_evidence():
    record = make_record(
        status=RecordStatus.RATIFIED,
        evidence=(),
        ratified_by="operator",
        regime="human_ratified",
        decided_at="2026-01-01T01:00:00Z",
    )
    violations = validate_record(record)
    assert any("evidence" in v for v in violations)


def test_ungoverned_ratification_may_lack_evidence():
    record = make_record(
        status=RecordStatus.RATIFIED,
        evidence=(),
        ratified_by="auto:ungoverned",
        regime="ungoverned",
        decided_at="2026-01-01T01:00:00Z",
    )
    assert validate_record(record) == []


def test_terminal_status_requires_full_decision_trail():
    record = make_record(status=RecordStatus.REJECTED)
    violations = validate_record(record)
    assert any("ratified_by" in v for v in violations)
    assert any("regime" in v for v in violations)
    assert any("decided_at" in v for v in violations)


def test_project_continuity_field_rules():
    ok = make_record(
        layer=MemoryLayer.PROJECT_CONTINUITY,
        kind=MemoryKind.CONTINUITY_STATE,
        status=RecordStatus.PASSED,
        project_id="proj-1",
        ttl_rounds=3,
    )
    assert validate_record(ok) == []
    missing = make_record(
        layer=MemoryLayer.PROJECT_CONTINUITY, kind=MemoryKind.CONTINUITY_STATE
    )
    assert any("project_id required" in v for v in validate_record(missing))
    stray_ttl = make_record(ttl_rounds=3)
    assert any("ttl_rounds" in v for v in validate_record(stray_ttl))


def test_failed_is_registry_vocabulary():
    bad = make_record(status=RecordStatus.FAILED)
    assert any("registry review vocabulary" in v for v in validate_record(bad))
    ok = make_record(
        kind=MemoryKind.VERSION_RECORD, status=RecordStatus.FAILED
    )
    assert validate_record(ok) == []


def test_passed_applies_to_registry_or_lighter_layers():
    bad = make_record(status=RecordStatus.PASSED)
    assert any("'passed'" in v for v in validate_record(bad))
    local = make_record(
        layer=MemoryLayer.AGENT_LOCAL,
        kind=MemoryKind.LOCAL_NOTE,
        status=RecordStatus.PASSED,
        owner_agent="agent-a",
    )
    assert validate_record(local) == []


def test_principles_carry_normative_text():
    bad = make_record(kind=MemoryKind.PRINCIPLE, payload={"topic": "no text"})
    assert any("normative text" in v for v in validate_record(bad))
    ok = make_record(kind=MemoryKind.PRINCIPLE, payload={"text": "cite sources"})
    assert validate_record(ok) == []


def test_content_hash_evidence_format():
    bad = make_record(
        evidence=(EvidenceRef(EvidenceKind.CONTENT_HASH, "ABC123"),)
    )
    assert any("64 lowercase hex" in v for v in validate_record(bad))
    ok = make_record(
        evidence=(EvidenceRef(EvidenceKind.CONTENT_HASH, "0" * 64),)
    )
    assert validate_record(ok) == []


def test_record_id_evidence_resolution_uses_resolver():
    ref = EvidenceRef(EvidenceKind.RECORD_ID, "a" * 64)
    record = make_record(evidence=(ref,))
    assert validate_record(record) == []  # structural only without resolver
    assert any(
        "does not resolve" in v for v in validate_record(record, resolver=lambda _: False)
    )
    assert validate_record(record, resolver=lambda _: True) == []


def test_validate_returns_every_violation_not_only_first():
    record = make_record(
        layer=MemoryLayer.AGENT_LOCAL,  # missing owner
        status=RecordStatus.RATIFIED,  # missing decision trail
        created_at="yesterday",
    )
    violations = validate_record(record)
    assert len(violations) >= 3


def test_id_round_trip_and_verification():
    record = make_record().with_id()
    assert verify_record_id(record)
    tampered = MemoryRecord.from_dict({**record.to_dict(), "created_at": "2027-01-01T00:00:00Z"})
    assert not verify_record_id(tampered)
    assert any("content hash" in v for v in validate_record(tampered))


def test_dict_round_trip_preserves_record():
    record = make_record(
        status=RecordStatus.RATIFIED,
        ratified_by="operator",
        regime="human_ratified",
        decided_at="2026-01-01T01:00:00Z",
    ).with_id()
    again = MemoryRecord.from_dict(record.to_dict())
    assert again == record


_layers = st.sampled_from(list(MemoryLayer))
_kinds = st.sampled_from(list(MemoryKind))
_statuses = st.sampled_from(list(RecordStatus))


@settings(max_examples=300)
@given(layer=_layers, kind=_kinds, status=_statuses, with_owner=st.booleans())
def test_valid_records_satisfy_each_invariant_independently(
    layer, kind, status, with_owner
):
    """Cross-check validate_record against independent per-invariant checks."""
    record = make_record(
        kind=kind,
        layer=layer,
        status=status,
        payload={"text": "normative words", "topic": "t"},
        owner_agent="agent-a" if with_owner else None,
        project_id="proj" if layer is MemoryLayer.PROJECT_CONTINUITY else None,
        ratified_by="operator",
        regime="human_ratified",
        decided_at="2026-01-01T01:00:00Z",
    )
    violations = validate_record(record)
    owner_rule_broken = (layer is MemoryLayer.AGENT_LOCAL) != with_owner
    failed_rule_broken = (
        status is RecordStatus.FAILED and kind is not MemoryKind.VERSION_RECORD
    )
    passed_rule_broken = status is RecordStatus.PASSED and (
        layer is MemoryLayer.SHARED_INSTITUTIONAL and kind is not MemoryKind.VERSION_RECORD
    )
    if not (owner_rule_broken or failed_rule_broken or passed_rule_broken):
        assert violations == []
    else:
        assert violations != []
