import pytest

from govmem.model import (
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    Provenance,
    RecordStatus,
)
from govmem.store import StoreHandle


def make_record(
    resource_id="res-1",
    kind=MemoryKind.EVENT,
    layer=MemoryLayer.SHARED_INSTITUTIONAL,
    status=RecordStatus.PROPOSED,
    payload=None,
    drafted_by="agent-a",
    evidence=(EvidenceRef(EvidenceKind.FREE_TEXT, "seen it"),),
    created_at="2026-01-01T00:00:00Z",
    owner_agent=None,
    project_id=None,
    ttl_rounds=None,
    supersedes=None,
    ratified_by=None,
    regime=None,
    decided_at=None,
):
    return MemoryRecord(
        resource_id=resource_id,
        kind=kind,
        layer=layer,
        status=status,
        payload=payload if payload is not None else {"topic": resource_id},
        provenance=Provenance(
            drafted_by=drafted_by,
            evidence=tuple(evidence),
            supersedes=supersedes,
            ratified_by=ratified_by,
            regime=regime,
            decided_at=decided_at,
        ),
        created_at=created_at,
        owner_agent=owner_agent,
        project_id=project_id,
        ttl_rounds=ttl_rounds,
    )


@pytest.fixture
def store(tmp_path):
    handle = StoreHandle(tmp_path / "store", create=True)
    yield handle
    handle.close()
