"""Store-level governance metrics: provenance fidelity and traceability.

Both are fractions over the shared layer's active view. A store holding
nothing active scores 1.0 by convention (vacuously governed). The
simulator adds the truth-tag metrics on top of these; the service API
reports them live.
"""

from __future__ import annotations

from typing import Optional

from .model import EvidenceKind, MemoryLayer, MemoryRecord, RecordId
from .store import StoreHandle


def complete_provenance(record: MemoryRecord) -> bool:
    """Drafter, non-empty evidence, ratifier, regime, and decision time."""
    prov = record.provenance
    return bool(
        prov.drafted_by
        and prov.evidence
        and prov.ratified_by
        and prov.regime
        and prov.decided_at
    )


def provenance_fidelity(store: StoreHandle) -> float:
    active = store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
    if not active:
        return 1.0
    return sum(1 for r in active if complete_provenance(r)) / len(active)


def chain_breaks(store: StoreHandle, record: MemoryRecord) -> list[str]:
    """Dangling references in one record's decision chain, ancestors included."""
    breaks: list[str] = []
    seen: set[RecordId] = set()
    current: Optional[MemoryRecord] = record
    while current is not None:
        if current.id in seen:
            breaks.append(f"{current.id[:12]}...: supersession cycle")
            break
        seen.add(current.id)
        if not current.provenance.drafted_by:
            breaks.append(f"{current.id[:12]}...: no drafter")
        for ref in current.provenance.evidence:
            if ref.kind is EvidenceKind.RECORD_ID and not store.has(ref.value):
                breaks.append(
                    f"{current.id[:12]}...: evidence {ref.value[:12]}... missing"
                )
        ancestor_id = current.provenance.supersedes
        if ancestor_id is None:
            current = None
        elif not store.has(ancestor_id):
            breaks.append(
                f"{current.id[:12]}...: superseded ancestor {ancestor_id[:12]}... missing"
            )
            current = None
        else:
            current = store.get(ancestor_id)
    return breaks


def selection_traceability(store: StoreHandle) -> float:
    active = store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
    if not active:
        return 1.0
    traceable = sum(1 for r in active if not chain_breaks(store, r))
    return traceable / len(active)


def traceability_report(store: StoreHandle) -> tuple[float, dict[RecordId, list[str]]]:
    """Traceability fraction plus every broken chain, keyed by record id."""
    active = store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
    broken = {r.id: breaks for r in active if (breaks := chain_breaks(store, r))}
    score = 1.0 if not active else (len(active) - len(broken)) / len(active)
    return score, broken
