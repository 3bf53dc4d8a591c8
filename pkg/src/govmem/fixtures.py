"""The reference ecosystem fixture: a governed store with known counts.

Builds, deterministically, a store holding 12 event records (10
ratified, 2 pending review), 8 active ratified principles, and a
version registry of 17 resources over 22 version records, with the
registry cleanup dated 2026-04-26. Five documented situations are
embedded for end-to-end replay:

  1. a pre-governance auto-memory file with false entries, ingested
     unselected and quarantined after audit;
  2. a private lesson promoted into a ratified principle;
  3. a registry resource whose lineage runs failed -> passed -> cleanup;
  4. a new agent joining without any local-memory merge;
  5. a fabrication failure converted into a rule-shaped principle that
     changes later constitutional decisions.

The bundle file is a replayable flat encoding of the store: one meta
line, then one line per log entry in (log, position) order. Because
entries are canonical serializations, loading a bundle reproduces the
store byte for byte.

Run ``python -m govmem.fixtures`` to regenerate the checked-in bundle.
"""

from __future__ import annotations

import shutil
import tempfile
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Any

from .canonical import canonical_bytes, canonical_loads
from .engine import GovernanceEngine
from .errors import ValidationError
from .model import (
    AgentIdentity,
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    Provenance,
    RecordStatus,
)
from .regimes import (
    DEFAULT_RULES,
    GovernanceConfig,
    RegimeId,
    save_governance_config,
)
from .store import FIXED_LOGS, StoreHandle

BUNDLE_NAME = "paper-ecosystem"
PACKAGED_BUNDLE = "paper-ecosystem.log-bundle"

FOUNDING_AGENTS = (
    ("arch-reviewer", "architecture reviewer"),
    ("ops-synth", "operations synthesizer"),
    ("archive-retrieval", "archive retrieval"),
    ("formal-critic", "formal critic"),
)
JOINED_AGENT = ("atlas", "data synthesis")

OPERATOR = "operator"

#: Legacy auto-memory resource ids; the first three are the false entries.
LEGACY_FALSE = ("legacy-auto-001", "legacy-auto-002", "legacy-auto-003")
LEGACY_TRUE = ("legacy-auto-004", "legacy-auto-005")

REGISTRY_RESOURCE = "reg-memory-registry"
AUTO_MEMORY_RESOURCE = "reg-auto-memory"
UNITS_PRINCIPLE = "principle-units-check"
CONFAB_PRINCIPLE = "principle-abstain-over-confabulation"
CLEANUP_DATE = "2026-04-26"


class ScriptedClock:
    """Clock the builder advances explicitly; every run ticks identically."""

    def __init__(self, start: str = "2026-03-01T09:00:00Z"):
        self.now = start

    def set(self, when: str) -> None:
        self.now = when

    def __call__(self) -> str:
        return self.now


def _ratify(engine: GovernanceEngine, record: MemoryRecord, at: str, note: str = "") -> None:
    engine.clock.set(at)
    engine.apply_decision(record.id, "ratified", ratifier=OPERATOR, note=note or "ratified")


def build_paper_ecosystem(root: str | Path) -> StoreHandle:
    """Construct the reference ecosystem into ``root`` and return the handle."""
    store = StoreHandle(root, create=True)
    clock = ScriptedClock()
    config = GovernanceConfig(
        regime=RegimeId.HUMAN_RATIFIED, ratifier=OPERATOR, constitution=DEFAULT_RULES
    )
    save_governance_config(store.root, config)
    engine = GovernanceEngine(store, config=config, clock=clock)

    for agent_id, _role in FOUNDING_AGENTS:
        store.create_agent_log(agent_id)

    def submit(author, payload, kind, at, resource_id, evidence, **kwargs):
        clock.set(at)
        return engine.submit_candidate(
            payload=payload,
            kind=kind,
            author=author,
            function_tag=kwargs.pop("function_tag", MemoryLayer.SHARED_INSTITUTIONAL),
            evidence=evidence,
            resource_id=resource_id,
            **kwargs,
        )

    def free_text(value, note=None):
        return EvidenceRef(EvidenceKind.FREE_TEXT, value, note=note)

    def cites(record_or_id, note="source record"):
        value = record_or_id if isinstance(record_or_id, str) else record_or_id.id
        return EvidenceRef(EvidenceKind.RECORD_ID, value, note=note)

    # ---- founding events and principles (2026-03-01 .. 03-05) ----------
    e001 = submit(
        "arch-reviewer",
        {
            "summary": "Collaborative memory write protocol adopted for the ecosystem",
            "topic": "protocol-adoption",
        },
        MemoryKind.EVENT,
        "2026-03-01T09:00:00Z",
        "evt-protocol-adoption",
        [free_text("operator meeting note 2026-03-01")],
    )
    _ratify(engine, e001, "2026-03-01T15:00:00Z")

    e002 = submit(
        "ops-synth",
        {
            "summary": "Shared memory schema with provenance fields took effect",
            "topic": "memory-schema",
        },
        MemoryKind.EVENT,
        "2026-03-02T09:00:00Z",
        "evt-memory-schema",
        [cites(e001), free_text("schema review thread")],
    )
    _ratify(engine, e002, "2026-03-02T15:00:00Z")

    p001 = submit(
        "arch-reviewer",
        {"text": "No candidate becomes institutional memory without inspectable evidence."},
        MemoryKind.PRINCIPLE,
        "2026-03-03T09:00:00Z",
        "principle-evidence-first",
        [cites(e001, note="adoption decision")],
    )
    _ratify(engine, p001, "2026-03-03T15:00:00Z")

    p002 = submit(
        "ops-synth",
        {"text": "Corrections supersede; nothing in shared memory is ever erased."},
        MemoryKind.PRINCIPLE,
        "2026-03-04T09:00:00Z",
        "principle-supersede-not-erase",
        [cites(e002, note="schema rule")],
    )
    _ratify(engine, p002, "2026-03-04T15:00:00Z")

    # ---- situation 1: legacy auto-memory audit (2026-03-10) ------------
    legacy_entries = [
        MemoryRecord(
            resource_id=resource,
            kind=MemoryKind.LOCAL_NOTE,
            layer=MemoryLayer.SHARED_INSTITUTIONAL,
            status=RecordStatus.UNSELECTED,
            payload={"note": text, "origin": "auto-memory"},
            provenance=Provenance(drafted_by="legacy-import"),
            created_at="2026-03-10T09:00:00Z",
        )
        for resource, text in (
            (LEGACY_FALSE[0], "The ops agent maintains the retrieval index nightly"),
            (LEGACY_FALSE[1], "Archive queries time out above 2k records"),
            (LEGACY_FALSE[2], "The critic approved the March protocol draft"),
            (LEGACY_TRUE[0], "Weekly handoff happens on Mondays"),
            (LEGACY_TRUE[1], "The registry lives beside the principle store"),
        )
    ]
    legacy_ids, legacy_failures = store.ingest_legacy(
        legacy_entries, at="2026-03-10T09:00:00Z"
    )
    if legacy_failures:
        raise ValidationError(f"fixture legacy import failed: {legacy_failures}")

    auto_memory_v1 = submit(
        "archive-retrieval",
        {
            "resource": "auto-memory file",
            "revision": "pre-governance snapshot",
        },
        MemoryKind.VERSION_RECORD,
        "2026-03-10T09:30:00Z",
        AUTO_MEMORY_RESOURCE,
        [cites(legacy_ids[0], note="imported content")],
    )

    e003 = submit(
        "formal-critic",
        {
            "summary": "Audit of the pre-governance auto-memory file found three false entries",
            "topic": "legacy-audit",
            "false_entries": ",".join(LEGACY_FALSE),
        },
        MemoryKind.EVENT,
        "2026-03-10T10:00:00Z",
        "evt-legacy-audit",
        [cites(legacy_ids[0], note="audited entry"), free_text("audit worksheet")],
    )
    _ratify(engine, e003, "2026-03-10T15:00:00Z")

    store.mark_unselected(
        auto_memory_v1.id,
        [cites(e003, note="audit response")],
        at="2026-03-10T16:00:00Z",
    )

    clock.set("2026-03-11T09:00:00Z")
    p007 = engine.propose_principle_from_event(
        e003.id,
        "Legacy memory is quarantined as unselected until audited evidence clears it.",
        author="ops-synth",
        resource_id="principle-legacy-quarantine",
    )
    _ratify(engine, p007, "2026-03-11T15:00:00Z")

    # ---- situation 2: a private lesson becomes a principle (2026-03-15) -
    lesson = submit(
        "ops-synth",
        {
            "text": "Always restate units before combining measurements.",
            "note": "learned during the March synthesis incident",
        },
        MemoryKind.LESSON,
        "2026-03-15T09:00:00Z",
        "lesson-units-check",
        [free_text("synthesis worksheet")],
        function_tag=MemoryLayer.AGENT_LOCAL,
    )
    clock.set("2026-03-15T09:30:00Z")
    p006 = engine.promote(
        lesson.id,
        "ops-synth",
        evidence=[free_text("incident retro notes")],
        rationale="every agent combines measurements",
        target_kind=MemoryKind.PRINCIPLE,
        resource_id=UNITS_PRINCIPLE,
    )
    _ratify(engine, p006, "2026-03-15T15:00:00Z")

    e008 = submit(
        "arch-reviewer",
        {
            "summary": "Units-check lesson ratified into the principle store",
            "topic": "principle-formation",
        },
        MemoryKind.EVENT,
        "2026-03-16T09:00:00Z",
        "evt-principle-formation",
        [cites(p006, note="ratified principle")],
    )
    _ratify(engine, e008, "2026-03-16T15:00:00Z")

    # ---- situation 3: version-registry selection loop (2026-03-20 ..) ---
    reg_v1 = submit(
        "arch-reviewer",
        {"resource": "memory registry", "revision": "v1 generated draft"},
        MemoryKind.VERSION_RECORD,
        "2026-03-20T09:00:00Z",
        REGISTRY_RESOURCE,
        [free_text("generation log")],
    )
    clock.set("2026-03-20T15:00:00Z")
    store.transition(
        reg_v1.id,
        RecordStatus.FAILED,
        at="2026-03-20T15:00:00Z",
        ratified_by=OPERATOR,
        regime=RegimeId.HUMAN_RATIFIED.value,
        note="review found schema defects",
    )

    e004 = submit(
        "formal-critic",
        {
            "summary": "Registry draft v1 reviewed, found defective, and marked failed",
            "topic": "registry-review",
        },
        MemoryKind.EVENT,
        "2026-03-20T16:00:00Z",
        "evt-registry-review",
        [cites(reg_v1, note="failed version")],
    )
    _ratify(engine, e004, "2026-03-20T17:00:00Z")

    reg_v2 = submit(
        "arch-reviewer",
        {"resource": "memory registry", "revision": "v2 corrected schema"},
        MemoryKind.VERSION_RECORD,
        "2026-03-21T09:00:00Z",
        REGISTRY_RESOURCE,
        [cites(reg_v1, note="revises failed draft")],
    )
    store.transition(
        reg_v2.id,
        RecordStatus.PASSED,
        at="2026-03-21T15:00:00Z",
        ratified_by=OPERATOR,
        regime=RegimeId.HUMAN_RATIFIED.value,
        note="revision passed review",
    )

    clock.set("2026-03-22T09:00:00Z")
    p008 = engine.propose_principle_from_event(
        e004.id,
        "Registry versions are reviewed before they may pass.",
        author="formal-critic",
        resource_id="principle-registry-review",
    )
    _ratify(engine, p008, "2026-03-22T15:00:00Z")

    # supporting registry population: 3 revised resources, 12 single-version
    for i in range(1, 4):
        resource = f"reg-r{i:02d}"
        v1 = submit(
            "archive-retrieval",
            {"resource": resource, "revision": "v1"},
            MemoryKind.VERSION_RECORD,
            f"2026-03-2{4 + (i - 1) // 2}T09:{i:02d}:00Z",
            resource,
            [free_text(f"{resource} checklist")],
        )
        store.transition(
            v1.id, RecordStatus.PASSED, at=f"2026-03-2{4 + (i - 1) // 2}T10:{i:02d}:00Z",
            ratified_by=OPERATOR, regime=RegimeId.HUMAN_RATIFIED.value,
        )
        v2 = submit(
            "archive-retrieval",
            {"resource": resource, "revision": "v2"},
            MemoryKind.VERSION_RECORD,
            f"2026-04-0{i}T09:00:00Z",
            resource,
            [cites(v1, note="supersedes v1")],
            supersedes=v1.id,
        )
        store.transition(
            v2.id, RecordStatus.PASSED, at=f"2026-04-0{i}T10:00:00Z",
            ratified_by=OPERATOR, regime=RegimeId.HUMAN_RATIFIED.value,
        )
    for i in range(4, 16):
        resource = f"reg-r{i:02d}"
        v1 = submit(
            "archive-retrieval",
            {"resource": resource, "revision": "v1"},
            MemoryKind.VERSION_RECORD,
            f"2026-04-{4 + i % 6:02d}T09:{i:02d}:00Z",
            resource,
            [free_text(f"{resource} checklist")],
        )
        store.transition(
            v1.id, RecordStatus.PASSED, at=f"2026-04-{4 + i % 6:02d}T10:{i:02d}:00Z",
            ratified_by=OPERATOR, regime=RegimeId.HUMAN_RATIFIED.value,
        )

    # ---- situation 4: identity-preserving expansion (2026-04-12) --------
    clock.set("2026-04-12T09:00:00Z")
    join_event = engine.register_agent(AgentIdentity(*JOINED_AGENT))
    _ratify(engine, join_event, "2026-04-12T15:00:00Z")

    # ---- situation 5: governance as learning (2026-04-15) ---------------
    e007 = submit(
        "formal-critic",
        {
            "summary": "An agent fabricated analysis from an unread source",
            "topic": "fabrication-failure",
            "cited_source_read": False,
        },
        MemoryKind.EVENT,
        "2026-04-15T09:00:00Z",
        "evt-fabrication-failure",
        [free_text("session transcript excerpt")],
    )
    _ratify(engine, e007, "2026-04-15T15:00:00Z")

    clock.set("2026-04-16T09:00:00Z")
    p003 = engine.propose_principle_from_event(
        e007.id,
        "Abstain rather than present analysis of sources that were not read.",
        author="formal-critic",
        extra_payload={
            "rule_id": "abstain-over-confabulation",
            "rule_predicate": '{"check":"payload_absent","key":"cites_unread_source"}',
            "rule_on_fail": "abstain",
        },
        resource_id=CONFAB_PRINCIPLE,
    )
    _ratify(engine, p003, "2026-04-16T15:00:00Z")

    # ---- remaining principles and events (2026-04-18 ..) ----------------
    p004 = submit(
        "arch-reviewer",
        {"text": "Every ratified record names its drafter, evidence, ratifier, and regime."},
        MemoryKind.PRINCIPLE,
        "2026-04-18T09:00:00Z",
        "principle-provenance-complete",
        [cites(e002, note="schema fields")],
    )
    _ratify(engine, p004, "2026-04-18T15:00:00Z")

    p005 = submit(
        "formal-critic",
        {"text": "Agent-local memory is private by default and promoted only deliberately."},
        MemoryKind.PRINCIPLE,
        "2026-04-19T09:00:00Z",
        "principle-local-privacy",
        [cites(join_event, note="expansion precedent")],
    )
    _ratify(engine, p005, "2026-04-19T15:00:00Z")

    e009 = submit(
        "ops-synth",
        {"summary": "Weekly handoff protocol recorded", "topic": "handoff-protocol"},
        MemoryKind.EVENT,
        "2026-04-20T09:00:00Z",
        "evt-handoff-protocol",
        [free_text("handoff checklist")],
    )
    _ratify(engine, e009, "2026-04-20T15:00:00Z")

    e010 = submit(
        "archive-retrieval",
        {"summary": "Retrieval tooling upgraded to provenance-aware search", "topic": "tooling"},
        MemoryKind.EVENT,
        "2026-04-21T09:00:00Z",
        "evt-retrieval-tooling",
        [free_text("tooling changelog")],
    )
    _ratify(engine, e010, "2026-04-21T15:00:00Z")

    # two candidates still awaiting review
    submit(
        "atlas",
        {"summary": "Synthesis queue doubled after schema change", "topic": "queue-observation"},
        MemoryKind.EVENT,
        "2026-04-22T09:00:00Z",
        "evt-queue-observation",
        [free_text("queue depth chart export"), free_text("ops dashboard snapshot")],
    )
    submit(
        "ops-synth",
        {"summary": "Two agents disagreed on archive retention wording", "topic": "retention-debate"},
        MemoryKind.EVENT,
        "2026-04-22T10:00:00Z",
        "evt-retention-debate",
        [free_text("thread permalink")],
    )

    # archive and continuity texture
    submit(
        "archive-retrieval",
        {"title": "Q1 synthesis digest", "format": "markdown"},
        MemoryKind.ARCHIVE_ARTIFACT,
        "2026-04-23T09:00:00Z",
        "art-q1-digest",
        [cites(e001, note="covers adoption"), free_text("digest source listing")],
        function_tag=MemoryLayer.ARCHIVE,
    )
    submit(
        "ops-synth",
        {"state": "handoff pending to atlas", "step": "3 of 5"},
        MemoryKind.CONTINUITY_STATE,
        "2026-04-24T09:00:00Z",
        "task-atlas-handoff",
        [free_text("handoff note")],
        function_tag=MemoryLayer.PROJECT_CONTINUITY,
        project_id="ecosystem-ops",
        ttl_rounds=30,
    )

    # founding agents' own notes (role-specific local memory)
    for agent_id, role in FOUNDING_AGENTS:
        if agent_id == "ops-synth":
            continue  # already holds the units lesson
        submit(
            agent_id,
            {"note": f"{role} working heuristics", "text": f"{role} checklist"},
            MemoryKind.LOCAL_NOTE,
            "2026-04-25T09:00:00Z",
            f"note-{agent_id}",
            [],
            function_tag=MemoryLayer.AGENT_LOCAL,
        )

    # ---- registry cleanup version, dated 2026-04-26 ----------------------
    reg_v3 = submit(
        "arch-reviewer",
        {
            "resource": "memory registry",
            "revision": "v3 cleanup: synchronized event and principle stores",
        },
        MemoryKind.VERSION_RECORD,
        f"{CLEANUP_DATE}T09:00:00Z",
        REGISTRY_RESOURCE,
        [cites(reg_v2, note="supersedes passed revision")],
        supersedes=reg_v2.id,
    )
    store.transition(
        reg_v3.id,
        RecordStatus.PASSED,
        at=f"{CLEANUP_DATE}T12:00:00Z",
        ratified_by=OPERATOR,
        regime=RegimeId.HUMAN_RATIFIED.value,
        note="cleanup recorded updated stores",
    )

    e005 = submit(
        "arch-reviewer",
        {
            "summary": "Registry cleanup recorded the updated event and principle stores",
            "topic": "registry-cleanup",
            "cleanup_date": CLEANUP_DATE,
        },
        MemoryKind.EVENT,
        f"{CLEANUP_DATE}T13:00:00Z",
        "evt-registry-cleanup",
        [cites(reg_v3, note="cleanup version")],
    )
    _ratify(engine, e005, f"{CLEANUP_DATE}T15:00:00Z")

    return store


# -- bundle encoding ---------------------------------------------------------


def write_bundle(store: StoreHandle, bundle_path: str | Path) -> Path:
    """Flatten a store into one replayable bundle file."""
    bundle_path = Path(bundle_path)
    bundle_path.parent.mkdir(parents=True, exist_ok=True)
    agents = sorted(store.known_agents())
    config_path = store.root / "governance.cfg"
    meta: dict[str, Any] = {"bundle": BUNDLE_NAME, "agents": agents}
    if config_path.exists():
        meta["config"] = canonical_loads(config_path.read_text())
    lines = [canonical_bytes(meta)]
    log_names = list(FIXED_LOGS) + [f"agents/{a}.log" for a in agents]
    for log_name in log_names:
        path = store.root / log_name
        if not path.exists():
            continue
        for raw in path.read_bytes().splitlines():
            if raw:
                lines.append(canonical_bytes({"log": log_name, "entry": canonical_loads(raw.decode("utf-8"))}))
    bundle_path.write_bytes(b"\n".join(lines) + b"\n")
    return bundle_path


def load_bundle(bundle_path: str | Path, root: str | Path) -> StoreHandle:
    """Replay a bundle into a fresh store root and open it."""
    root = Path(root)
    if root.exists() and any(root.iterdir()):
        raise ValidationError(f"refusing to load a bundle into non-empty {root}")
    root.mkdir(parents=True, exist_ok=True)
    (root / "agents").mkdir(exist_ok=True)
    raw_lines = Path(bundle_path).read_bytes().splitlines()
    if not raw_lines:
        raise ValidationError(f"bundle {bundle_path} is empty")
    meta = canonical_loads(raw_lines[0].decode("utf-8"))
    if "bundle" not in meta:
        raise ValidationError(f"bundle {bundle_path} has no meta line")
    for agent in meta.get("agents", []):
        (root / "agents" / f"{agent}.log").touch()
    if "config" in meta:
        (root / "governance.cfg").write_bytes(canonical_bytes(meta["config"]) + b"\n")
    handles: dict[str, Any] = {}
    try:
        for raw in raw_lines[1:]:
            if not raw:
                continue
            line = canonical_loads(raw.decode("utf-8"))
            log_name = line["log"]
            handle = handles.get(log_name)
            if handle is None:
                path = root / log_name
                path.parent.mkdir(exist_ok=True)
                handle = open(path, "ab")
                handles[log_name] = handle
            handle.write(canonical_bytes(line["entry"]) + b"\n")
    finally:
        for handle in handles.values():
            handle.close()
    return StoreHandle(root)


def resolve_bundle(name_or_path: str | Path) -> Path:
    """Accept a bundle path or the packaged fixture's short name."""
    candidate = Path(name_or_path)
    if candidate.exists():
        return candidate
    if str(name_or_path) == BUNDLE_NAME:
        packaged = importlib_resources.files("govmem").joinpath("data", PACKAGED_BUNDLE)
        with importlib_resources.as_file(packaged) as concrete:
            return Path(concrete)
    raise ValidationError(f"unknown fixture bundle {name_or_path!r}")


def fixture_counts(store: StoreHandle) -> dict[str, int]:
    """The headline store counts: events, principles, registry size."""
    shared = store.records_in_layer(MemoryLayer.SHARED_INSTITUTIONAL)
    events = [r for r in shared if r.kind is MemoryKind.EVENT]
    versions = [r for r in shared if r.kind is MemoryKind.VERSION_RECORD]
    active = store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
    return {
        "events_total": len(events),
        "events_ratified": sum(1 for r in events if r.status is RecordStatus.RATIFIED),
        "events_pending": sum(
            1 for r in events if r.status is RecordStatus.PENDING_REVIEW
        ),
        "principles_active": sum(
            1
            for r in active
            if r.kind is MemoryKind.PRINCIPLE and r.status is RecordStatus.RATIFIED
        ),
        "registry_versions": len(versions),
        "registry_resources": len({r.resource_id for r in versions}),
    }


def build_bundle_file(bundle_path: str | Path) -> Path:
    """Build the ecosystem in a scratch dir and write its bundle."""
    with tempfile.TemporaryDirectory() as scratch:
        store = build_paper_ecosystem(Path(scratch) / "store")
        try:
            return write_bundle(store, bundle_path)
        finally:
            store.close()


def _regenerate_checked_in_bundles() -> None:
    package_data = Path(__file__).parent / "data" / PACKAGED_BUNDLE
    build_bundle_file(package_data)
    repo_root = Path(__file__).resolve().parents[2]
    repo_fixture = repo_root / "fixtures" / PACKAGED_BUNDLE
    repo_fixture.parent.mkdir(exist_ok=True)
    shutil.copyfile(package_data, repo_fixture)
    print(f"wrote {package_data}")
    print(f"wrote {repo_fixture}")


if __name__ == "__main__":
    _regenerate_checked_in_bundles()
