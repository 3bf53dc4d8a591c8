"""Deterministic scripted-agent scenarios comparing the selection regimes.

One scenario runs an identical candidate stream through one regime and
measures what survived: false-memory persistence, correction latency,
provenance fidelity, selection traceability, role divergence, and the
review-queue peak. Everything is derived from one 64-bit seed.

Scenario contract (the replay oracle in the test suite re-implements
this independently; change one side only with the other):

* PRNG: numpy PCG64. ``SeedSequence(seed).spawn(n_agents + 4)`` yields
  one child per agent, then audit, oracle, metric, and stratify streams,
  in that order. The generator name is pinned in scenario files.
* Slots: ``slot(round, agent, k) = ((round-1)*n_agents + agent)*cpr + k``;
  ``n_false = floor(false_fraction * total + 0.5)`` slots are false,
  chosen as the first ``n_false`` entries of a stratify-stream
  permutation of ``range(total)``.
* Per candidate, the agent stream is consumed once (evidence draw,
  present with probability 0.75); after an agent's candidates each
  round, two more draws produce one local note (pool choice, index).
* Round phases: (1) submissions, agent by agent, immediately decided by
  non-human regimes; (2) the scripted ratifier drains the queue FIFO -
  evidence-free candidates are rejected without consuming randomness,
  otherwise one oracle draw decides correctly with probability q;
  (3) each active false record without an in-flight correction draws once
  from the audit stream and, with probability p_a, a correction
  superseding it is submitted through the same regime.
* The automatic regime's metric consumes one metric-stream draw only
  for evidence-carrying false candidates (detected with probability d);
  evidence-free candidates score 0, true ones 1. Threshold 0.5.

Truth tags live outside record payloads (a slot-set closure); regimes
only ever see candidate fields.
"""

from __future__ import annotations

import io
import json
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from numpy.random import PCG64, Generator, SeedSequence

from .canonical import (
    canonical_bytes,
    canonical_dumps,
    canonical_loads,
    round_timestamp,
    timestamp_round,
)
from .engine import GovernanceEngine
from .errors import ConfigError, ValidationError
from .fixtures import (
    AUTO_MEMORY_RESOURCE,
    CONFAB_PRINCIPLE,
    LEGACY_FALSE,
    REGISTRY_RESOURCE,
    UNITS_PRINCIPLE,
    fixture_counts,
    load_bundle,
    resolve_bundle,
)
from .metrics import complete_provenance, provenance_fidelity, selection_traceability
from .model import (
    ACCEPTED_STATUSES,
    AgentIdentity,
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    RecordStatus,
)
from .regimes import (
    DEFAULT_RULES,
    ConstitutionRule,
    GovernanceConfig,
    MetricSpec,
    RegimeId,
)
from .store import StoreHandle

ROLES = ("architect", "ops", "archivist", "critic")
EVIDENCE_RATE = 0.75
TRUTH_PROBE_THRESHOLD = 0.5
PINNED_RNG = "pcg64-seedsequence"

REPORT_FIELDS = (
    "regime",
    "false_memory_persistence",
    "mean_correction_latency_rounds",
    "provenance_fidelity",
    "selection_traceability",
    "role_divergence",
    "queue_peak",
    "counts",
)


@dataclass(frozen=True)
class ScenarioConfig:
    n_agents: int
    rounds: int
    candidates_per_agent_per_round: int
    false_fraction: float
    audit_probability: float
    oracle_accuracy: float
    metric_detection: float
    seed: int
    constitution: tuple[ConstitutionRule, ...] = DEFAULT_RULES

    def validate(self) -> None:
        problems = []
        if self.n_agents < 2:
            problems.append("n_agents must be >= 2 (role divergence needs pairs)")
        if self.rounds < 1:
            problems.append("rounds must be positive")
        if self.candidates_per_agent_per_round < 1:
            problems.append("candidates_per_agent_per_round must be positive")
        for name in ("false_fraction", "audit_probability", "oracle_accuracy", "metric_detection"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                problems.append(f"{name} must be in [0,1]")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be a 64-bit unsigned integer")
        if not any(
            rule.predicate.get("check") == "evidence_min" for rule in self.constitution
        ):
            problems.append(
                "constitution must keep an evidence_min rule: non-ungoverned "
                "ratification of evidence-free shared records is invalid"
            )
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def total_candidates(self) -> int:
        return self.rounds * self.n_agents * self.candidates_per_agent_per_round

    @property
    def n_false(self) -> int:
        return math.floor(self.false_fraction * self.total_candidates + 0.5)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rng": PINNED_RNG,
            "n_agents": self.n_agents,
            "rounds": self.rounds,
            "candidates_per_agent_per_round": self.candidates_per_agent_per_round,
            "false_fraction": self.false_fraction,
            "audit_probability": self.audit_probability,
            "oracle_accuracy": self.oracle_accuracy,
            "metric_detection": self.metric_detection,
            "seed": self.seed,
            "constitution": [rule.to_dict() for rule in self.constitution],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        rng = data.get("rng", PINNED_RNG)
        if rng != PINNED_RNG:
            raise ConfigError(
                f"scenario pins generator {rng!r}; this build implements {PINNED_RNG!r}"
            )
        try:
            config = cls(
                n_agents=data["n_agents"],
                rounds=data["rounds"],
                candidates_per_agent_per_round=data["candidates_per_agent_per_round"],
                false_fraction=data["false_fraction"],
                audit_probability=data["audit_probability"],
                oracle_accuracy=data["oracle_accuracy"],
                metric_detection=data["metric_detection"],
                seed=data["seed"],
                constitution=tuple(
                    ConstitutionRule.from_dict(r) for r in data.get("constitution", [])
                )
                or DEFAULT_RULES,
            )
        except KeyError as exc:
            raise ConfigError(f"scenario config missing field: {exc}") from exc
        config.validate()
        return config

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_bytes(canonical_bytes(self.to_dict()) + b"\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            return cls.from_dict(canonical_loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse scenario config {path}: {exc}") from exc


@dataclass(frozen=True)
class RegimeReport:
    regime: RegimeId
    false_memory_persistence: float
    mean_correction_latency_rounds: Optional[float]
    provenance_fidelity: float
    selection_traceability: float
    role_divergence: float
    queue_peak: int
    counts: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "regime": self.regime.value,
            "false_memory_persistence": self.false_memory_persistence,
            "mean_correction_latency_rounds": self.mean_correction_latency_rounds,
            "provenance_fidelity": self.provenance_fidelity,
            "selection_traceability": self.selection_traceability,
            "role_divergence": self.role_divergence,
            "queue_peak": self.queue_peak,
            "counts": dict(self.counts),
        }

    def canonical(self) -> bytes:
        return canonical_bytes(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RegimeReport":
        return cls(
            regime=RegimeId(data["regime"]),
            false_memory_persistence=data["false_memory_persistence"],
            mean_correction_latency_rounds=data["mean_correction_latency_rounds"],
            provenance_fidelity=data["provenance_fidelity"],
            selection_traceability=data["selection_traceability"],
            role_divergence=data["role_divergence"],
            queue_peak=data["queue_peak"],
            counts=dict(data["counts"]),
        )


class _SimClock:
    def __init__(self) -> None:
        self.round = 0

    def __call__(self) -> str:
        return round_timestamp(self.round)


def _split_streams(config: ScenarioConfig):
    children = SeedSequence(config.seed).spawn(config.n_agents + 4)
    agents = [Generator(PCG64(children[i])) for i in range(config.n_agents)]
    audit = Generator(PCG64(children[config.n_agents]))
    oracle = Generator(PCG64(children[config.n_agents + 1]))
    metric = Generator(PCG64(children[config.n_agents + 2]))
    stratify = Generator(PCG64(children[config.n_agents + 3]))
    return agents, audit, oracle, metric, stratify


def run_scenario(
    config: ScenarioConfig,
    regime: RegimeId | str,
    work_dir: Optional[str | Path] = None,
) -> RegimeReport:
    """Run one regime over the scenario's candidate stream, via the full engine."""
    regime = RegimeId(regime)
    config.validate()
    if work_dir is None:
        with tempfile.TemporaryDirectory() as scratch:
            return _run(config, regime, Path(scratch) / "store")
    return _run(config, regime, Path(work_dir))


def _run(config: ScenarioConfig, regime: RegimeId, root: Path) -> RegimeReport:
    agents_rng, audit_rng, oracle_rng, metric_rng, stratify_rng = _split_streams(config)
    total = config.total_candidates
    false_slots = set(stratify_rng.permutation(total)[: config.n_false].tolist())

    def is_false(record: MemoryRecord) -> bool:
        if record.payload.get("correction"):
            return False
        slot = record.payload.get("slot")
        return isinstance(slot, int) and slot in false_slots

    def truth_probe(record: MemoryRecord) -> float:
        if not record.provenance.evidence:
            return 0.0
        if is_false(record):
            return 0.0 if metric_rng.random() < config.metric_detection else 1.0
        return 1.0

    clock = _SimClock()
    store = StoreHandle(root, create=True)
    try:
        engine = GovernanceEngine(
            store,
            config=GovernanceConfig(
                regime=regime,
                ratifier="sim-oracle",
                constitution=config.constitution,
                metric=MetricSpec(
                    metric_id="truth-probe",
                    threshold=TRUTH_PROBE_THRESHOLD,
                    evaluator="truth-probe",
                ),
            ),
            clock=clock,
            metric_registry={"truth-probe": truth_probe},
        )
        agent_ids = [f"sim-{i:02d}" for i in range(config.n_agents)]
        for agent_id in agent_ids:
            store.create_agent_log(agent_id)

        all_candidates: list[str] = []
        ratified_round: dict[str, int] = {}
        in_flight: set[str] = set()

        def submit_shared(payload, resource_id, evidence, author, supersedes=None) -> MemoryRecord:
            record = engine.submit_candidate(
                payload=payload,
                kind=MemoryKind.EVENT,
                author=author,
                function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
                evidence=evidence,
                resource_id=resource_id,
                supersedes=supersedes,
            )
            all_candidates.append(record.id)
            if record.status is RecordStatus.RATIFIED:
                ratified_round[record.id] = clock.round
            return record

        for rnd in range(1, config.rounds + 1):
            clock.round = rnd

            # phase 1: submissions plus one local note per agent
            for i, agent_id in enumerate(agent_ids):
                role = ROLES[i % len(ROLES)]
                for k in range(config.candidates_per_agent_per_round):
                    slot = ((rnd - 1) * config.n_agents + i) * config.candidates_per_agent_per_round + k
                    has_evidence = agents_rng[i].random() < EVIDENCE_RATE
                    evidence = (
                        [EvidenceRef(EvidenceKind.FREE_TEXT, f"field note {slot}")]
                        if has_evidence
                        else []
                    )
                    submit_shared(
                        payload={"topic": f"{role}/round-{rnd}/obs-{k}", "slot": slot},
                        resource_id=f"obs-{agent_id}-r{rnd}-k{k}",
                        evidence=evidence,
                        author=agent_id,
                    )
                u_pool = agents_rng[i].random()
                note_idx = int(agents_rng[i].integers(0, 20))
                text = (
                    f"{role}-heuristic-{note_idx}"
                    if u_pool < 0.5
                    else f"common-practice-{note_idx}"
                )
                engine.submit_candidate(
                    payload={"note": text},
                    kind=MemoryKind.LOCAL_NOTE,
                    author=agent_id,
                    function_tag=MemoryLayer.AGENT_LOCAL,
                    resource_id=f"note-{agent_id}-r{rnd}",
                )

            # phase 2: scripted ratifier drains the queue FIFO
            if regime is RegimeId.HUMAN_RATIFIED:
                for candidate_id in engine.queue.pending_ids():
                    record = store.get(candidate_id)
                    if not record.provenance.evidence:
                        outcome = "rejected"
                    else:
                        correct = oracle_rng.random() < config.oracle_accuracy
                        wanted = "ratified" if not is_false(record) else "rejected"
                        outcome = (
                            wanted
                            if correct
                            else ("rejected" if wanted == "ratified" else "ratified")
                        )
                    decided = engine.apply_decision(
                        candidate_id, outcome, ratifier="sim-oracle"
                    )
                    if decided.status is RecordStatus.RATIFIED:
                        ratified_round[candidate_id] = rnd
                    in_flight.discard(decided.resource_id)

            # phase 3: audits over active false records, append order
            snapshot = store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
            for record in snapshot:
                if not is_false(record) or record.resource_id in in_flight:
                    continue
                if audit_rng.random() >= config.audit_probability:
                    continue
                correction = submit_shared(
                    payload={
                        "topic": record.payload["topic"],
                        "slot": record.payload["slot"],
                        "correction": True,
                    },
                    resource_id=record.resource_id,
                    evidence=[EvidenceRef(EvidenceKind.FREE_TEXT, f"audit finding r{rnd}")],
                    author=record.provenance.drafted_by,
                    supersedes=record.id,
                )
                if correction.status is RecordStatus.PENDING_REVIEW:
                    in_flight.add(record.resource_id)

        # ---- metrics from the final store state -------------------------
        persistence = false_memory_persistence(store, is_false, total)
        latency = correction_latency(store, is_false)
        divergence = role_divergence(store, agent_ids)
        counts: dict[str, int] = {}
        for candidate_id in all_candidates:
            status = store.get(candidate_id).status.value
            counts[status] = counts.get(status, 0) + 1

        return RegimeReport(
            regime=regime,
            false_memory_persistence=persistence,
            mean_correction_latency_rounds=latency,
            provenance_fidelity=provenance_fidelity(store),
            selection_traceability=selection_traceability(store),
            role_divergence=divergence,
            queue_peak=engine.queue.peak,
            counts=counts,
        )
    finally:
        store.close()


# -- report metric operations -------------------------------------------------


def false_memory_persistence(
    store: StoreHandle, is_false: Callable[[MemoryRecord], bool], total_generated: int
) -> float:
    """Fraction of the generated candidate stream surviving as false active state."""
    if total_generated == 0:
        return 0.0
    active = store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
    return sum(1 for record in active if is_false(record)) / total_generated


def correction_latency(
    store: StoreHandle, is_false: Callable[[MemoryRecord], bool]
) -> Optional[float]:
    """Mean rounds between a false record's ratification and its supersession."""
    latencies: list[int] = []
    for record in store.records_in_layer(MemoryLayer.SHARED_INSTITUTIONAL):
        target_id = record.provenance.supersedes
        if target_id is None or record.status not in ACCEPTED_STATUSES:
            continue
        target = store.get(target_id)
        if target.status is not RecordStatus.SUPERSEDED or not is_false(target):
            continue
        if not (target.provenance.decided_at and record.provenance.decided_at):
            continue
        latencies.append(
            timestamp_round(record.provenance.decided_at)
            - timestamp_round(target.provenance.decided_at)
        )
    if not latencies:
        return None
    return sum(latencies) / len(latencies)


def role_divergence(store: StoreHandle, agent_ids: Iterable[str]) -> float:
    """One minus the mean pairwise Jaccard similarity of local payload sets."""
    agent_ids = list(agent_ids)
    if len(agent_ids) < 2:
        raise ValidationError("role divergence needs at least 2 agents")
    payload_sets = []
    for agent_id in agent_ids:
        records = store.read_scoped(agent_id, MemoryLayer.AGENT_LOCAL)
        payload_sets.append({canonical_dumps(r.payload) for r in records})
    similarities = []
    for i in range(len(payload_sets)):
        for j in range(i + 1, len(payload_sets)):
            a, b = payload_sets[i], payload_sets[j]
            if not a and not b:
                similarities.append(1.0)
            else:
                similarities.append(len(a & b) / len(a | b))
    return 1.0 - sum(similarities) / len(similarities)


def reports_to_csv(reports: Iterable[RegimeReport]) -> str:
    """One flat row per regime, for external plotting."""
    import csv

    out = io.StringIO()
    count_keys = ("ratified", "rejected", "abstained", "pending_review", "superseded")
    writer = csv.writer(out)
    writer.writerow(
        [
            "regime",
            "false_memory_persistence",
            "mean_correction_latency_rounds",
            "provenance_fidelity",
            "selection_traceability",
            "role_divergence",
            "queue_peak",
            *count_keys,
        ]
    )
    for report in reports:
        latency = report.mean_correction_latency_rounds
        writer.writerow(
            [
                report.regime.value,
                repr(report.false_memory_persistence),
                "" if latency is None else repr(latency),
                repr(report.provenance_fidelity),
                repr(report.selection_traceability),
                repr(report.role_divergence),
                report.queue_peak,
                *[report.counts.get(key, 0) for key in count_keys],
            ]
        )
    return out.getvalue()


# -- replaying the reference ecosystem ----------------------------------------


@dataclass(frozen=True)
class TraceCheck:
    trace: str
    passed: bool
    expected: str
    actual: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "trace": self.trace,
            "passed": self.passed,
            "expected": self.expected,
            "actual": self.actual,
        }


@dataclass(frozen=True)
class TraceReport:
    checks: tuple[TraceCheck, ...]
    counts: dict[str, int]

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> list[TraceCheck]:
        return [check for check in self.checks if not check.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "all_passed": self.all_passed,
            "counts": dict(self.counts),
            "checks": [check.to_dict() for check in self.checks],
        }

    def canonical(self) -> bytes:
        return canonical_bytes(self.to_dict())


def replay_paper_traces(
    fixture_bundle: str | Path, work_dir: Optional[str | Path] = None
) -> TraceReport:
    """Replay the five documented ecosystem traces end to end."""
    bundle = resolve_bundle(fixture_bundle)
    if work_dir is None:
        with tempfile.TemporaryDirectory() as scratch:
            return _replay_traces(bundle, Path(scratch) / "store")
    return _replay_traces(bundle, Path(work_dir))


def _describe(value: Any) -> str:
    if isinstance(value, (list, dict)) and len(str(value)) > 120:
        from .canonical import content_hash

        return f"{len(value)} entries, digest {content_hash(value)[:12]}"
    return str(value)


def _check(checks, trace, expected, actual):
    checks.append(
        TraceCheck(
            trace=trace,
            passed=expected == actual,
            expected=_describe(expected),
            actual=_describe(actual),
        )
    )


def _replay_traces(bundle: Path, root: Path) -> TraceReport:
    store = load_bundle(bundle, root)
    checks: list[TraceCheck] = []
    try:
        counts = fixture_counts(store)

        # trace 1: false legacy entries persist only as unselected records
        active_resources = {
            r.resource_id for r in store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
        }
        statuses = [store.lineage(res).statuses()[-1].value for res in LEGACY_FALSE]
        _check(checks, "unselected-legacy", ["unselected"] * 3, statuses)
        _check(
            checks,
            "unselected-legacy-excluded",
            [],
            sorted(set(LEGACY_FALSE) & active_resources),
        )
        _check(
            checks,
            "unselected-legacy-registry",
            ["unselected"],
            [s.value for s in store.lineage(AUTO_MEMORY_RESOURCE).statuses()],
        )

        # trace 2: a promoted lesson became a ratified principle
        units = store.lineage(UNITS_PRINCIPLE)
        principle = store.get(units.versions[-1][0])
        _check(checks, "principle-formation-status", "ratified", principle.status.value)
        _check(checks, "principle-formation-provenance", True, complete_provenance(principle))
        source_refs = [
            ref.value
            for ref in principle.provenance.evidence
            if ref.kind is EvidenceKind.RECORD_ID
        ]
        source_layers = sorted({store.get(ref).layer.value for ref in source_refs})
        _check(checks, "principle-formation-cites-local-lesson", ["agent_local"], source_layers)

        # trace 3: failed -> passed -> cleanup, nothing erased
        registry = store.lineage(REGISTRY_RESOURCE)
        _check(
            checks,
            "registry-selection-loop",
            ["failed", "superseded", "passed"],
            [s.value for s in registry.statuses()],
        )
        _check(
            checks,
            "registry-no-erasure",
            3,
            sum(1 for rid, _, _ in registry.versions if store.has(rid)),
        )

        # trace 4: joining expands shared memory without merging local memory
        agents_before = sorted(store.known_agents())
        local_before = {
            agent: [r.id for r in store.read_scoped(agent, MemoryLayer.AGENT_LOCAL)]
            for agent in agents_before
        }
        active_before = [
            r.id for r in store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
        ]
        engine = GovernanceEngine(store, clock=lambda: "2026-05-01T09:00:00Z")
        join_event = engine.register_agent(AgentIdentity("scout", "survey"))
        _check(checks, "join-event-pends", "pending_review", join_event.status.value)
        active_after = [
            r.id for r in store.active_view(MemoryLayer.SHARED_INSTITUTIONAL)
        ]
        _check(checks, "join-preserves-shared-active", active_before, active_after)
        local_after = {
            agent: [r.id for r in store.read_scoped(agent, MemoryLayer.AGENT_LOCAL)]
            for agent in agents_before
        }
        _check(checks, "join-preserves-local-stores", local_before, local_after)
        _check(
            checks,
            "join-new-local-store-empty",
            [],
            [r.id for r in store.read_scoped("scout", MemoryLayer.AGENT_LOCAL)],
        )

        # trace 5: a documented failure became an enforced rule
        confab = store.lineage(CONFAB_PRINCIPLE)
        principle = store.get(confab.versions[-1][0])
        _check(checks, "learning-principle-ratified", "ratified", principle.status.value)
        cited = [
            store.get(ref.value).resource_id
            for ref in principle.provenance.evidence
            if ref.kind is EvidenceKind.RECORD_ID
        ]
        _check(checks, "learning-cites-failure-event", ["evt-fabrication-failure"], cited)
        constitutional = GovernanceEngine(
            store,
            config=GovernanceConfig(
                regime=RegimeId.CONSTITUTIONAL, constitution=DEFAULT_RULES
            ),
            clock=lambda: "2026-05-01T10:00:00Z",
        )
        constitutional.reload_rules()
        flagged = constitutional.submit_candidate(
            payload={"topic": "hasty analysis", "cites_unread_source": True},
            kind=MemoryKind.EVENT,
            author="arch-reviewer",
            function_tag=MemoryLayer.SHARED_INSTITUTIONAL,
            evidence=[EvidenceRef(EvidenceKind.FREE_TEXT, "draft notes")],
            resource_id="evt-replay-confab-probe",
        )
        _check(checks, "learning-changes-decisions", "abstained", flagged.status.value)

        return TraceReport(checks=tuple(checks), counts=counts)
    finally:
        store.close()
