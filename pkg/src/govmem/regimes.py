"""The four selection regimes as interchangeable decision policies.

Ungoverned persistence ratifies everything it sees; the constitutional
regime evaluates human-authored declarative rules; the automatic regime
scores candidates against a metric threshold; the human-ratified regime
only ever enqueues, leaving the terminal outcome to an external
ratifier.

Rules and metric predicates are data, not code, so a constitution can
itself be stored as ratified principle records and reloaded into the
rule set — a ratified lesson becomes an enforced rule.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from .canonical import canonical_bytes, canonical_loads
from .errors import ConfigError
from .model import MemoryKind, MemoryRecord

GOVERNANCE_CONFIG_NAME = "governance.cfg"


class RegimeId(str, Enum):
    UNGOVERNED = "ungoverned"
    CONSTITUTIONAL = "constitutional"
    AUTOMATIC = "automatic"
    HUMAN_RATIFIED = "human_ratified"


class Outcome(str, Enum):
    RATIFY = "ratify"
    REJECT = "reject"
    ABSTAIN = "abstain"
    PENDING = "pending"


@dataclass(frozen=True)
class RegimeDecision:
    outcome: Outcome
    rationale: str
    rule_or_metric: Optional[str] = None
    score: Optional[float] = None


@dataclass(frozen=True)
class ConstitutionRule:
    rule_id: str
    description: str
    predicate: dict[str, Any]
    on_fail: Outcome = Outcome.REJECT

    def __post_init__(self) -> None:
        if self.on_fail not in (Outcome.REJECT, Outcome.ABSTAIN):
            raise ConfigError(f"rule {self.rule_id!r}: on_fail must be reject or abstain")

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "description": self.description,
            "predicate": self.predicate,
            "on_fail": self.on_fail.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ConstitutionRule":
        try:
            return cls(
                rule_id=data["rule_id"],
                description=data.get("description", ""),
                predicate=data["predicate"],
                on_fail=Outcome(data.get("on_fail", "reject")),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"malformed constitution rule: {exc}") from exc


@dataclass(frozen=True)
class MetricSpec:
    metric_id: str
    threshold: float
    evaluator: str = "evidence_coverage"
    kinds: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"metric {self.metric_id!r}: threshold must be in [0,1]")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "metric_id": self.metric_id,
            "threshold": self.threshold,
            "evaluator": self.evaluator,
        }
        if self.kinds is not None:
            out["kinds"] = list(self.kinds)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricSpec":
        try:
            kinds = data.get("kinds")
            return cls(
                metric_id=data["metric_id"],
                threshold=data["threshold"],
                evaluator=data.get("evaluator", "evidence_coverage"),
                kinds=tuple(kinds) if kinds is not None else None,
            )
        except KeyError as exc:
            raise ConfigError(f"malformed metric spec: {exc}") from exc


# -- declarative predicates ---------------------------------------------


def eval_predicate(predicate: dict[str, Any], candidate: MemoryRecord) -> bool:
    """Evaluate one declarative check against a candidate record.

    Checks see only candidate fields; the simulator's hidden truth tags
    are invisible here by design.
    """
    try:
        check = predicate["check"]
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"predicate missing 'check': {predicate!r}") from exc
    payload = candidate.payload
    try:
        if check == "evidence_min":
            return len(candidate.provenance.evidence) >= int(predicate["count"])
        if check == "payload_present":
            value = payload.get(predicate["key"])
            return value not in (None, "", False)
        if check == "payload_absent":
            value = payload.get(predicate["key"])
            return value in (None, "", False, 0)
        if check == "payload_equals":
            return payload.get(predicate["key"]) == predicate["value"]
        if check == "payload_not_equals":
            return payload.get(predicate["key"]) != predicate["value"]
        if check == "payload_matches":
            value = payload.get(predicate["key"])
            return isinstance(value, str) and bool(
                re.search(predicate["pattern"], value)
            )
        if check == "payload_not_matches":
            value = payload.get(predicate["key"])
            return not (
                isinstance(value, str) and re.search(predicate["pattern"], value)
            )
        if check == "kind_in":
            return candidate.kind.value in predicate["kinds"]
    except (KeyError, TypeError, re.error) as exc:
        raise ConfigError(f"malformed predicate {predicate!r}: {exc}") from exc
    raise ConfigError(f"unknown predicate check {check!r}")


# -- metric evaluators ----------------------------------------------------

MetricFn = Callable[[MemoryRecord], float]

_BUILTIN_METRICS: dict[str, MetricFn] = {}


def register_metric(name: str, fn: MetricFn, registry: Optional[dict[str, MetricFn]] = None) -> None:
    (registry if registry is not None else _BUILTIN_METRICS)[name] = fn


def evidence_coverage(candidate: MemoryRecord) -> float:
    """Fraction of payload claims carrying an evidence ref.

    Claims are payload keys prefixed ``claim:``; an evidence ref covers
    a claim when its note names that key. A record with no claim keys
    is treated as one claim, covered iff any evidence is attached.
    """
    claims = sorted(k for k in candidate.payload if k.startswith("claim:"))
    if not claims:
        return 1.0 if candidate.provenance.evidence else 0.0
    notes = {ref.note for ref in candidate.provenance.evidence if ref.note}
    covered = sum(1 for claim in claims if claim in notes)
    return covered / len(claims)


register_metric("evidence_coverage", evidence_coverage)


# -- the four regimes ------------------------------------------------------


def decide_ungoverned(candidate: MemoryRecord) -> RegimeDecision:
    """Persist without deliberate evaluation; evidence is never inspected."""
    return RegimeDecision(outcome=Outcome.RATIFY, rationale="ungoverned persistence")


def decide_constitutional(
    candidate: MemoryRecord, rules: Iterable[ConstitutionRule]
) -> RegimeDecision:
    """First failing rule (in rule_id order) determines the outcome."""
    ordered = sorted(rules, key=lambda r: r.rule_id)
    if not ordered:
        raise ConfigError("constitutional regime requires a non-empty rule set")
    for rule in ordered:
        if not eval_predicate(rule.predicate, candidate):
            return RegimeDecision(
                outcome=rule.on_fail,
                rationale=f"rule {rule.rule_id!r} failed: {rule.description}",
                rule_or_metric=rule.rule_id,
            )
    return RegimeDecision(
        outcome=Outcome.RATIFY,
        rationale=f"all {len(ordered)} constitution rules passed",
        rule_or_metric=f"all({len(ordered)})",
    )


def decide_automatic(
    candidate: MemoryRecord,
    spec: MetricSpec,
    registry: Optional[dict[str, MetricFn]] = None,
) -> RegimeDecision:
    """Score against the metric; ratify iff score >= threshold (ties ratify)."""
    if spec.kinds is not None and candidate.kind.value not in spec.kinds:
        return RegimeDecision(
            outcome=Outcome.ABSTAIN,
            rationale="no metric defined",
            rule_or_metric=spec.metric_id,
        )
    lookup = dict(_BUILTIN_METRICS)
    if registry:
        lookup.update(registry)
    fn = lookup.get(spec.evaluator)
    if fn is None:
        raise ConfigError(f"metric evaluator {spec.evaluator!r} is not registered")
    score = float(fn(candidate))
    score = min(1.0, max(0.0, score))
    if score >= spec.threshold:
        return RegimeDecision(
            outcome=Outcome.RATIFY,
            rationale=f"{spec.metric_id} score {score:.3f} >= {spec.threshold:.3f}",
            rule_or_metric=spec.metric_id,
            score=score,
        )
    return RegimeDecision(
        outcome=Outcome.REJECT,
        rationale=f"{spec.metric_id} score {score:.3f} < {spec.threshold:.3f}",
        rule_or_metric=spec.metric_id,
        score=score,
    )


def decide_human(candidate: MemoryRecord, queue: Any) -> RegimeDecision:
    """Enqueue for an external ratifier; the terminal outcome arrives later."""
    queue.enqueue(candidate.id, candidate.created_at)
    return RegimeDecision(
        outcome=Outcome.PENDING,
        rationale="awaiting human ratification",
    )


# -- governance configuration ----------------------------------------------

DEFAULT_RULES = (
    ConstitutionRule(
        rule_id="require-evidence",
        description="institutional candidates must carry inspectable evidence",
        predicate={"check": "evidence_min", "count": 1},
        on_fail=Outcome.REJECT,
    ),
)

DEFAULT_METRIC = MetricSpec(metric_id="evidence-coverage", threshold=0.75)


@dataclass
class GovernanceConfig:
    regime: RegimeId = RegimeId.HUMAN_RATIFIED
    ratifier: str = "operator"
    constitution: tuple[ConstitutionRule, ...] = DEFAULT_RULES
    metric: MetricSpec = DEFAULT_METRIC
    ttl_unit: str = "rounds"

    def to_dict(self) -> dict[str, Any]:
        return {
            "regime": self.regime.value,
            "ratifier": self.ratifier,
            "constitution": [rule.to_dict() for rule in self.constitution],
            "metric": self.metric.to_dict(),
            "ttl_unit": self.ttl_unit,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GovernanceConfig":
        try:
            return cls(
                regime=RegimeId(data.get("regime", "human_ratified")),
                ratifier=data.get("ratifier", "operator"),
                constitution=tuple(
                    ConstitutionRule.from_dict(r) for r in data.get("constitution", [])
                )
                or DEFAULT_RULES,
                metric=MetricSpec.from_dict(data["metric"])
                if "metric" in data
                else DEFAULT_METRIC,
                ttl_unit=data.get("ttl_unit", "rounds"),
            )
        except ValueError as exc:
            raise ConfigError(f"malformed governance config: {exc}") from exc


def save_governance_config(root: str | Path, config: GovernanceConfig) -> Path:
    path = Path(root) / GOVERNANCE_CONFIG_NAME
    path.write_bytes(canonical_bytes(config.to_dict()) + b"\n")
    return path


def load_governance_config(root: str | Path) -> GovernanceConfig:
    path = Path(root) / GOVERNANCE_CONFIG_NAME
    if not path.exists():
        return GovernanceConfig()
    try:
        return GovernanceConfig.from_dict(canonical_loads(path.read_text()))
    except (json.JSONDecodeError, TypeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def rule_from_principle(record: MemoryRecord) -> Optional[ConstitutionRule]:
    """Read a rule out of a ratified principle's rule-shaped payload.

    The payload is a flat scalar map, so the predicate travels as a
    canonical-JSON string under ``rule_predicate``.
    """
    if record.kind is not MemoryKind.PRINCIPLE:
        return None
    rule_id = record.payload.get("rule_id")
    raw_predicate = record.payload.get("rule_predicate")
    if not isinstance(rule_id, str) or not isinstance(raw_predicate, str):
        return None
    try:
        predicate = json.loads(raw_predicate)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"principle {record.resource_id!r} carries unparseable rule_predicate"
        ) from exc
    on_fail = record.payload.get("rule_on_fail", "reject")
    text = record.payload.get("text", "")
    return ConstitutionRule(
        rule_id=rule_id,
        description=str(text),
        predicate=predicate,
        on_fail=Outcome(str(on_fail)),
    )
