"""Governed collaborative memory engine for multi-agent systems.

An append-only, provenance-carrying memory store with four layers,
pluggable selection regimes over institutional candidates, a human
ratification workflow, and a deterministic simulation harness that
compares the regimes.
"""

from .canonical import canonical_bytes, canonical_dumps, content_hash
from .engine import GovernanceEngine, GovernancePath, ReviewQueue, route
from .errors import (
    BoundaryViolation,
    ConfigError,
    ConflictError,
    GovMemError,
    LockError,
    NotFoundError,
    PreconditionError,
    ValidationError,
)
from .model import (
    AgentIdentity,
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    Provenance,
    RecordStatus,
    canonical_serialize,
    compute_record_id,
    validate_record,
)
from .regimes import (
    ConstitutionRule,
    GovernanceConfig,
    MetricSpec,
    Outcome,
    RegimeDecision,
    RegimeId,
)
from .store import LineageChain, StoreHandle

__version__ = "0.1.0"
