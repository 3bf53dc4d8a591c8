"""Canonical serialization and content addressing.

One byte form per value: object keys sorted lexicographically by code
point, UTF-8, no insignificant whitespace, numbers in shortest
round-trip decimal form, absent optional fields omitted entirely. The
same bytes are the on-disk log line format, the API response body, and
the input to record ids, so clients can re-verify any hash they are
handed.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from datetime import datetime, timezone
from typing import Any

from .errors import ValidationError

RFC3339_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|\+00:00)$"
)
HEX64_RE = re.compile(r"^[0-9a-f]{64}$")

Scalar = str | int | float | bool | None


def canonical_dumps(value: Any) -> str:
    """Render a plain dict/list/scalar tree in canonical form."""
    _check_serializable(value, "$")
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def canonical_bytes(value: Any) -> bytes:
    return canonical_dumps(value).encode("utf-8")


def content_hash(value: Any) -> str:
    """Lowercase-hex SHA-256 of the canonical bytes of ``value``."""
    return hashlib.sha256(canonical_bytes(value)).hexdigest()


def canonical_loads(text: str) -> Any:
    return json.loads(text)


def _check_serializable(value: Any, path: str) -> None:
    if value is None or isinstance(value, (str, bool, int)):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"{path}: non-finite number is not serializable")
        return
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check_serializable(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise ValidationError(f"{path}: object keys must be strings, got {type(key).__name__}")
            _check_serializable(item, f"{path}.{key}")
        return
    raise ValidationError(f"{path}: value of type {type(value).__name__} is not serializable")


def is_rfc3339_utc(text: str) -> bool:
    """True for an RFC 3339 UTC timestamp string (Z or +00:00 offset)."""
    if not isinstance(text, str) or not RFC3339_RE.match(text):
        return False
    try:
        parse_timestamp(text)
    except ValueError:
        return False
    return True


def parse_timestamp(text: str) -> datetime:
    normalized = text[:-1] + "+00:00" if text.endswith("Z") else text
    parsed = datetime.fromisoformat(normalized)
    if parsed.utcoffset() is None or parsed.utcoffset().total_seconds() != 0:
        raise ValueError(f"timestamp must be UTC: {text!r}")
    return parsed.astimezone(timezone.utc)


def format_timestamp(moment: datetime) -> str:
    if moment.tzinfo is None:
        raise ValueError("naive datetimes are ambiguous; pass an aware UTC datetime")
    moment = moment.astimezone(timezone.utc)
    if moment.microsecond:
        return moment.isoformat(timespec="microseconds").replace("+00:00", "Z")
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def round_timestamp(round_number: int) -> str:
    """Logical-round timestamp used by the simulator: epoch + round seconds."""
    return datetime.fromtimestamp(round_number, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ"
    )


def timestamp_round(text: str) -> int:
    """Inverse of :func:`round_timestamp` for TTL arithmetic in round units."""
    return int(parse_timestamp(text).timestamp())
