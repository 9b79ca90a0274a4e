"""Wall-clock access with an environment override for reproducible runs.

Setting ``KGTABLE_FIXED_TIME`` to an ISO-8601 UTC timestamp pins every
``lastModified`` value produced by the engine, which makes exports
byte-comparable across separate runs (used by the golden tests).
"""

from __future__ import annotations

import os
from datetime import datetime, timezone

ENV_FIXED_TIME = "KGTABLE_FIXED_TIME"


def now() -> datetime:
    fixed = os.environ.get(ENV_FIXED_TIME)
    if fixed:
        return parse_timestamp(fixed)
    return datetime.now(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """Canonical form: UTC, microsecond precision, trailing Z."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"


def parse_timestamp(value: str) -> datetime:
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)
