"""Worker-pool sizing from the CHROMAFLOW_THREADS environment variable."""

from __future__ import annotations

import os

ENV_VAR = "CHROMAFLOW_THREADS"


def worker_count() -> int:
    """Worker cap: the env value, or one per CPU when unset or 0."""
    raw = os.environ.get(ENV_VAR, "0")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be an integer, got '{raw}'") from None
    if value < 0:
        raise ValueError(f"{ENV_VAR} must be nonnegative, got {value}")
    if value == 0:
        return os.cpu_count() or 1
    return value
