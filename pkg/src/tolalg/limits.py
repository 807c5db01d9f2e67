"""Resource limits.

The table-length cap defaults to 10**7 entries and can be overridden with the
``TOLALG_MAX_TABLE`` environment variable.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .exceptions import ResourceExceeded

ENV_VAR = "TOLALG_MAX_TABLE"
DEFAULT_MAX_TABLE = 10**7


@dataclass(frozen=True)
class Limits:
    # longest table (entries) any single function or relation may occupy
    max_table: int = DEFAULT_MAX_TABLE
    # elements of any generated subalgebra of a power
    max_elements: int = 200_000
    # argument tuples times row width for one closure layer
    max_work: int = 3 * 10**8
    # membership tests tried on a partially explored free algebra
    max_pair_tests: int = 2000

    def with_(self, **kw) -> "Limits":
        return replace(self, **kw)


def default_limits() -> Limits:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return Limits()
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if cap <= 0:
        raise ValueError(f"{ENV_VAR} must be positive")
    return Limits(max_table=cap)


class WorkBudget:
    """An evaluation allowance shared by several closures."""

    def __init__(self, total: int):
        self.total = total
        self.used = 0

    @property
    def exhausted(self) -> bool:
        return self.used > self.total

    def spend(self, entries: int) -> None:
        self.used += entries
        if self.used > self.total:
            raise ResourceExceeded(f"shared budget of {self.total} evaluations used up")


def check_table(length: int, limits: Limits | None = None, what: str = "table") -> None:
    limits = limits or default_limits()
    if length > limits.max_table:
        raise ResourceExceeded(
            f"{what} of length {length} exceeds the cap of {limits.max_table}"
        )
