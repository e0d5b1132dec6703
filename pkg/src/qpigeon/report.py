"""Check records and reports shared by the verification routines and the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from . import __version__


@dataclass(frozen=True)
class CheckResult:
    """One named comparison.

    ``expected`` and ``actual`` keep their native values (numbers, dicts,
    lists, None); renderers format them. ``deviation`` is the value of the
    check's metric, and ``passed`` is ``deviation <= tolerance``.
    """

    name: str
    expected: Any
    actual: Any
    tolerance: float
    deviation: float
    metric: str = "abs"

    @property
    def passed(self) -> bool:
        return not math.isnan(self.deviation) and self.deviation <= self.tolerance


@dataclass
class Report:
    checks: list[CheckResult] = field(default_factory=list)
    command: list[str] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)
    data_rows: list[list[Any]] = field(default_factory=list)
    tool_version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def extend(self, other: "Report") -> None:
        self.checks.extend(other.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def scalar_check(name: str, expected: complex, actual: complex, tolerance: float) -> CheckResult:
    return CheckResult(name, expected, actual, tolerance, abs(complex(actual) - complex(expected)))


def distribution_deviation(expected: dict, actual: dict, key_tol: float = 1e-8) -> float:
    """Max probability difference over the union of (tolerantly matched) keys."""
    keys: list[float] = []
    for k in list(expected) + list(actual):
        if not any(abs(k - seen) <= key_tol for seen in keys):
            keys.append(k)

    def lookup(d, k):
        return sum(p for kk, p in d.items() if abs(kk - k) <= key_tol)

    return max((abs(lookup(expected, k) - lookup(actual, k)) for k in keys), default=0.0)
