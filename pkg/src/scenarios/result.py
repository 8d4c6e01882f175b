"""
Scenario result container shared by every runner.

A runner returns tables (one CSV each), named pass/fail checks, optional line
plots and a handful of summary values; :mod:`src.report` turns them into
files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..constants import CSV_SCHEMAS


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    @classmethod
    def at_most(cls, name: str, value: float, limit: float, detail: str = "") -> "Check":
        return cls(name, bool(math.isfinite(value) and value <= limit), float(value), float(limit), detail)

    @classmethod
    def at_least(cls, name: str, value: float, limit: float, detail: str = "") -> "Check":
        return cls(name, bool(math.isfinite(value) and value >= limit), float(value), float(limit), detail)


@dataclass(frozen=True)
class Table:
    schema: str
    header: list[str]
    rows: list[list[float]]

    def __post_init__(self) -> None:
        if self.schema not in CSV_SCHEMAS:
            raise ValueError(f"Unknown CSV schema '{self.schema}'")

    @property
    def version(self) -> int:
        return CSV_SCHEMAS[self.schema]


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


@dataclass(frozen=True)
class Plot:
    name: str
    title: str
    xlabel: str
    ylabel: str
    series: tuple[Series, ...]


@dataclass
class ScenarioResult:
    scenario: str
    tables: list[Table] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    plots: list[Plot] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed_checks(self) -> list[Check]:
        return [check for check in self.checks if not check.passed]

    def add_table(self, schema: str, header_rows: tuple[list[str], list[list[float]]]) -> None:
        header, rows = header_rows
        self.tables.append(Table(schema, list(header), [list(r) for r in rows]))
