"""Pass/fail records shared by validation routines and CLI reports."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    witness: Any = None
    residual: float | None = None

    @property
    def status(self) -> str:
        return "pass" if self.ok else "fail"


@dataclass(frozen=True)
class Report:
    checks: tuple[Check, ...]

    def __init__(self, checks: Iterable[Check]):
        object.__setattr__(self, "checks", tuple(checks))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.ok), None)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)
