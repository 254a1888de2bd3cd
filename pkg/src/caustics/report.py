"""Run reports: named checks with measured values, no bare booleans."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class RunCheck:
    name: str
    status: str  # "pass" | "fail" | "inconclusive"
    value: float | str
    tol: float | None = None
    note: str = ""

    def as_dict(self):
        return {"name": self.name, "status": self.status, "value": self.value,
                "tol": self.tol, "note": self.note}


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)

    def add(self, name, status, value, tol=None, note=""):
        self.checks.append(RunCheck(name, status, value, tol, note))

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "inputs": self.inputs,
            "checks": [c.as_dict() for c in self.checks],
            "artifacts": self.artifacts,
        }
        return json.dumps(doc, sort_keys=True, default=_jsonable)

    def lines(self):
        out = []
        for c in self.checks:
            tol = "" if c.tol is None else f" (tol {c.tol:g})"
            note = f"  [{c.note}]" if c.note else ""
            out.append(f"{c.name}: {c.value}{tol} -> {c.status}{note}")
        return out


def _jsonable(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return str(x)
