"""Deterministic JSON reports for the verification suites.

A report is byte-identical across repeated runs with the same config and
seed: rows are emitted in a fixed order, floats serialize through repr, and
the wall time is kept out of the serialized payload (it is reported on
stderr by the CLI instead).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

SCHEMA_ID = "specular.report/1"


def digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
    return h.hexdigest()[:12]


@dataclass
class CheckRow:
    row_id: str
    inputs_digest: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    applicable: bool = True
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "id": self.row_id,
            "inputs": self.inputs_digest,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "pass": bool(self.passed),
            "applicable": bool(self.applicable),
            "note": self.note,
        }


@dataclass
class FittedConstant:
    name: str
    value: float
    refined_value: float

    @property
    def delta_rel(self) -> float:
        if self.value == 0.0:
            return 0.0 if self.refined_value == 0.0 else float("inf")
        return abs(self.refined_value - self.value) / abs(self.value)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "refined_value": self.refined_value,
            "delta_rel": self.delta_rel,
        }


@dataclass
class ExperimentReport:
    suite: str
    seed: int
    rows: list = field(default_factory=list)
    fitted_constants: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    config_digest: str = ""
    wall_time_s: float = 0.0
    samples: list = field(default_factory=list)  # optional per-sample CSV rows

    def add_row(self, row_id: str, lhs: float, rhs: float, passed: bool,
                applicable: bool = True, inputs=None, note: str = "") -> CheckRow:
        ratio = float("nan")
        if applicable and rhs != 0.0:
            ratio = lhs / rhs
        elif applicable and lhs == 0.0:
            ratio = 0.0
        row = CheckRow(row_id, digest(inputs) if inputs is not None else "",
                       float(lhs), float(rhs), float(ratio), bool(passed),
                       bool(applicable), note)
        self.rows.append(row)
        return row

    def add_constant(self, name: str, value: float, refined_value: float) -> FittedConstant:
        const = FittedConstant(name, float(value), float(refined_value))
        self.fitted_constants.append(const)
        return const

    @property
    def verdict(self) -> str:
        bad = [r for r in self.rows if r.applicable and not r.passed]
        return "fail" if bad else "pass"

    def as_dict(self, include_timing: bool = False) -> dict:
        out = {
            "schema": SCHEMA_ID,
            "suite": self.suite,
            "seed": self.seed,
            "config": self.config_digest,
            "rows": [r.as_dict() for r in self.rows],
            "fitted_constants": [c.as_dict() for c in self.fitted_constants],
            "counts": self.counts,
            "verdict": self.verdict,
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.as_dict(include_timing), sort_keys=True,
                          separators=(",", ":")) + "\n"

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("row_id,lhs,rhs,ratio,pass,applicable\n")
            for r in self.rows:
                fh.write(f"{r.row_id},{r.lhs!r},{r.rhs!r},{r.ratio!r},"
                         f"{int(r.passed)},{int(r.applicable)}\n")
            for extra in self.samples:
                fh.write(",".join(repr(x) if isinstance(x, float) else str(x)
                                  for x in extra) + "\n")
