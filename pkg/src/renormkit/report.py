"""Verification reports and their JSON encoding.

The report body is deterministic for fixed inputs and seed; the wall-clock
timestamp lives under ``meta`` so that bodies can be compared byte for byte.
"""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__


@dataclass
class Check:
    name: str
    lemma: str
    expected: object
    actual: object
    tolerance: float | None
    ok: bool

    def to_json(self) -> dict:
        return {"name": self.name, "lemma": self.lemma, "expected": self.expected,
                "actual": self.actual, "tolerance": self.tolerance,
                "status": "pass" if self.ok else "fail"}


@dataclass
class Report:
    command: str
    seed: int | None = None
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    error: str | None = None

    def check(self, name, lemma, expected, actual, ok, tolerance=None) -> Check:
        c = Check(name, lemma, expected, actual, tolerance, bool(ok))
        self.checks.append(c)
        return c

    def add_input(self, path) -> None:
        p = Path(path)
        self.inputs[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()

    @property
    def verdict(self) -> str:
        if self.error is not None:
            return "error"
        return "pass" if all(c.ok for c in self.checks) else "fail"

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 1, "error": 2}[self.verdict]

    def body(self) -> dict:
        out = {"command": self.command, "verdict": self.verdict,
               "checks": [c.to_json() for c in self.checks],
               "provenance": {"inputs": dict(sorted(self.inputs.items())),
                              "version": __version__, "seed": self.seed}}
        if self.data:
            out["data"] = self.data
        if self.error is not None:
            out["error"] = self.error
        return out

    def to_json(self, timestamp: str | None = None) -> str:
        ts = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return dumps({"body": self.body(), "meta": {"timestamp": ts}})


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, Fraction):
        return _encode(str(obj), indent, level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _encode(obj.item(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj, key=repr) if isinstance(obj, (set, frozenset)) else obj
        if not seq:
            return "[]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in seq) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"
