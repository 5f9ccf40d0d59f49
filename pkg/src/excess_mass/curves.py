"""Excess-mass curves: (level, value) pairs with method metadata."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ExcessMassCurve:
    levels: np.ndarray
    values: np.ndarray
    method: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float).ravel()
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.levels.shape != self.values.shape:
            raise ValueError("levels and values must have the same length")
        if np.any(np.diff(self.levels) < 0):
            raise ValueError("levels must be sorted ascending")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")

    def __len__(self):
        return self.levels.size

    def __eq__(self, other):
        if not isinstance(other, ExcessMassCurve):
            return NotImplemented
        return (
            self.method == other.method
            and self.params == other.params
            and np.array_equal(self.levels, other.levels)
            and np.array_equal(self.values, other.values)
        )

    def clamped(self):
        """Copy with negative values set to 0 (presentation only)."""
        return ExcessMassCurve(
            self.levels, np.maximum(self.values, 0.0), self.method, dict(self.params)
        )

    def to_dict(self):
        return {
            "method": self.method,
            "params": self.params,
            "levels": self.levels.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["levels"], data["values"], data.get("method", ""), data.get("params", {}))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def curves_to_csv(curves):
    """Headerless CSV, one row per level: ``nu,value_1,...,value_m``.

    All curves must share the same level grid.
    """
    if not curves:
        return ""
    levels = curves[0].levels
    for c in curves[1:]:
        if not np.array_equal(c.levels, levels):
            raise ValueError("curves must share a level grid")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for i, nu in enumerate(levels):
        writer.writerow([repr(float(nu))] + [repr(float(c.values[i])) for c in curves])
    return buf.getvalue()


def curves_to_json(curves):
    return json.dumps([c.to_dict() for c in curves], indent=2)


def curves_from_json(text):
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [ExcessMassCurve.from_dict(d) for d in data]
