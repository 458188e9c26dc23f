"""Curve tables and their CSV/JSON forms."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

COLUMNS = ("sweep", "baseline", "lower", "upper", "ref_lower", "ref_upper", "status")
NAN = math.nan


@dataclass
class Row:
    sweep: float | None
    baseline: float
    lower: float
    upper: float
    ref_lower: float = NAN
    ref_upper: float = NAN
    status: str = "ok"


@dataclass
class CurveTable:
    scenario: str
    sweep_name: str | None
    rows: list[Row] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, *args, **kw) -> None:
        self.rows.append(Row(*args, **kw))

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def check(self, same_qoi: bool = True, tol: float = 1e-9) -> None:
        """Raise if lower > upper or (for same-QoI tables) the baseline falls outside."""
        for r in self.rows:
            if r.lower > r.upper + tol * max(1.0, abs(r.upper)):
                raise AssertionError(f"lower > upper at sweep={r.sweep}")
            if same_qoi and not (r.lower - tol * max(1.0, abs(r.lower)) <= r.baseline
                                 <= r.upper + tol * max(1.0, abs(r.upper))):
                raise AssertionError(f"baseline outside interval at sweep={r.sweep}")

    # -- serialization

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow(["-" if r.sweep is None else _fmt(r.sweep), _fmt(r.baseline), _fmt(r.lower),
                        _fmt(r.upper), _fmt(r.ref_lower), _fmt(r.ref_upper), r.status])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, scenario: str = "", sweep_name: str | None = None) -> "CurveTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            sw = None if rec[0] == "-" else float(rec[0])
            rows.append(Row(sw, *(float(x) for x in rec[1:6]), rec[6]))
        return cls(scenario, sweep_name, rows)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "sweep_name": self.sweep_name,
            "columns": list(COLUMNS),
            "rows": [[r.sweep, _jnum(r.baseline), _jnum(r.lower), _jnum(r.upper),
                      _jnum(r.ref_lower), _jnum(r.ref_upper), r.status] for r in self.rows],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CurveTable":
        rows = [Row(rec[0], *(NAN if v is None else float(v) for v in rec[1:6]), rec[6])
                for rec in obj["rows"]]
        return cls(obj["scenario"], obj["sweep_name"], rows, obj.get("meta", {}))

    def same_values(self, other: "CurveTable") -> bool:
        if len(self.rows) != len(other.rows):
            return False
        for a, b in zip(self.rows, other.rows):
            for name in COLUMNS:
                x, y = getattr(a, name), getattr(b, name)
                if isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y):
                    continue
                if x != y:
                    return False
        return True


def _fmt(x: float) -> str:
    # repr is the shortest string that round-trips
    return repr(float(x))


def _jnum(x: float):
    return None if math.isnan(x) else x


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False, default=_default)


def _default(o):
    try:
        import numpy as np
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
