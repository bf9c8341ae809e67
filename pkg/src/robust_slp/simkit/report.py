"""Metrics reports and their CSV/JSON forms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from robust_slp import __version__


def version_string() -> str:
    return f"robust-slp v{__version__}"


@dataclass
class MetricsReport:
    """One record per grid point plus run metadata.

    ``columns`` fixes the field order of the CSV. Fields listed in
    ``timing_columns`` carry wall-clock measurements; they are left out of the
    CSV unless ``include_timing`` is set, so reports of seeded runs serialise
    byte-identically.
    """

    kind: str
    columns: tuple
    records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    timing_columns: tuple = ("mean_wall_time",)
    include_timing: bool = False

    def add(self, **record):
        missing = [c for c in self.columns if c not in record]
        if missing:
            raise KeyError(f"record lacks columns {missing}")
        self.records.append(record)

    def csv_columns(self):
        if self.include_timing:
            return tuple(self.columns)
        return tuple(c for c in self.columns if c not in self.timing_columns)

    def column(self, name):
        return [r[name] for r in self.records]

    def select(self, **where):
        return [r for r in self.records if all(r.get(k) == v for k, v in where.items())]

    def numeric_fields(self):
        """Deterministic part of the report, for reproducibility checks."""
        cols = [c for c in self.columns if c not in self.timing_columns]
        return [tuple(r[c] for c in cols) for r in self.records]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
        cols = self.csv_columns()
        writer.writerow(cols)
        for r in self.records:
            writer.writerow([_cell(r[c]) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "metadata": self.metadata,
            "columns": list(self.columns),
            "records": [{c: _json_value(r[c]) for c in self.columns} for r in self.records],
        }
        return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        doc = json.loads(text)
        records = [{c: (math.nan if v is None else v) for c, v in r.items()} for r in doc["records"]]
        return cls(kind=doc["kind"], columns=tuple(doc["columns"]), records=records,
                   metadata=doc["metadata"])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v
