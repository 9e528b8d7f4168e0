"""Result tables: CSV with a units sub-header and a provenance footer, or JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "1" if x else "0"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


@dataclass
class ResultTable:
    columns: list[str]
    units: list[str]
    rows: list[tuple] = field(default_factory=list)
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.units) != len(self.columns):
            raise ValueError("units row must match the column count")

    def add_row(self, row):
        row = tuple(row)
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, table has {len(self.columns)} columns")
        self.rows.append(row)

    def column(self, name: str) -> list[float]:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def to_csv(self) -> str:
        lines = [",".join(self.columns), ",".join(self.units)]
        lines += [",".join(_fmt(v) for v in row) for row in self.rows]
        lines += [f"# {k}={v}" for k, v in self.provenance.items()]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        body = {
            "columns": self.columns,
            "units": self.units,
            "rows": [[_fmt(v) if isinstance(v, float) and not math.isfinite(v) else v for v in r]
                     for r in self.rows],
            "provenance": self.provenance,
        }
        return json.dumps(body, indent=2) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")


def read_csv(text: str) -> ResultTable:
    """Parse a table written by :meth:`ResultTable.to_csv`."""
    lines = text.splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    prov = dict(ln[2:].split("=", 1) for ln in lines if ln.startswith("# "))
    columns, units = body[0].split(","), body[1].split(",")
    rows = [tuple(float(x) for x in ln.split(",")) for ln in body[2:] if ln]
    return ResultTable(columns, units, rows, prov)
