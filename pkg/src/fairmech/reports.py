"""JSON and CSV rendering of audit output. Rationals always appear as "p/q"."""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import sys
from fractions import Fraction
from typing import Any, Optional


def jsonable(obj: Any) -> Any:
    from .core import Allocation, format_rational

    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Allocation):
        return {"owner": obj.external(), "bundles": obj.external_bundles()}
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    return str(obj)


def to_json(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2)


CSV_FIELDS = ["section", "name", "verdict", "estimate", "stderr", "detail"]


def to_csv(report: dict) -> str:
    """One row per verdict or estimate found under ``report["results"]``."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in report.get("results", []):
        row = jsonable(row)
        w.writerow(
            {
                "section": row.get("section", report.get("command", "")),
                "name": row.get("name", ""),
                "verdict": row.get("verdict", ""),
                "estimate": row.get("estimate", ""),
                "stderr": row.get("stderr", ""),
                "detail": json.dumps(row.get("detail", ""), sort_keys=True) if row.get("detail") is not None else "",
            }
        )
    return buf.getvalue()


def emit(report: dict, fmt: str, out: Optional[str]) -> None:
    text = to_csv(report) if fmt == "csv" else to_json(report) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
