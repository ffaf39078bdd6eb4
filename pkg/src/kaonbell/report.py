"""Report documents and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

import numpy as np

from . import __version__


def _clean(obj):
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _clean(obj.to_dict())
    return obj


@dataclass
class ReportDocument:
    command: str
    config: dict[str, Any]
    results: list[Any] = field(default_factory=list)
    reproducible: bool = False

    def assumption_notes(self) -> list[str]:
        notes: list[str] = []
        for r in self.results:
            d = r if isinstance(r, dict) else (r.to_dict() if hasattr(r, "to_dict") else {})
            for n in d.get("assumption_notes", []):
                if n not in notes:
                    notes.append(n)
        return notes

    def to_dict(self) -> dict[str, Any]:
        doc = {
            "tool": "kaonbell",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "assumption_notes": self.assumption_notes(),
        }
        if not self.reproducible:
            doc["generated_at"] = datetime.now(timezone.utc).isoformat()
        return _clean(doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def fmt_real(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def to_csv(header: list[str], rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_real(row.get(h)) for h in header])
    return buf.getvalue()
