"""JSON assessment reports.

Reports are deterministic: keys are sorted, tuples are sorted, and timings
only appear when asked for.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .context import ContextualSystem
from .extsrc import CallLog
from .metrics import MetricReport
from .relmodel import Instance, format_value, sorted_tuples


def render_rows(rows) -> list[list]:
    return [[None if v is None else format_value(v) for v in row] for row in sorted_tuples(rows)]


def system_digest(system: ContextualSystem) -> dict:
    kinds = Counter(type(m).__name__ for m in system.mappings)
    return {
        "source": sorted(s.name for s in system.source_schema),
        "context": sorted(s.name for s in system.contextual_schema),
        "quality_predicates": sorted(system.quality_predicates),
        "externals": sorted(d.name for d in system.external_predicates),
        "mappings": dict(sorted(kinds.items())),
    }


@dataclass
class AssessmentReport:
    system: dict
    quality: Instance
    metrics: MetricReport
    call_log: CallLog
    answers: frozenset | None = None
    timings: dict | None = field(default=None)

    def as_dict(self) -> dict:
        out = {
            "system": self.system,
            "quality_instance": {name: render_rows(self.quality.get(name))
                                 for name in sorted(self.quality)},
            "call_log": [e.as_dict() for e in self.call_log],
        }
        out.update(self.metrics.as_dict())
        if self.answers is not None:
            out["answers"] = render_rows(self.answers)
        if self.timings is not None:
            out["timings_ms"] = {k: round(v, 3) for k, v in self.timings.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"
