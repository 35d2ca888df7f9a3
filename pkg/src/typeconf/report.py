"""Text and JSON rendering of scan summaries."""

from __future__ import annotations

import json

from .propgraph import Site
from .scan import ScanSummary
from .verification import BugReport


def _site(s: Site) -> dict:
    return {"block": s.block, "statement": s.index}


def report_to_json(r: BugReport) -> dict:
    f = r.finding
    return {
        "package": r.package,
        "function": r.function,
        "bug_type": f.kind.short,
        "rule_id": f.rationale,
        "conversion_site": _site(f.pair.site),
        "operation": f.pair.operation.value,
        "src_type": str(f.pair.src),
        "dst_type": str(f.pair.dst),
        "witness": None if f.witness is None else str(f.witness),
        "arches": [a.value for a in f.arches],
        "evidence": {
            "kind": r.evidence.kind.value,
            "site": _site(r.evidence.site),
            "aliased_local": r.evidence.aliased_local,
        },
        "suppressions_considered": [s.to_json() for s in r.suppressions_considered],
    }


def summary_to_json(summary: ScanSummary) -> dict:
    # Elapsed times are left out so identical inputs give identical bytes.
    return {
        "packages": [
            {
                "path": p.path,
                "name": p.name,
                "status": p.status,
                "reports": len(p.reports),
                "error": p.error,
            }
            for p in summary.packages
        ],
        "reports": [report_to_json(r) for r in summary.reports],
        "totals": summary.totals,
    }


def _text(summary: ScanSummary) -> str:
    lines = []
    for p in summary.packages:
        if p.status != "ok":
            lines.append(f"{p.path}: {p.status}: {p.error}")
    for r in summary.reports:
        f = r.finding
        lines.append(f"[Type {f.kind.short}] {r.package}::{r.function}  {f.rationale}")
        lines.append(f"  conversion: {f.pair.site} {f.pair.operation.value} {f.pair.src} -> {f.pair.dst}")
        lines.append(f"  access:     {r.evidence.site} ({r.evidence.kind.value}, _{r.evidence.aliased_local})")
        if f.witness is not None:
            lines.append(f"  witness:    {f.witness}")
        if f.arches:
            lines.append("  arches:     " + ", ".join(f"{a.value}-bit" for a in f.arches))
        for s in r.suppressions_considered:
            lines.append(f"  considered: {s.pattern} at {s.site} ({s.reason.value}, not covering)")
    n = len(summary.reports)
    totals = ", ".join(f"{k}: {v}" for k, v in summary.totals.items())
    lines.append(f"{n} finding{'s' if n != 1 else ''} ({totals})")
    return "\n".join(lines) + "\n"


def render_report(summary: ScanSummary, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(summary_to_json(summary), indent=2, sort_keys=True) + "\n"
    return _text(summary)
