"""Per-package scan driver: parse, build the property graph, detect, verify."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .detectors import ALL_KINDS, BugKind, run_detectors
from .ir import IRError, decode_trait, parse_package
from .propgraph import build_property_graph
from .semantics import BOTH_ARCHES, ArchWidth, TraitMap
from .verification import DEFAULT_CATALOG, BugReport, Catalog, judge, load_suppression_overlay

DEFAULT_TIMEOUT = 120.0

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_PARSE_ERROR = "parse_error"


@dataclass(frozen=True)
class Config:
    inputs: tuple[str, ...]
    detectors: frozenset[BugKind] = frozenset(ALL_KINDS)
    arches: frozenset[ArchWidth] = BOTH_ARCHES
    interprocedural: bool = True
    jobs: int = 1
    timeout: float = DEFAULT_TIMEOUT
    output_format: str = "text"
    dump_alias_dot: bool = False
    dump_property_graph: bool = False
    trait_overlay: str | None = None
    suppression_overlay: str | None = None

    def __post_init__(self):
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if self.output_format not in ("text", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass
class PackageResult:
    path: str
    name: str | None
    status: str
    reports: list[BugReport] = field(default_factory=list)
    elapsed: float = 0.0
    error: str | None = None
    findings: int = 0
    skipped_gengen: int = 0
    dumps: dict[str, str] = field(default_factory=dict)


@dataclass
class ScanSummary:
    packages: list[PackageResult]

    @property
    def reports(self) -> list[BugReport]:
        return sorted((r for p in self.packages for r in p.reports), key=BugReport.sort_key)

    @property
    def totals(self) -> dict[str, int]:
        counts = {k.short: 0 for k in ALL_KINDS}
        for p in self.packages:
            for r in p.reports:
                counts[r.finding.kind.short] += 1
        return counts

    @property
    def exit_code(self) -> int:
        if any(p.status == STATUS_PARSE_ERROR for p in self.packages):
            return 2
        return 1 if any(p.reports for p in self.packages) else 0


class ScanTimeout(Exception):
    pass


def expand_inputs(inputs) -> list[str]:
    """Directories expand to their ``*.json`` files, sorted by name."""
    out = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            out.extend(str(c) for c in sorted(p.glob("*.json")))
        else:
            out.append(str(item))
    return out


def load_trait_overlay(path: str | None):
    if path is None:
        return ()
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [dict(v, name=v.get("name", k)) for k, v in data.items()]
    return tuple(decode_trait(t, f"$[{i}]") for i, t in enumerate(data))


def load_catalog(path: str | None) -> Catalog:
    if path is None:
        return DEFAULT_CATALOG
    return DEFAULT_CATALOG.with_overlay(load_suppression_overlay(path))


def scan_package(path: str, cfg: Config, overlay=(), catalog: Catalog = DEFAULT_CATALOG) -> PackageResult:
    start = time.monotonic()
    deadline = start + cfg.timeout

    def tick():
        if time.monotonic() > deadline:
            raise ScanTimeout

    try:
        pkg = parse_package(Path(path).read_bytes())
    except (OSError, IRError) as exc:
        return PackageResult(path, None, STATUS_PARSE_ERROR, error=str(exc), elapsed=time.monotonic() - start)

    result = PackageResult(path, pkg.name, STATUS_OK)
    try:
        trait_map = TraitMap.for_package(pkg, overlay)
        pg = build_property_graph(pkg, trait_map)
        tick()
        reports = []
        for fn in pkg.functions:
            rec = pg.records[fn.name]
            result.skipped_gengen += len(rec.skipped_gengen)
            if not fn.contains_unsafe:
                continue
            findings = run_detectors(rec, trait_map, pkg, cfg.detectors, cfg.arches)
            result.findings += len(findings)
            for f in findings:
                tick()
                v = judge(
                    f, pg, pkg,
                    interprocedural=cfg.interprocedural,
                    arches=cfg.arches,
                    catalog=catalog,
                    layout_guards=trait_map.layout_guards,
                )
                if v.report is not None:
                    reports.append(v.report)
        result.reports = sorted(reports, key=BugReport.sort_key)
        if cfg.dump_alias_dot:
            result.dumps["alias_dot"] = "".join(
                rec.alias_graph.to_dot(f"{pkg.name}::{name}") for name, rec in pg.records.items()
            )
        if cfg.dump_property_graph:
            result.dumps["property_graph"] = pg.dumps()
    except ScanTimeout:
        result = PackageResult(path, pkg.name, STATUS_TIMEOUT, error=f"exceeded {cfg.timeout:g}s")
    result.elapsed = time.monotonic() - start
    return result


def _worker(args):
    path, cfg = args
    return scan_package(path, cfg, load_trait_overlay(cfg.trait_overlay), load_catalog(cfg.suppression_overlay))


def run_scan(cfg: Config) -> ScanSummary:
    paths = expand_inputs(cfg.inputs)
    if cfg.jobs == 1 or len(paths) <= 1:
        overlay = load_trait_overlay(cfg.trait_overlay)
        catalog = load_catalog(cfg.suppression_overlay)
        results = [scan_package(p, cfg, overlay, catalog) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_worker, [(p, cfg) for p in paths]))
    return ScanSummary(results)
