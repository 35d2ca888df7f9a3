"""Turn candidate findings into bug reports.

A finding survives when depth-1 interprocedural refinement keeps it, the
converted pointer is actually used (dereferenced, passed to an unsafe API,
or returned as a reference) and no developer-enforced check covers it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .alias import AliasGraph, may_alias
from .detectors import BugKind, Finding, check
from .ir import (
    Adt,
    Array,
    Assign,
    Call,
    FunctionIR,
    PackageIR,
    RawPtr,
    Ref,
    Return,
    Slice,
    resolve_aggregate,
)
from .propgraph import PropertyGraph, Scenario, Site, callees_of, callers_of, find_constructors
from .semantics import BOTH_ARCHES, UNCONSTRAINED, ArchWidth

UNSAFE_APIS = (
    "ptr::read",
    "ptr::copy",
    "ptr::as_ref",
    "slice::from_raw_parts",
    "slice::from_raw_parts_mut",
    "ptr::write",
)
# Entries whose contract concerns the encoding of the pointed-to bytes.
ENCODING_APIS = ("str::from_utf8_unchecked", "CStr::from_ptr")

PRE, POST = "pre", "post"

DEV_CHECKS: dict[BugKind, dict[str, str]] = {
    BugKind.MISALIGNMENT: {
        "align_of": PRE,
        "align_of_val": PRE,
        "alloc": PRE,
        "alloc_zeroed": PRE,
        "Layout::from_size_align": PRE,
        "align_offset": PRE,
        "is_aligned": PRE,
        "read_unaligned": POST,
        "write_unaligned": POST,
    },
    BugKind.INCONSISTENT_LAYOUT: {
        "size_of": PRE,
        "size_of_val": PRE,
        "ptr::write": POST,
    },
    BugKind.MISMATCHED_SCOPE: {
        "str::from_utf8": PRE,
        "char::from_u32": PRE,
        "CStr::from_bytes_with_nul": PRE,
    },
}


class EvidenceKind(str, Enum):
    DEREF = "deref_in_function"
    UNSAFE_API = "unsafe_api_argument"
    RETURNED = "returned_as_reference"


class Reason(str, Enum):
    PRE_TYPE_CHECK = "pre_type_check"
    POST_TYPE_CHECK = "post_type_check"
    CALLER_CHAIN = "caller_conversion_chain"
    CONSTRUCTOR_GUARD = "constructor_guard"


@dataclass(frozen=True)
class AccessEvidence:
    kind: EvidenceKind
    site: Site
    aliased_local: int


@dataclass(frozen=True)
class Suppression:
    reason: Reason
    site: Site
    pattern: str = ""
    applies: bool = True

    def to_json(self) -> dict:
        return {
            "reason": self.reason.value,
            "pattern": self.pattern,
            "function": self.site.function,
            "site": {"block": self.site.block, "statement": self.site.index},
            "applies": self.applies,
        }


@dataclass(frozen=True)
class BugReport:
    package: str
    finding: Finding
    evidence: AccessEvidence
    suppressions_considered: tuple[Suppression, ...] = ()

    @property
    def function(self) -> str:
        return self.finding.pair.site.function

    @property
    def sites(self) -> tuple[Site, Site]:
        return self.finding.pair.site, self.evidence.site

    def sort_key(self) -> tuple:
        s = self.finding.pair.site
        return (self.package, self.function, s.block, s.index, self.finding.kind.short)


# -- name matching ----------------------------------------------------------

def strip_generic_args(path: str) -> str:
    out, depth = [], 0
    for ch in path:
        if ch == "<":
            depth += 1
        elif ch == ">" and depth:
            depth -= 1
        elif depth == 0:
            out.append(ch)
    return "".join(out).replace("::::", "::").rstrip(":")


def callee_matches(callee: str, name: str) -> bool:
    """Exact match or a match on trailing path segments."""
    callee = strip_generic_args(callee)
    return callee == name or callee.endswith("::" + name)


@dataclass(frozen=True)
class Catalog:
    unsafe_apis: tuple[str, ...] = UNSAFE_APIS
    encoding_apis: tuple[str, ...] = ENCODING_APIS
    dev_checks: Mapping[BugKind, Mapping[str, str]] = field(default_factory=lambda: DEV_CHECKS)

    def is_unsafe_api(self, call: Call, kind: BugKind) -> bool:
        if call.is_unsafe_api:
            return True
        names = self.unsafe_apis
        if kind is BugKind.MISMATCHED_SCOPE:
            names = names + self.encoding_apis
        return any(callee_matches(call.callee, n) for n in names)

    def dev_check(self, callee: str, kind: BugKind) -> tuple[str, str] | None:
        """``(pattern, position)`` for the longest catalog entry matching."""
        hits = [(n, pos) for n, pos in self.dev_checks.get(kind, {}).items() if callee_matches(callee, n)]
        return max(hits, key=lambda h: len(h[0])) if hits else None

    def with_overlay(self, overlay: Mapping[str, Mapping[str, str]]) -> "Catalog":
        merged = {k: dict(v) for k, v in self.dev_checks.items()}
        for name, kinds in overlay.items():
            for kind, pos in kinds.items():
                if pos not in (PRE, POST):
                    raise ValueError(f"suppression overlay: {name}/{kind}: position must be pre or post")
                merged.setdefault(BugKind.from_short(kind), {})[name] = pos
        return Catalog(self.unsafe_apis, self.encoding_apis, merged)


DEFAULT_CATALOG = Catalog()


def load_suppression_overlay(path: str | Path) -> dict[str, dict[str, str]]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
        raise ValueError("suppression overlay must map name -> {bug type: pre|post}")
    return data


# -- access check -----------------------------------------------------------

def _after(fn: FunctionIR, site: Site, inclusive: bool = False):
    start = (site.block, site.index)
    for b, i, item in fn.sites():
        if (b, i) > start or (inclusive and (b, i) == start):
            yield b, i, item


def _safe_alias(g: AliasGraph, a: int, b: int) -> bool:
    return a in g.nodes and b in g.nodes and may_alias(g, a, b)


def access_in_function(
    f: Finding, fn: FunctionIR, g: AliasGraph, catalog: Catalog = DEFAULT_CATALOG
) -> AccessEvidence | None:
    """First use of the converted pointer after the conversion site."""
    target = f.dst_local
    for b, i, item in _after(fn, f.pair.site):
        site = Site(fn.name, b, i)
        if isinstance(item, Assign):
            places = [item.lhs]
            if item.rvalue.operand.place is not None:
                places.append(item.rvalue.operand.place)
            for p in places:
                if p.deref and _safe_alias(g, p.local, target):
                    return AccessEvidence(EvidenceKind.DEREF, site, p.local)
        elif isinstance(item, Call) and catalog.is_unsafe_api(item, f.kind):
            for arg in item.args:
                if arg.place is not None and _safe_alias(g, arg.place.local, target):
                    return AccessEvidence(EvidenceKind.UNSAFE_API, site, arg.place.local)
    return None


def accessible_to_caller(f: Finding, fn: FunctionIR, g: AliasGraph) -> AccessEvidence | None:
    """Evidence when a returned reference aliases the converted pointer."""
    if not isinstance(fn.return_type, Ref) or not _safe_alias(g, 0, f.dst_local):
        return None
    fallback = None
    for b, i, item in _after(fn, f.pair.site, inclusive=True):
        if isinstance(item, Assign) and item.lhs.local == 0 and not item.lhs.deref:
            return AccessEvidence(EvidenceKind.RETURNED, Site(fn.name, b, i), 0)
        if fallback is None and isinstance(item, Return):
            fallback = Site(fn.name, b, i)
    return AccessEvidence(EvidenceKind.RETURNED, fallback or f.pair.site, 0)


# -- developer-enforced checks ----------------------------------------------

def scan_dev_checks(
    f: Finding,
    reachable: Iterable[FunctionIR],
    constructors: Iterable[str] = (),
    catalog: Catalog = DEFAULT_CATALOG,
) -> list[Suppression]:
    """Every catalog hit for ``f.kind`` in ``reachable``, flagged by whether
    its position makes it cover the conversion."""
    site = f.pair.site
    ctors = set(constructors)
    out = []
    for fn in reachable:
        own = fn.name == site.function
        for b, i, item in fn.sites():
            if not isinstance(item, Call):
                continue
            hit = catalog.dev_check(item.callee, f.kind)
            if hit is None:
                continue
            pattern, pos = hit
            here = Site(fn.name, b, i)
            if own:
                before = (b, i) < (site.block, site.index)
                applies = before if pos == PRE else not before
            else:
                applies = True
            if not own and fn.name in ctors:
                reason = Reason.CONSTRUCTOR_GUARD
            else:
                reason = Reason.PRE_TYPE_CHECK if pos == PRE else Reason.POST_TYPE_CHECK
            out.append(Suppression(reason, here, pattern, applies))
    return out


def has_dev_check(
    f: Finding,
    reachable: Iterable[FunctionIR],
    constructors: Iterable[str] = (),
    catalog: Catalog = DEFAULT_CATALOG,
    layout_guards: Iterable[str] = (),
) -> Suppression | None:
    if f.kind is BugKind.INCONSISTENT_LAYOUT and f.pair.bounds & set(layout_guards):
        guard = sorted(f.pair.bounds & set(layout_guards))[0]
        return Suppression(Reason.PRE_TYPE_CHECK, f.pair.site, guard)
    for s in scan_dev_checks(f, reachable, constructors, catalog):
        if s.applies:
            return s
    return None


# -- interprocedural refinement ---------------------------------------------

def _field_adts(name: str, pkg: PackageIR | None, seen: set[str]) -> None:
    if name in seen:
        return
    seen.add(name)
    agg = resolve_aggregate(name, pkg)
    if agg is None:
        return
    for fd in agg.fields:
        ty = fd.ty
        while isinstance(ty, (RawPtr, Ref, Slice, Array)):
            ty = ty.pointee if isinstance(ty, (RawPtr, Ref)) else ty.element
        if isinstance(ty, Adt):
            _field_adts(ty.name, pkg, seen)


def receiver_constructors(fn_name: str, g: PropertyGraph, pkg: PackageIR | None) -> list[str]:
    """Constructors of a method's receiver type and of the aggregates it
    (transitively) holds."""
    rec = g.records.get(fn_name)
    if rec is None or rec.method_of is None:
        return []
    adts: set[str] = set()
    _field_adts(rec.method_of, pkg, adts)
    names = {c for a in adts for c in find_constructors(Adt(a), g)}
    names.discard(fn_name)
    return sorted(names)


def reachable_functions(
    fn_name: str, g: PropertyGraph, pkg: PackageIR, interprocedural: bool = True
) -> tuple[list[FunctionIR], list[str]]:
    """The function itself, plus depth-1 callers, callees and constructors
    when interprocedural analysis is on.  Callees without a body are
    skipped."""
    if not interprocedural:
        fn = pkg.function(fn_name)
        return ([fn] if fn else []), []
    ctors = receiver_constructors(fn_name, g, pkg)
    names = [fn_name] + callers_of(fn_name, g) + callees_of(fn_name, g) + ctors
    out, seen = [], set()
    for n in names:
        fn = pkg.function(n)
        if fn is not None and n not in seen:
            seen.add(n)
            out.append(fn)
    return out, ctors


def _caller_round_trip(f: Finding, g: PropertyGraph, pkg: PackageIR) -> bool:
    name = f.pair.site.function
    sites = 0
    for caller in callers_of(name, g):
        fn, rec = pkg.function(caller), g.records.get(caller)
        if fn is None or rec is None:
            return False
        inverse = [p for p in rec.conversion_pairs if p.src == f.pair.dst and p.dst == f.pair.src]
        for blk in fn.blocks:
            t = blk.terminator
            if not isinstance(t, Call) or t.callee != name:
                continue
            sites += 1
            if not any(
                a.place is not None and _safe_alias(rec.alias_graph, a.place.local, p.dst_local)
                for a in t.args
                for p in inverse
            ):
                return False
    return sites > 0


def interprocedural_refine(
    f: Finding,
    g: PropertyGraph,
    pkg: PackageIR,
    arches: Iterable[ArchWidth] = BOTH_ARCHES,
) -> Finding | None:
    """Drop findings that depth-1 context shows to be unreachable bugs.

    Refinement only ever removes a finding.
    """
    if _caller_round_trip(f, g, pkg):
        return None
    if f.pair.scenario is Scenario.CON_CON:
        rec = g.records.get(f.pair.site.function)
        if rec is not None and rec.method_of is not None:
            for ctor in receiver_constructors(rec.name, g, pkg):
                for p in g.records[ctor].conversion_pairs:
                    if p.dst == f.pair.src and p.scenario is Scenario.CON_CON:
                        again = check(f.kind, f.pair.with_types(p.src, f.pair.dst), UNCONSTRAINED, arches, pkg)
                        if again is None:
                            return None
    return f


# -- pipeline ---------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    finding: Finding
    status: str  # reported | refined | no_access | suppressed
    report: BugReport | None = None
    suppression: Suppression | None = None


def verify(
    f: Finding,
    pg: PropertyGraph,
    pkg: PackageIR,
    *,
    interprocedural: bool = True,
    arches: Iterable[ArchWidth] = BOTH_ARCHES,
    catalog: Catalog = DEFAULT_CATALOG,
    layout_guards: Iterable[str] = (),
) -> BugReport | None:
    return judge(
        f, pg, pkg,
        interprocedural=interprocedural, arches=arches, catalog=catalog, layout_guards=layout_guards,
    ).report


def judge(
    f: Finding,
    pg: PropertyGraph,
    pkg: PackageIR,
    *,
    interprocedural: bool = True,
    arches: Iterable[ArchWidth] = BOTH_ARCHES,
    catalog: Catalog = DEFAULT_CATALOG,
    layout_guards: Iterable[str] = (),
) -> Verdict:
    """Like :func:`verify` but also says why a finding was dropped."""
    if interprocedural and interprocedural_refine(f, pg, pkg, arches) is None:
        return Verdict(f, "refined", suppression=Suppression(Reason.CALLER_CHAIN, f.pair.site))
    name = f.pair.site.function
    fn, rec = pkg.function(name), pg.records[name]
    evidence = access_in_function(f, fn, rec.alias_graph, catalog) or accessible_to_caller(f, fn, rec.alias_graph)
    if evidence is None:
        return Verdict(f, "no_access")
    reachable, ctors = reachable_functions(name, pg, pkg, interprocedural)
    hit = has_dev_check(f, reachable, ctors, catalog, layout_guards)
    if hit is not None:
        return Verdict(f, "suppressed", suppression=hit)
    considered = tuple(scan_dev_checks(f, reachable, ctors, catalog))
    return Verdict(f, "reported", BugReport(pkg.name, f, evidence, considered))
