"""Package-wide property graph: per-function conversion pairs, trait bounds,
alias graphs and return types, plus call and constructor indices."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .alias import AliasGraph, build_alias_graph
from .ir import (
    Adt,
    Assign,
    Call,
    CastPtrToPtr,
    FunctionIR,
    PackageIR,
    RawPtr,
    Ref,
    Transmute,
    TypeDescriptor,
    contains_generic,
    generic_params,
    pointee_of,
)
from .semantics import TraitMap, resolve_bounds, visibility_of


class Scenario(str, Enum):
    CON_CON = "ConCon"
    CON_GEN = "ConGen"
    GEN_CON = "GenCon"


class Operation(str, Enum):
    CAST = "cast"
    TRANSMUTE = "transmute"


@dataclass(frozen=True, order=True)
class Site:
    function: str
    block: int
    index: int

    def __str__(self) -> str:
        return f"{self.function}:bb{self.block}[{self.index}]"


@dataclass(frozen=True)
class ConversionPair:
    src: TypeDescriptor
    dst: TypeDescriptor
    operation: Operation
    site: Site
    dst_local: int
    scenario: Scenario
    bounds: frozenset[str] = frozenset()
    dst_mutable: bool = False
    src_local: int | None = None

    def with_types(self, src: TypeDescriptor, dst: TypeDescriptor) -> "ConversionPair":
        from dataclasses import replace
        return replace(self, src=src, dst=dst, scenario=Scenario.CON_CON, bounds=frozenset())


def classify(src: TypeDescriptor, dst: TypeDescriptor) -> Scenario | None:
    """Scenario of a pointee pair; ``None`` for generic-to-generic."""
    sg, dg = contains_generic(src), contains_generic(dst)
    if sg and dg:
        return None
    if sg:
        return Scenario.GEN_CON
    if dg:
        return Scenario.CON_GEN
    return Scenario.CON_CON


def _conversions(fn: FunctionIR):
    for b, block in enumerate(fn.blocks):
        for i, st in enumerate(block.statements):
            if isinstance(st, Assign) and isinstance(st.rvalue, (CastPtrToPtr, Transmute)):
                yield b, i, st


def collect_conversion_pairs(
    fn: FunctionIR, trait_map: TraitMap | None = None, visible: bool = True
) -> list[ConversionPair]:
    """One pair per pointer cast or transmute, comparing pointee types.

    Generic-to-generic conversions are skipped.  When ``trait_map`` is
    given, bounds are resolved through it; otherwise the declared bounds
    are attached as written.
    """
    pairs = []
    for b, i, st in _conversions(fn):
        rv = st.rvalue
        src, dst = pointee_of(rv.src), pointee_of(rv.dst)
        scenario = classify(src, dst)
        if scenario is None:
            continue
        bounds: frozenset[str] = frozenset()
        if scenario is not Scenario.CON_CON:
            params = generic_params(src if scenario is Scenario.GEN_CON else dst)
            declared = [bd for p in params for bd in fn.bounds_of(p)]
            bounds = frozenset(
                resolve_bounds(declared, trait_map, visible) if trait_map is not None else declared
            )
        pairs.append(ConversionPair(
            src=src,
            dst=dst,
            operation=Operation.CAST if isinstance(rv, CastPtrToPtr) else Operation.TRANSMUTE,
            site=Site(fn.name, b, i),
            dst_local=st.lhs.local,
            scenario=scenario,
            bounds=bounds,
            dst_mutable=isinstance(rv.dst, (RawPtr, Ref)) and rv.dst.mutable,
            src_local=rv.operand.place.local if rv.operand.place is not None else None,
        ))
    return pairs


def gengen_sites(fn: FunctionIR) -> list[Site]:
    return [
        Site(fn.name, b, i)
        for b, i, st in _conversions(fn)
        if classify(pointee_of(st.rvalue.src), pointee_of(st.rvalue.dst)) is None
    ]


@dataclass
class FunctionRecord:
    name: str
    return_type: TypeDescriptor
    marked_unsafe: bool
    conversion_pairs: list[ConversionPair]
    trait_bounds: dict[str, frozenset[str]]
    alias_graph: AliasGraph
    visible: bool
    method_of: str | None = None
    skipped_gengen: list[Site] = field(default_factory=list)


def return_key(ty: TypeDescriptor, method_of: str | None = None) -> str:
    """Index key for constructor matching: aggregates match by name alone,
    and ``Self`` stands for the receiver type."""
    if isinstance(ty, Adt):
        name = method_of if ty.name == "Self" and method_of else ty.name
        return f"adt:{name}"
    return str(ty)


@dataclass
class PropertyGraph:
    records: dict[str, FunctionRecord]
    call_edges: list[tuple[str, str]]
    return_index: dict[str, list[str]]

    def to_json(self) -> dict:
        return {
            "functions": [
                {
                    "name": r.name,
                    "return_type": str(r.return_type),
                    "marked_unsafe": r.marked_unsafe,
                    "visible": r.visible,
                    "trait_bounds": {k: sorted(v) for k, v in sorted(r.trait_bounds.items())},
                    "conversion_pairs": [
                        {
                            "src": str(p.src), "dst": str(p.dst),
                            "operation": p.operation.value, "scenario": p.scenario.value,
                            "site": {"block": p.site.block, "statement": p.site.index},
                            "dst_local": p.dst_local, "bounds": sorted(p.bounds),
                        }
                        for p in r.conversion_pairs
                    ],
                    "alias_edges": sorted(r.alias_graph.edge_set()),
                }
                for r in self.records.values()
            ],
            "call_edges": [list(e) for e in self.call_edges],
            "return_index": self.return_index,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def build_return_index(records: dict[str, FunctionRecord]) -> dict[str, list[str]]:
    index: dict[str, list[str]] = {}
    for r in records.values():
        index.setdefault(return_key(r.return_type, r.method_of), []).append(r.name)
    return {k: sorted(v) for k, v in sorted(index.items())}


def build_record(fn: FunctionIR, pkg: PackageIR, trait_map: TraitMap) -> FunctionRecord:
    visible = visibility_of(fn, pkg)
    return FunctionRecord(
        name=fn.name,
        return_type=fn.return_type,
        marked_unsafe=fn.contains_unsafe,
        conversion_pairs=collect_conversion_pairs(fn, trait_map, visible),
        trait_bounds={
            g.name: frozenset(resolve_bounds(g.bounds, trait_map, visible)) for g in fn.generics
        },
        alias_graph=build_alias_graph(fn),
        visible=visible,
        method_of=fn.method_of,
        skipped_gengen=gengen_sites(fn),
    )


def build_property_graph(pkg: PackageIR, trait_map: TraitMap | None = None) -> PropertyGraph:
    if trait_map is None:
        trait_map = TraitMap.for_package(pkg)
    records = {fn.name: build_record(fn, pkg, trait_map) for fn in pkg.functions}
    edges = sorted({
        (fn.name, blk.terminator.callee)
        for fn in pkg.functions
        for blk in fn.blocks
        if isinstance(blk.terminator, Call)
    })
    return PropertyGraph(records, edges, build_return_index(records))


def find_constructors(ty: TypeDescriptor, g: PropertyGraph) -> list[str]:
    return list(g.return_index.get(return_key(ty), []))


def callers_of(name: str, g: PropertyGraph) -> list[str]:
    return sorted({a for a, b in g.call_edges if b == name})


def callees_of(name: str, g: PropertyGraph) -> list[str]:
    return sorted({b for a, b in g.call_edges if a == name})
